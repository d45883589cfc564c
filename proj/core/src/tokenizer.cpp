#include "polyvector/tokenizer.hpp"

#include <cctype>

namespace polyvector {

std::vector<std::string> Tokenizer::tokens(std::string_view text) const {
    std::vector<std::string> out;
    for (const auto& span : spans(text)) {
        out.emplace_back(text.substr(span.begin, span.end - span.begin));
    }
    return out;
}

std::vector<TokenSpan> BasicTokenizer::spans(std::string_view text) const {
    std::vector<TokenSpan> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (c < 0x80 && std::isspace(c)) {
            ++i;
            continue;
        }
        if (c < 0x80 && std::ispunct(c)) {
            out.push_back({i, i + 1});
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < n) {
            unsigned char w = static_cast<unsigned char>(text[i]);
            if (w < 0x80 && (std::isspace(w) || std::ispunct(w))) break;
            ++i;
        }
        out.push_back({begin, i});
    }
    return out;
}

const Tokenizer& default_tokenizer() {
    static const BasicTokenizer instance;
    return instance;
}

}  // namespace polyvector
