#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace polyvector {

struct TokenSpan {
    std::size_t begin;
    std::size_t end;  // one past the last byte
};

/// Pluggable tokenization. Chunk token counts and blind windows are defined
/// in terms of whichever tokenizer the caller injects.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    /// Byte spans of the tokens of `text`, in order.
    virtual std::vector<TokenSpan> spans(std::string_view text) const = 0;

    std::size_t count(std::string_view text) const { return spans(text).size(); }

    std::vector<std::string> tokens(std::string_view text) const;
};

/// Default desk-scale tokenizer: maximal runs of non-space, non-punctuation
/// bytes form word tokens; each ASCII punctuation byte is its own token.
class BasicTokenizer final : public Tokenizer {
public:
    std::vector<TokenSpan> spans(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

}  // namespace polyvector
