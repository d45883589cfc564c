#include "polyvector/embedding.hpp"

#include <cctype>
#include <cmath>
#include <cstring>

#include "polyvector/errors.hpp"
#include "polyvector/tokenizer.hpp"

namespace polyvector {

namespace {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL) {
    std::uint64_t hash = basis;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// ASCII lowercase plus the common two-byte accented uppercase letters.
std::string fold_case(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (c >= 'A' && c <= 'Z') {
            out += static_cast<char>(c - 'A' + 'a');
        } else if (c == 0xC3 && i + 1 < text.size()) {
            unsigned char next = static_cast<unsigned char>(text[i + 1]);
            out += static_cast<char>(c);
            if (next >= 0x80 && next <= 0x9E && next != 0x97) {
                out += static_cast<char>(next + 0x20);
            } else {
                out += static_cast<char>(next);
            }
            ++i;
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

/// Hashed bag of token 1..3-grams with signed random projection. String
/// overlap between two inputs translates into cosine similarity, which
/// keeps label-match retrieval tests fully offline.
class DeterministicProvider final : public EmbeddingProvider {
public:
    explicit DeterministicProvider(ProviderConfig config) : config_(std::move(config)) {
        config_.validate();
    }

    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& inputs) override {
        if (inputs.empty()) throw Error::config("embed_batch: empty input list");
        std::vector<EmbeddingVector> out;
        out.reserve(inputs.size());
        for (const auto& input : inputs) out.push_back(embed_one(input));
        return out;
    }

    const ProviderConfig& config() const override { return config_; }

private:
    EmbeddingVector embed_one(const std::string& input) const {
        const std::string folded = fold_case(input);
        auto tokens = tokenizer_.tokens(folded);
        // Bare punctuation carries no referential or semantic signal.
        std::erase_if(tokens, [](const std::string& token) {
            return token.size() == 1 && std::ispunct(static_cast<unsigned char>(token[0]));
        });
        if (tokens.empty()) throw Error::config("embed_batch: blank input");

        EmbeddingVector vec;
        vec.values.assign(config_.target_dim, 0.0);
        const std::uint64_t seed_mix = splitmix64(config_.seed);
        for (std::size_t n = 1; n <= 3; ++n) {
            if (tokens.size() < n) break;
            for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
                std::string feature;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j > 0) feature += '\x1f';
                    feature += tokens[i + j];
                }
                std::uint64_t h = splitmix64(fnv1a64(feature) ^ seed_mix);
                double sign = (h >> 63) ? 1.0 : -1.0;
                vec.values[h % config_.target_dim] += sign;
            }
        }
        vec.normalize();
        return vec;
    }

    ProviderConfig config_;
    BasicTokenizer tokenizer_;
};

}  // namespace

double EmbeddingVector::norm() const {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

void EmbeddingVector::normalize() {
    double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw Error::structure("cannot normalize zero or non-finite vector");
    }
    for (double& v : values) v /= n;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error::config("cosine: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                            std::to_string(b.dim()) + ")");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw Error::structure("cosine: zero vector");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string ProviderConfig::fingerprint() const {
    std::string out;
    if (kind == Kind::Deterministic) {
        out = "deterministic:dim=" + std::to_string(target_dim) + ":seed=" + std::to_string(seed);
    } else {
        out = "remote:model=" + model_name + ":native=" + std::to_string(native_dim) +
              ":dim=" + std::to_string(target_dim) +
              ":renorm=" + (renormalize_after_truncation ? "1" : "0");
    }
    return out;
}

void ProviderConfig::validate() const {
    if (target_dim == 0) throw Error::config("provider target_dim must be positive");
    if (target_dim > native_dim) {
        throw Error::config("provider target_dim " + std::to_string(target_dim) +
                            " exceeds native_dim " + std::to_string(native_dim));
    }
    if (batch_size == 0) throw Error::config("provider batch_size must be positive");
    if (kind == Kind::Remote && endpoint.empty()) {
        throw Error::config("remote provider requires an endpoint URL");
    }
}

EmbeddingVector EmbeddingProvider::embed(const std::string& input) {
    return embed_batch({input}).front();
}

EmbeddingVector truncate_vector(const EmbeddingVector& native, std::size_t target_dim,
                                bool renormalize) {
    if (native.dim() < target_dim) {
        throw Error::provider("native vector dimension " + std::to_string(native.dim()) +
                              " below target " + std::to_string(target_dim));
    }
    EmbeddingVector out;
    out.values.assign(native.values.begin(), native.values.begin() + target_dim);
    if (renormalize) out.normalize();
    return out;
}

namespace detail {
std::unique_ptr<EmbeddingProvider> make_remote_provider(const ProviderConfig& config);
}

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& config) {
    config.validate();
    if (config.kind == ProviderConfig::Kind::Deterministic) {
        return std::make_unique<DeterministicProvider>(config);
    }
    return detail::make_remote_provider(config);
}

std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& inputs,
                                         const ProviderConfig& config) {
    return make_provider(config)->embed_batch(inputs);
}

}  // namespace polyvector
