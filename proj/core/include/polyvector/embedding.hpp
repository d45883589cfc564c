#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace polyvector {

/// A fixed-dimension embedding. Providers return unit-normalized vectors;
/// all similarity math runs in double precision.
struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    double norm() const;
    /// Scales to unit L2 norm; throws ErrorKind::Structure on zero/non-finite norm.
    void normalize();
};

/// Standard cosine similarity; equals the dot product for unit vectors.
/// Throws ErrorKind::Config on dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct ProviderConfig {
    enum class Kind { Deterministic, Remote };

    Kind kind = Kind::Deterministic;
    std::string endpoint;    // remote: full URL, e.g. "http://127.0.0.1:8080/embed"
    std::string model_name;  // remote: forwarded in the request body
    std::size_t native_dim = 3072;
    std::size_t target_dim = 256;
    std::size_t batch_size = 64;
    std::optional<std::filesystem::path> cache_path;
    std::uint64_t seed = 42;  // deterministic provider
    bool renormalize_after_truncation = true;
    std::size_t max_in_flight = 4;
    std::size_t max_retries = 3;
    std::string api_key_env = "POLYVECTOR_API_KEY";

    /// Identifies the vector space: provider kind, model, dimension, and the
    /// knobs that change produced vectors. Part of every index manifest and
    /// cache key.
    std::string fingerprint() const;
    void validate() const;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// One unit vector per input, same order. Throws ErrorKind::Config on
    /// blank input and ErrorKind::Provider when the backend fails after
    /// retries. Safe to call from multiple threads.
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& inputs) = 0;

    virtual const ProviderConfig& config() const = 0;

    EmbeddingVector embed(const std::string& input);
};

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& config);

/// Convenience form mirroring the one-shot call shape.
std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& inputs,
                                         const ProviderConfig& config);

/// Matryoshka-style truncation: keep the first `target_dim` components and
/// (optionally) rescale to unit norm.
EmbeddingVector truncate_vector(const EmbeddingVector& native, std::size_t target_dim,
                                bool renormalize);

}  // namespace polyvector
