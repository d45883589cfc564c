#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "polyvector/embedding.hpp"
#include "polyvector/errors.hpp"

namespace polyvector {

namespace {

using json = nlohmann::json;

std::uint64_t fnv1a64_with(std::string_view data, std::uint64_t basis) {
    std::uint64_t hash = basis;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex128(std::string_view key) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t a = fnv1a64_with(key, 0xcbf29ce484222325ULL);
    std::uint64_t b = fnv1a64_with(key, 0x84222325cbf29ce4ULL);
    std::string out(32, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[a & 0xF];
        out[16 + i] = digits[b & 0xF];
        a >>= 4;
        b >>= 4;
    }
    return out;
}

struct EndpointParts {
    std::string base;  // scheme://host[:port]
    std::string path;
};

EndpointParts split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw Error::config("endpoint must be an http(s) URL: " + endpoint);
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

/// Content-addressed on-disk cache. One file per (fingerprint, input) pair,
/// named by a 128-bit hash of the key; the key is stored inside the record
/// and verified on load, so hash collisions degrade to a probe, never to a
/// wrong vector.
class VectorCache {
public:
    VectorCache(std::filesystem::path dir, std::string fingerprint)
        : dir_(std::move(dir)), fingerprint_(std::move(fingerprint)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw Error::io("cannot create cache directory " + dir_.string());
    }

    std::optional<EmbeddingVector> lookup(const std::string& input) {
        std::lock_guard lock(mutex_);
        const std::string key = make_key(input);
        for (int probe = 0;; ++probe) {
            auto file = record_path(key, probe);
            if (!std::filesystem::exists(file)) return std::nullopt;
            std::ifstream in(file, std::ios::binary);
            json record;
            try {
                in >> record;
            } catch (const json::exception&) {
                return std::nullopt;  // unreadable record: treat as miss, rewritten on store
            }
            if (record.value("key", "") != key) continue;
            EmbeddingVector vec;
            vec.values = record.at("vector").get<std::vector<double>>();
            return vec;
        }
    }

    void store(const std::string& input, const EmbeddingVector& vec) {
        std::lock_guard lock(mutex_);
        const std::string key = make_key(input);
        for (int probe = 0;; ++probe) {
            auto file = record_path(key, probe);
            if (std::filesystem::exists(file)) {
                std::ifstream in(file, std::ios::binary);
                json record;
                try {
                    in >> record;
                    if (record.value("key", "") != key) continue;  // occupied by a collision
                } catch (const json::exception&) {
                    // fall through and overwrite the corrupt record
                }
            }
            json record;
            record["key"] = key;
            record["vector"] = vec.values;
            std::ofstream out(file, std::ios::binary | std::ios::trunc);
            if (!out) throw Error::io("cannot write cache record " + file.string());
            out << record.dump() << '\n';
            return;
        }
    }

private:
    std::string make_key(const std::string& input) const { return fingerprint_ + '\n' + input; }

    std::filesystem::path record_path(const std::string& key, int probe) const {
        std::string name = hex128(key);
        if (probe > 0) name += "-" + std::to_string(probe);
        return dir_ / (name + ".json");
    }

    std::filesystem::path dir_;
    std::string fingerprint_;
    std::mutex mutex_;
};

/// Minimal JSON-over-HTTP client:
///   request  {"model": str, "inputs": [str], "dimensions": int}
///   response {"vectors": [[float]]}
/// Native vectors are truncated to target_dim client-side and, by default,
/// renormalized.
class RemoteProvider final : public EmbeddingProvider {
public:
    explicit RemoteProvider(ProviderConfig config)
        : config_(std::move(config)),
          in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(config_.max_in_flight, 1))) {
        config_.validate();
        if (config_.cache_path) {
            cache_ = std::make_unique<VectorCache>(*config_.cache_path, config_.fingerprint());
        }
    }

    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& inputs) override {
        if (inputs.empty()) throw Error::config("embed_batch: empty input list");
        for (const auto& input : inputs) {
            if (input.find_first_not_of(" \t\r\n") == std::string::npos) {
                throw Error::config("embed_batch: blank input");
            }
        }

        std::vector<EmbeddingVector> out(inputs.size());
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            if (cache_) {
                if (auto hit = cache_->lookup(inputs[i])) {
                    out[i] = std::move(*hit);
                    continue;
                }
            }
            missing.push_back(i);
        }

        for (std::size_t offset = 0; offset < missing.size(); offset += config_.batch_size) {
            std::size_t end = std::min(offset + config_.batch_size, missing.size());
            std::vector<std::string> batch;
            for (std::size_t i = offset; i < end; ++i) batch.push_back(inputs[missing[i]]);
            auto vectors = request_batch(batch);
            for (std::size_t i = offset; i < end; ++i) {
                auto vec = truncate_vector(vectors[i - offset], config_.target_dim,
                                           config_.renormalize_after_truncation);
                if (cache_) cache_->store(inputs[missing[i]], vec);
                out[missing[i]] = std::move(vec);
            }
        }
        return out;
    }

    const ProviderConfig& config() const override { return config_; }

private:
    std::vector<EmbeddingVector> request_batch(const std::vector<std::string>& batch) {
        json body;
        body["model"] = config_.model_name;
        body["inputs"] = batch;
        body["dimensions"] = config_.native_dim;
        const std::string payload = body.dump();

        auto parts = split_endpoint(config_.endpoint);
        httplib::Client client(parts.base);
        client.set_connection_timeout(10, 0);
        client.set_read_timeout(60, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        std::string last_error;
        for (std::size_t attempt = 0; attempt < std::max<std::size_t>(config_.max_retries, 1);
             ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(100u << (attempt - 1)));
            }
            in_flight_.acquire();
            httplib::Result res = client.Post(parts.path, headers, payload, "application/json");
            in_flight_.release();
            if (!res) {
                last_error = "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = "server error " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) {
                throw Error::provider("embedding service rejected request with status " +
                                      std::to_string(res->status));
            }
            return parse_response(res->body, batch.size());
        }
        throw Error::provider("embedding service unreachable after " +
                              std::to_string(config_.max_retries) + " attempts: " + last_error);
    }

    std::vector<EmbeddingVector> parse_response(const std::string& body,
                                                std::size_t expected) const {
        json doc;
        try {
            doc = json::parse(body);
        } catch (const json::exception& e) {
            throw Error::provider(std::string("malformed embedding response: ") + e.what());
        }
        if (!doc.contains("vectors") || !doc["vectors"].is_array() ||
            doc["vectors"].size() != expected) {
            throw Error::provider("embedding response vector count mismatch");
        }
        std::vector<EmbeddingVector> out;
        out.reserve(expected);
        for (const auto& row : doc["vectors"]) {
            EmbeddingVector vec;
            vec.values = row.get<std::vector<double>>();
            out.push_back(std::move(vec));
        }
        return out;
    }

    ProviderConfig config_;
    std::unique_ptr<VectorCache> cache_;
    std::counting_semaphore<256> in_flight_;
};

}  // namespace

namespace detail {

std::unique_ptr<EmbeddingProvider> make_remote_provider(const ProviderConfig& config) {
    return std::make_unique<RemoteProvider>(config);
}

}  // namespace detail

}  // namespace polyvector
