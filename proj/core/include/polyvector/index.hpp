#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "polyvector/chunking.hpp"
#include "polyvector/document_model.hpp"
#include "polyvector/embedding.hpp"
#include "polyvector/method.hpp"
#include "polyvector/tokenizer.hpp"

namespace polyvector {

/// One vector of the unified search space plus the mapping back to the
/// payload chunk it retrieves.
struct EmbeddingRecord {
    std::string record_id;  // zero-padded, so lexicographic order == build order
    EmbedTypeTag tag{};
    std::string payload_chunk_id;
    std::string display_label;
    std::string urn;               // empty when the payload has no identifier
    std::size_t token_count{};     // of the payload chunk
};

struct IndexManifest {
    char method_id{};
    ChunkStrategy strategy{};
    bool poly{};
    std::size_t record_count{};
    std::size_t content_count{};
    std::size_t unit_count{};  // units carrying reference triples; 0 when !poly
    std::size_t dim{};
    std::string provider_fingerprint;
    ProviderConfig provider;       // enough to re-create the query-side provider
    std::string vector_precision;  // "float32" or "float64"
    bool normalize_query{};
};

struct SearchHit {
    std::size_t record_index{};
    double similarity{};
};

struct IndexBuildInputs {
    std::vector<Chunk> content_chunks;
    std::vector<Chunk> payload_only_chunks;  // stored but not embedded as content
    std::vector<ReferenceRecord> references;
};

struct IndexBuildOptions {
    bool store_double = false;
};

/// Unified embedding space over content and reference records. Immutable
/// after build/load; concurrent readers are safe.
class VectorIndex {
public:
    /// Embeds every content chunk and reference record and assembles the
    /// searchable space. Provider failures propagate without leaving any
    /// on-disk state behind (persistence only happens in save()).
    static VectorIndex build(const MethodConfig& method, IndexBuildInputs inputs,
                             EmbeddingProvider& provider, const IndexBuildOptions& options = {});

    /// Assembles an index from pre-computed parts (used by load() and by
    /// tests that need full control over the stored vectors).
    static VectorIndex assemble(IndexManifest manifest, std::vector<EmbeddingRecord> records,
                                std::vector<EmbeddingVector> vectors, std::vector<Chunk> chunks);

    /// Exact top-k by cosine, descending; ties broken by higher payload
    /// token count, then lexicographically smaller record id. k larger than
    /// the record count returns everything ranked. Throws on empty index.
    std::vector<SearchHit> knn(const EmbeddingVector& query, std::size_t k) const;

    const IndexManifest& manifest() const { return manifest_; }
    const std::vector<EmbeddingRecord>& records() const { return records_; }
    const EmbeddingRecord& record(std::size_t index) const { return records_.at(index); }
    const Chunk* find_chunk(const std::string& chunk_id) const;
    const Chunk& chunk(const std::string& chunk_id) const;  // throws when missing
    std::size_t chunk_count() const { return chunks_.size(); }

    /// Directory layout: manifest.json (human-readable), vectors.bin
    /// (little-endian float array), records.jsonl + chunks.jsonl (UTF-8
    /// JSON-lines metadata). Writing the same index twice is byte-identical.
    void save(const std::filesystem::path& dir) const;
    static VectorIndex load(const std::filesystem::path& dir);

private:
    IndexManifest manifest_;
    std::vector<EmbeddingRecord> records_;
    std::vector<EmbeddingVector> vectors_;
    std::vector<double> row_norms_;
    std::vector<Chunk> chunks_;
    std::unordered_map<std::string, std::size_t> chunk_by_id_;

    void rebuild_lookup();
};

/// Produces the content chunks, payload store, and reference records for
/// one retrieval configuration.
struct CorpusOptions {
    std::size_t window_tokens = 800;
    std::size_t overlap_tokens = 400;
    ReferenceOptions references;
};

IndexBuildInputs assemble_method_inputs(const DocumentTree& tree, const MethodConfig& method,
                                        const Tokenizer& tokenizer, const CorpusOptions& options = {});

/// End-to-end: chunk, embed, and assemble an index for a method.
VectorIndex build_method_index(const DocumentTree& tree, const MethodConfig& method,
                               EmbeddingProvider& provider, const Tokenizer& tokenizer,
                               const CorpusOptions& corpus = {},
                               const IndexBuildOptions& build = {});

}  // namespace polyvector
