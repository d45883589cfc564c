#pragma once

#include <string>
#include <utility>
#include <vector>

#include "polyvector/chunking.hpp"
#include "polyvector/embedding.hpp"
#include "polyvector/index.hpp"

namespace polyvector {

struct SelectionPolicy {
    std::size_t token_budget = 4000;
    double drop_fraction = 0.20;  // relative drop from the top score that cuts selection off
    std::size_t min_segments = 5;

    /// Throws ErrorKind::Config when outside 0 < drop < 1, budget > 0,
    /// min_segments >= 1.
    void validate() const;
};

/// One retrieved candidate after payload deduplication: the chunk, the
/// record that scored best for it, and that record's similarity.
struct SelectedItem {
    std::string chunk_id;
    EmbedTypeTag matched_tag{};
    std::string matched_display_label;
    double similarity{};
    std::size_t token_count{};
};

struct SelectionMetrics {
    double max{};
    double mean{};
    double min{};
    double stddev{};  // sample standard deviation (n-1); 0 for a single item
    std::size_t segments{};
    std::size_t total_tokens{};
};

struct SelectionReport {
    std::vector<SelectedItem> items;  // rank order
    SelectionMetrics metrics;
    std::string query_used;  // query text actually embedded (post-normalization)
};

/// Strips politeness/interrogative phrasing from a query. Exact known
/// originals map through a lookup table; otherwise leading speech-act
/// markers and trailing question marks are removed. Idempotent; an empty
/// result falls back to the original text.
class QueryNormalizer {
public:
    static QueryNormalizer with_default_rules();

    /// `fell_back`, when given, reports that stripping left nothing
    /// content-bearing and the original query was kept.
    std::string normalize(const std::string& query, bool* fell_back = nullptr) const;

    void add_pair(std::string original, std::string normalized);
    void add_prefix_rule(std::string prefix);  // matched case-insensitively at the start

private:
    std::vector<std::pair<std::string, std::string>> pairs_;
    std::vector<std::string> prefixes_;
};

/// Collapses ranked record hits sharing a payload chunk; the score kept is
/// the maximum (first hit in rank order) and the matched tag is the one
/// achieving it.
std::vector<SelectedItem> dedup_by_payload(const std::vector<SearchHit>& ranked,
                                           const VectorIndex& index);

/// Containment pruning: drops a chunk when an ancestor unit's chunk ranks
/// earlier in the list. Applies only to content-matched items with unit
/// lineage; reference-matched hits and blind windows are never pruned.
std::vector<SelectedItem> prune_contained(const std::vector<SelectedItem>& ranked,
                                          const VectorIndex& index);

/// Rank-order prefix selection: candidates are taken in order while the
/// minimum-segments floor is unmet (the floor overrides everything), and
/// afterwards while the similarity stays within drop_fraction of the top
/// score and the running token total is still under budget when the
/// candidate is considered. The chunk that crosses the budget is included.
std::vector<SelectedItem> select_context(const std::vector<SelectedItem>& ranked,
                                         const SelectionPolicy& policy);

SelectionMetrics compute_metrics(const std::vector<SelectedItem>& items);

struct RetrievalOptions {
    SelectionPolicy policy;
    std::size_t candidate_pool = 100;  // records fetched before selection
    bool normalize = false;
};

/// Full pipeline: optional normalization, embedding, unified kNN, payload
/// dedup, containment pruning (multilayer indices only), selection, metrics.
SelectionReport retrieve(const std::string& query, const VectorIndex& index,
                         EmbeddingProvider& provider, const QueryNormalizer& normalizer,
                         const RetrievalOptions& options);

/// Plain-text prompt artifact: the query followed by the selected chunk
/// texts in rank order.
std::string assemble_prompt(const SelectionReport& report, const VectorIndex& index);

}  // namespace polyvector
