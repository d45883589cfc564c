#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polyvector/index.hpp"
#include "polyvector/method.hpp"
#include "polyvector/retrieval.hpp"

namespace polyvector {

struct QuerySpec {
    std::string id;
    std::string original;
    std::optional<std::string> normalized;  // overrides the rule engine when present
    /// Expected top-1 chunk designation keyed by "blind", "flat",
    /// "multilayer", or "poly" (display-label form, "Chunk #n" for windows).
    std::map<std::string, std::string> expected_top1;
};

struct ExperimentResult {
    char method_id{};
    std::string query_id;
    SelectionReport report;
    std::optional<std::size_t> expected_hit_rank;  // 1-based rank of the expected designation
};

/// JSON-lines suite file: one object per query.
std::vector<QuerySpec> load_query_suite(const std::filesystem::path& file);

using IndexSource = std::function<const VectorIndex&(const MethodConfig&)>;

/// Runs |suite| x |methods| retrievals. Deterministic given cached
/// embeddings; a missing index surfaces as the source's error.
std::vector<ExperimentResult> run_matrix(const std::vector<QuerySpec>& suite,
                                         const std::vector<MethodConfig>& methods,
                                         const IndexSource& indices, EmbeddingProvider& provider,
                                         const QueryNormalizer& normalizer,
                                         const SelectionPolicy& policy);

/// Per-question CSVs: question_<id>_summary.csv with one row per method
/// (min/max/mean/stddev, tokens, segments) and question_<id>_items.csv with
/// the selected items. Numbers are rounded half-up to 4 decimals at
/// emission only.
void emit_tables(const std::vector<ExperimentResult>& results,
                 const std::filesystem::path& out_dir);

/// Max-similarity matrix, methods as rows and queries as columns.
void emit_heatmap(const std::vector<ExperimentResult>& results,
                  const std::filesystem::path& file);

/// Long-format (method, query, similarity) rows for box plots.
void emit_boxplot_data(const std::vector<ExperimentResult>& results,
                       const std::filesystem::path& file);

/// Regression summary with the expected-top-1 hit column.
void emit_results_summary(const std::vector<ExperimentResult>& results,
                          const std::filesystem::path& file);

/// Fixed 4-decimal formatting, ties rounded half-up.
std::string format_fixed4(double value);

/// Minimal CSV helpers shared by the emitters and their tests.
std::string csv_escape(const std::string& field);
std::vector<std::string> csv_split(const std::string& line);

}  // namespace polyvector
