#include "polyvector/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "polyvector/errors.hpp"

namespace polyvector {

namespace {

std::string ascii_fold_lower(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

// Uppercases the first letter, handling the common two-byte accented
// lowercase letters.
void uppercase_first(std::string& text) {
    if (text.empty()) return;
    unsigned char c = static_cast<unsigned char>(text[0]);
    if (c >= 'a' && c <= 'z') {
        text[0] = static_cast<char>(c - 'a' + 'A');
    } else if (c == 0xC3 && text.size() > 1) {
        unsigned char next = static_cast<unsigned char>(text[1]);
        if (next >= 0xA0 && next <= 0xBE && next != 0xB7) {
            text[1] = static_cast<char>(next - 0x20);
        }
    }
}

std::string trim(std::string_view text) {
    std::size_t begin = 0, end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

}  // namespace

void SelectionPolicy::validate() const {
    if (token_budget == 0) throw Error::config("selection token budget must be positive");
    if (!(drop_fraction > 0.0) || !(drop_fraction < 1.0)) {
        throw Error::config("selection drop fraction must lie strictly between 0 and 1");
    }
    if (min_segments == 0) throw Error::config("selection minimum segments must be >= 1");
}

QueryNormalizer QueryNormalizer::with_default_rules() {
    QueryNormalizer normalizer;
    // Known conversational phrasings that need re-inflection, not just
    // marker stripping.
    normalizer.add_pair(
        "Por favor, você poderia me explicar quais direitos a Constituição garante aos povos "
        "indígenas?",
        "Direitos garantidos aos povos indígenas pela Constituição");
    normalizer.add_pair("Quais direitos são assegurados pelo art. 5º da Constituição?",
                        "Direitos assegurados pelo art. 5º da Constituição");
    for (const char* prefix : {
             "por favor, ", "por favor ", "você poderia me explicar ", "você poderia explicar ",
             "poderia me explicar ", "poderia explicar ", "me explique ", "explique-me ",
             "explique o ", "explique a ", "explique ", "o que diz o ", "o que diz a ",
             "o que diz ", "o que são ", "o que é ", "quais são os ", "quais são as ",
             "quais são ", "quais os ", "quais as ", "quais ", "qual é o ", "qual é a ",
             "qual o ", "qual a ", "qual ",
         }) {
        normalizer.add_prefix_rule(prefix);
    }
    return normalizer;
}

void QueryNormalizer::add_pair(std::string original, std::string normalized) {
    pairs_.emplace_back(std::move(original), std::move(normalized));
}

void QueryNormalizer::add_prefix_rule(std::string prefix) {
    prefixes_.push_back(ascii_fold_lower(prefix));
}

std::string QueryNormalizer::normalize(const std::string& query, bool* fell_back) const {
    if (fell_back) *fell_back = false;
    std::string text = trim(query);
    for (const auto& [original, normalized] : pairs_) {
        if (text == original) return normalized;
    }

    bool changed = true;
    while (changed) {
        changed = false;
        std::string lowered = ascii_fold_lower(text);
        for (const auto& prefix : prefixes_) {
            if (lowered.size() > prefix.size() && lowered.compare(0, prefix.size(), prefix) == 0) {
                text = trim(text.substr(prefix.size()));
                changed = true;
                break;
            }
        }
    }
    while (!text.empty() && (text.back() == '?' || text.back() == ' ')) text.pop_back();

    if (text.empty()) {  // nothing content-bearing left: keep the original
        if (fell_back) *fell_back = true;
        return trim(query);
    }
    uppercase_first(text);
    return text;
}

std::vector<SelectedItem> dedup_by_payload(const std::vector<SearchHit>& ranked,
                                           const VectorIndex& index) {
    std::vector<SelectedItem> out;
    std::unordered_set<std::string> seen;
    out.reserve(ranked.size());
    for (const auto& hit : ranked) {
        const auto& record = index.record(hit.record_index);
        if (!seen.insert(record.payload_chunk_id).second) continue;
        SelectedItem item;
        item.chunk_id = record.payload_chunk_id;
        item.matched_tag = record.tag;
        item.matched_display_label = record.display_label;
        item.similarity = hit.similarity;
        item.token_count = record.token_count;
        out.push_back(std::move(item));
    }
    return out;
}

std::vector<SelectedItem> prune_contained(const std::vector<SelectedItem>& ranked,
                                          const VectorIndex& index) {
    std::vector<SelectedItem> out;
    std::unordered_set<std::string> kept_ids;
    out.reserve(ranked.size());
    for (const auto& item : ranked) {
        bool contained = false;
        if (!is_reference_tag(item.matched_tag)) {
            if (const Chunk* chunk = index.find_chunk(item.chunk_id); chunk && chunk->unit) {
                for (const auto& ancestor : chunk->ancestor_chunk_ids) {
                    if (kept_ids.count(ancestor) != 0) {
                        contained = true;
                        break;
                    }
                }
            }
        }
        if (contained) continue;
        kept_ids.insert(item.chunk_id);
        out.push_back(item);
    }
    return out;
}

std::vector<SelectedItem> select_context(const std::vector<SelectedItem>& ranked,
                                         const SelectionPolicy& policy) {
    policy.validate();
    std::vector<SelectedItem> selected;
    if (ranked.empty()) return selected;

    const double top = ranked.front().similarity;
    const double cutoff = (1.0 - policy.drop_fraction) * top;
    std::size_t running_tokens = 0;
    for (const auto& candidate : ranked) {
        const bool floor_unmet = selected.size() < policy.min_segments;
        const bool within_cutoff = candidate.similarity >= cutoff;
        const bool under_budget = running_tokens < policy.token_budget;
        if (!floor_unmet && !(within_cutoff && under_budget)) break;
        selected.push_back(candidate);
        running_tokens += candidate.token_count;
    }
    return selected;
}

SelectionMetrics compute_metrics(const std::vector<SelectedItem>& items) {
    if (items.empty()) throw Error::structure("compute_metrics requires at least one item");
    SelectionMetrics metrics;
    metrics.segments = items.size();
    double sum = 0.0;
    metrics.max = items.front().similarity;
    metrics.min = items.front().similarity;
    for (const auto& item : items) {
        sum += item.similarity;
        metrics.max = std::max(metrics.max, item.similarity);
        metrics.min = std::min(metrics.min, item.similarity);
        metrics.total_tokens += item.token_count;
    }
    metrics.mean = sum / static_cast<double>(items.size());
    if (items.size() > 1) {
        double ss = 0.0;
        for (const auto& item : items) {
            double d = item.similarity - metrics.mean;
            ss += d * d;
        }
        metrics.stddev = std::sqrt(ss / static_cast<double>(items.size() - 1));
    }
    return metrics;
}

SelectionReport retrieve(const std::string& query, const VectorIndex& index,
                         EmbeddingProvider& provider, const QueryNormalizer& normalizer,
                         const RetrievalOptions& options) {
    options.policy.validate();
    if (provider.config().fingerprint() != index.manifest().provider_fingerprint) {
        throw Error::config("provider fingerprint does not match the index (" +
                            provider.config().fingerprint() + " vs " +
                            index.manifest().provider_fingerprint + ")");
    }

    SelectionReport report;
    report.query_used = options.normalize ? normalizer.normalize(query) : trim(query);
    if (report.query_used.empty()) throw Error::config("empty query");

    EmbeddingVector query_vec = provider.embed(report.query_used);
    auto hits = index.knn(query_vec, std::max<std::size_t>(options.candidate_pool, 1));
    auto unique = dedup_by_payload(hits, index);
    if (index.manifest().strategy == ChunkStrategy::Multilayer) {
        unique = prune_contained(unique, index);
    }
    report.items = select_context(unique, options.policy);
    if (!report.items.empty()) report.metrics = compute_metrics(report.items);
    report.metrics.segments = report.items.size();
    return report;
}

std::string assemble_prompt(const SelectionReport& report, const VectorIndex& index) {
    std::string out = report.query_used;
    out += "\n";
    for (std::size_t i = 0; i < report.items.size(); ++i) {
        const auto& item = report.items[i];
        out += "\n---\n";
        out += "[" + std::to_string(i + 1) + "] " + item.matched_display_label + "\n";
        out += index.chunk(item.chunk_id).text;
        out += "\n";
    }
    return out;
}

}  // namespace polyvector
