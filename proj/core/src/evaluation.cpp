#include "polyvector/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "polyvector/errors.hpp"

namespace polyvector {

namespace {

using json = nlohmann::json;

std::ofstream open_out(const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error::io("cannot write " + file.string());
    return out;
}

std::string expected_key(const MethodConfig& method) {
    if (method.poly) return "poly";
    return std::string(strategy_name(method.strategy));
}

std::optional<std::size_t> find_hit_rank(const SelectionReport& report, const VectorIndex& index,
                                         const std::string& designation) {
    for (std::size_t i = 0; i < report.items.size(); ++i) {
        const Chunk* chunk = index.find_chunk(report.items[i].chunk_id);
        if (chunk && chunk->display_label == designation) return i + 1;
    }
    return std::nullopt;
}

}  // namespace

std::string format_fixed4(double value) {
    // Half-up at the 4th decimal: ties go toward +infinity.
    double scaled = std::floor(value * 10000.0 + 0.5) / 10000.0;
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.4f", scaled);
    return buffer;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::vector<QuerySpec> load_query_suite(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error::io("cannot open query suite " + file.string());
    std::vector<QuerySpec> suite;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw Error::parse("query suite line " + std::to_string(line_no) + ": " + e.what());
        }
        QuerySpec spec;
        try {
            spec.id = doc.at("id").get<std::string>();
            spec.original = doc.at("original").get<std::string>();
            if (doc.contains("normalized") && !doc["normalized"].is_null()) {
                spec.normalized = doc["normalized"].get<std::string>();
            }
            if (doc.contains("expected_top1")) {
                for (const auto& [key, value] : doc["expected_top1"].items()) {
                    spec.expected_top1[key] = value.get<std::string>();
                }
            }
        } catch (const json::exception& e) {
            throw Error::parse("query suite line " + std::to_string(line_no) + ": " + e.what());
        }
        suite.push_back(std::move(spec));
    }
    for (std::size_t i = 0; i < suite.size(); ++i) {
        for (std::size_t j = i + 1; j < suite.size(); ++j) {
            if (suite[i].id == suite[j].id) {
                throw Error::parse("duplicate query id '" + suite[i].id + "' in suite");
            }
        }
    }
    return suite;
}

std::vector<ExperimentResult> run_matrix(const std::vector<QuerySpec>& suite,
                                         const std::vector<MethodConfig>& methods,
                                         const IndexSource& indices, EmbeddingProvider& provider,
                                         const QueryNormalizer& normalizer,
                                         const SelectionPolicy& policy) {
    std::vector<ExperimentResult> results;
    results.reserve(suite.size() * methods.size());
    for (const auto& method : methods) {
        const VectorIndex& index = indices(method);
        for (const auto& query : suite) {
            RetrievalOptions options;
            options.policy = policy;
            options.normalize = method.normalize_query;

            QueryNormalizer local = normalizer;
            if (query.normalized) local.add_pair(query.original, *query.normalized);

            ExperimentResult result;
            result.method_id = method.id;
            result.query_id = query.id;
            result.report = retrieve(query.original, index, provider, local, options);

            auto key = query.expected_top1.find(expected_key(method));
            if (key == query.expected_top1.end()) {
                key = query.expected_top1.find(std::string(strategy_name(method.strategy)));
            }
            if (key != query.expected_top1.end()) {
                result.expected_hit_rank = find_hit_rank(result.report, index, key->second);
            }
            results.push_back(std::move(result));
        }
    }
    return results;
}

void emit_tables(const std::vector<ExperimentResult>& results,
                 const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error::io("cannot create output directory " + out_dir.string());

    std::vector<std::string> query_order;
    for (const auto& result : results) {
        if (std::find(query_order.begin(), query_order.end(), result.query_id) ==
            query_order.end()) {
            query_order.push_back(result.query_id);
        }
    }
    if (query_order.empty()) {
        auto summary = open_out(out_dir / "question_none_summary.csv");
        summary << "method,min_sim,max_sim,mean_sim,std_dev,tokens,segments\n";
        auto items = open_out(out_dir / "question_none_items.csv");
        items << "method,rank,tag,label,tokens,similarity\n";
        return;
    }

    for (const auto& query_id : query_order) {
        auto summary = open_out(out_dir / ("question_" + query_id + "_summary.csv"));
        summary << "method,min_sim,max_sim,mean_sim,std_dev,tokens,segments\n";
        auto items = open_out(out_dir / ("question_" + query_id + "_items.csv"));
        items << "method,rank,tag,label,tokens,similarity\n";
        for (const auto& result : results) {
            if (result.query_id != query_id) continue;
            const auto& m = result.report.metrics;
            summary << result.method_id << ',' << format_fixed4(m.min) << ','
                    << format_fixed4(m.max) << ',' << format_fixed4(m.mean) << ','
                    << format_fixed4(m.stddev) << ',' << m.total_tokens << ',' << m.segments
                    << '\n';
            for (std::size_t rank = 0; rank < result.report.items.size(); ++rank) {
                const auto& item = result.report.items[rank];
                items << result.method_id << ',' << rank + 1 << ','
                      << csv_escape(std::string(tag_name(item.matched_tag))) << ','
                      << csv_escape(item.matched_display_label) << ',' << item.token_count << ','
                      << format_fixed4(item.similarity) << '\n';
            }
        }
    }
}

void emit_heatmap(const std::vector<ExperimentResult>& results,
                  const std::filesystem::path& file) {
    std::vector<std::string> query_order;
    std::vector<char> method_order;
    for (const auto& result : results) {
        if (std::find(query_order.begin(), query_order.end(), result.query_id) ==
            query_order.end()) {
            query_order.push_back(result.query_id);
        }
        if (std::find(method_order.begin(), method_order.end(), result.method_id) ==
            method_order.end()) {
            method_order.push_back(result.method_id);
        }
    }
    auto out = open_out(file);
    out << "method";
    for (const auto& query_id : query_order) out << ',' << csv_escape(query_id);
    out << '\n';
    for (char method_id : method_order) {
        out << method_id;
        for (const auto& query_id : query_order) {
            auto match = std::find_if(results.begin(), results.end(), [&](const auto& r) {
                return r.method_id == method_id && r.query_id == query_id;
            });
            out << ',';
            if (match != results.end()) out << format_fixed4(match->report.metrics.max);
        }
        out << '\n';
    }
}

void emit_boxplot_data(const std::vector<ExperimentResult>& results,
                       const std::filesystem::path& file) {
    auto out = open_out(file);
    out << "method,query,similarity\n";
    for (const auto& result : results) {
        for (const auto& item : result.report.items) {
            out << result.method_id << ',' << csv_escape(result.query_id) << ','
                << format_fixed4(item.similarity) << '\n';
        }
    }
}

void emit_results_summary(const std::vector<ExperimentResult>& results,
                          const std::filesystem::path& file) {
    auto out = open_out(file);
    out << "method,query,max_sim,segments,tokens,expected_hit_rank,hit_at_1\n";
    for (const auto& result : results) {
        out << result.method_id << ',' << csv_escape(result.query_id) << ','
            << format_fixed4(result.report.metrics.max) << ',' << result.report.metrics.segments
            << ',' << result.report.metrics.total_tokens << ',';
        if (result.expected_hit_rank) {
            out << *result.expected_hit_rank << ','
                << (*result.expected_hit_rank == 1 ? "1" : "0");
        } else {
            out << ",";
        }
        out << '\n';
    }
}

}  // namespace polyvector
