#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "polyvector/errors.hpp"
#include "polyvector/evaluation.hpp"
#include "polyvector/index.hpp"
#include "polyvector/ingestion.hpp"
#include "polyvector/retrieval.hpp"

namespace pv = polyvector;

namespace {

// Exit codes: 0 ok, 2 config, 3 parse, 4 provider, 5 io, 6 structure.
int exit_code_for(pv::ErrorKind kind) {
    switch (kind) {
        case pv::ErrorKind::Config: return 2;
        case pv::ErrorKind::Parse: return 3;
        case pv::ErrorKind::Provider: return 4;
        case pv::ErrorKind::Io: return 5;
        case pv::ErrorKind::Structure: return 6;
    }
    return 1;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pv::Error::io("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct ProviderFlags {
    std::string kind = "deterministic";
    std::string endpoint;
    std::string model;
    std::size_t native_dim = 3072;
    std::size_t dim = 256;
    std::uint64_t seed = 42;
    std::string cache_dir;
    bool raw_truncation = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--provider", kind, "Embedding provider: deterministic or remote")
            ->check(CLI::IsMember({"deterministic", "remote"}));
        cmd->add_option("--endpoint", endpoint, "Remote provider URL");
        cmd->add_option("--model", model, "Remote model name");
        cmd->add_option("--native-dim", native_dim, "Native dimension returned by the service");
        cmd->add_option("--dim", dim, "Stored embedding dimension after truncation");
        cmd->add_option("--seed", seed, "Deterministic provider seed");
        cmd->add_option("--cache", cache_dir, "Embedding cache directory (remote provider)");
        cmd->add_flag("--raw-truncation", raw_truncation,
                      "Skip renormalization after truncating native vectors");
    }

    pv::ProviderConfig to_config() const {
        pv::ProviderConfig config;
        config.kind = kind == "remote" ? pv::ProviderConfig::Kind::Remote
                                       : pv::ProviderConfig::Kind::Deterministic;
        config.endpoint = endpoint;
        config.model_name = model;
        config.native_dim = kind == "remote" ? native_dim : dim;
        config.target_dim = dim;
        config.seed = seed;
        config.renormalize_after_truncation = !raw_truncation;
        if (!cache_dir.empty()) config.cache_path = cache_dir;
        return config;
    }
};

struct PolicyFlags {
    std::size_t budget = 4000;
    double drop = 0.20;
    std::size_t min_segments = 5;

    void attach(CLI::App* cmd) {
        cmd->add_option("--budget", budget, "Context token budget")->capture_default_str();
        cmd->add_option("--drop", drop, "Relative similarity drop cutoff")->capture_default_str();
        cmd->add_option("--min-segments", min_segments, "Minimum selected segments")
            ->capture_default_str();
    }

    pv::SelectionPolicy to_policy() const { return {budget, drop, min_segments}; }
};

void print_report(const pv::SelectionReport& report) {
    std::cout << "query: " << report.query_used << "\n";
    std::cout << "rank  sim     tokens  tag    label\n";
    for (std::size_t i = 0; i < report.items.size(); ++i) {
        const auto& item = report.items[i];
        std::printf("%-4zu  %.4f  %-6zu  %-5s  %s\n", i + 1, item.similarity, item.token_count,
                    std::string(pv::tag_name(item.matched_tag)).c_str(),
                    item.matched_display_label.c_str());
    }
    const auto& m = report.metrics;
    std::cout << "segments=" << m.segments << " total_tokens=" << m.total_tokens
              << " max=" << pv::format_fixed4(m.max) << " mean=" << pv::format_fixed4(m.mean)
              << " min=" << pv::format_fixed4(m.min) << " stddev=" << pv::format_fixed4(m.stddev)
              << "\n";
}

pv::NormIdentity norm_from(const std::string& name, const std::string& short_name,
                           const std::string& urn_base) {
    return {name, short_name, urn_base};
}

int run(int argc, char** argv) {
    CLI::App app{"Poly-vector retrieval over structured legal documents"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse a corpus into a structural tree");
    std::string corpus_path, tree_out;
    std::string norm_name = "Constituição da República Federativa do Brasil de 1988";
    std::string norm_short = "CRFB";
    std::string urn_base = "urn:lex:br:federal:constituicao:1988-10-05;1988";
    ingest->add_option("--corpus", corpus_path, "Plain-text corpus file")->required();
    ingest->add_option("--out", tree_out, "Tree artifact output path")->required();
    ingest->add_option("--norm-name", norm_name, "Full norm name");
    ingest->add_option("--norm-short", norm_short, "Display abbreviation");
    ingest->add_option("--urn-base", urn_base, "urn:lex base (no fragment)");

    // index
    auto* index_cmd = app.add_subcommand("index", "Build an index for one method");
    std::string tree_path, index_out;
    std::string method_id = "g";
    std::size_t window = 800, overlap = 400;
    bool store_double = false, embed_display = false;
    ProviderFlags index_provider;
    index_cmd->add_option("--tree", tree_path, "Tree artifact")->required();
    index_cmd->add_option("--method", method_id, "Method id (a..h)")->required();
    index_cmd->add_option("--out", index_out, "Index output directory")->required();
    index_cmd->add_option("--window", window, "Blind window tokens")->capture_default_str();
    index_cmd->add_option("--overlap", overlap, "Blind overlap tokens")->capture_default_str();
    index_cmd->add_flag("--store-double", store_double, "Persist float64 vectors");
    index_cmd->add_flag("--embed-display-labels", embed_display,
                        "Embed short display labels instead of canonical labels");
    index_provider.attach(index_cmd);

    // query
    auto* query_cmd = app.add_subcommand("query", "Run one query against an index");
    std::string query_index, query_text, prompt_out, cache_override;
    std::size_t pool = 100;
    bool force_normalize = false, no_normalize = false;
    PolicyFlags query_policy;
    query_cmd->add_option("--index", query_index, "Index directory")->required();
    query_cmd->add_option("text", query_text, "Query text")->required();
    query_cmd->add_option("--k", pool, "Candidate pool before selection")->capture_default_str();
    query_cmd->add_flag("--normalize", force_normalize, "Normalize the query");
    query_cmd->add_flag("--no-normalize", no_normalize, "Skip normalization even for norm methods");
    query_cmd->add_option("--prompt-out", prompt_out, "Write the prompt artifact here");
    query_cmd->add_option("--cache", cache_override, "Embedding cache directory");
    query_policy.attach(query_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Run a query suite across methods");
    std::string index_root, suite_path, eval_out, methods = "abcdefgh";
    std::string eval_cache;
    PolicyFlags eval_policy;
    eval_cmd->add_option("--index-root", index_root, "Directory holding per-method indices")
        ->required();
    eval_cmd->add_option("--suite", suite_path, "Query suite (JSON lines)")->required();
    eval_cmd->add_option("--out", eval_out, "Output directory")->required();
    eval_cmd->add_option("--methods", methods, "Method ids to run")->capture_default_str();
    eval_cmd->add_option("--cache", eval_cache, "Embedding cache directory");
    eval_policy.attach(eval_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help/version exit cleanly, usage errors are config errors
    }

    if (ingest->parsed()) {
        auto source = read_file(corpus_path);
        auto parsed = pv::parse_document(source, norm_from(norm_name, norm_short, urn_base));
        pv::save_tree(parsed.tree, tree_out);
        std::cout << "tree written to " << tree_out << "\n";
        std::cout << "units by kind:\n";
        for (const auto& [kind, count] : parsed.report.unit_count_by_kind) {
            std::cout << "  " << pv::kind_name(kind) << ": " << count << "\n";
        }
        std::cout << "total units: " << parsed.report.total_units() << "\n";
        for (const auto& [line, message] : parsed.report.warnings) {
            std::cout << "warning (line " << line << "): " << message << "\n";
        }
        return 0;
    }

    if (index_cmd->parsed()) {
        if (method_id.size() != 1) throw pv::Error::config("method id must be a single letter a..h");
        auto method = pv::MethodConfig::from_id(method_id[0]);
        auto tree = pv::load_tree(tree_path);
        auto provider = pv::make_provider(index_provider.to_config());
        pv::CorpusOptions corpus;
        corpus.window_tokens = window;
        corpus.overlap_tokens = overlap;
        corpus.references.embed_display_labels = embed_display;
        pv::IndexBuildOptions build_options;
        build_options.store_double = store_double;
        auto index = pv::build_method_index(tree, method, *provider, pv::default_tokenizer(),
                                            corpus, build_options);
        index.save(index_out);
        std::cout << "method " << method.id << " (" << method.describe() << "): "
                  << index.manifest().record_count << " records, dim "
                  << index.manifest().dim << ", saved to " << index_out << "\n";
        return 0;
    }

    auto provider_for_index = [&](const pv::VectorIndex& index,
                                  const std::string& cache) -> std::unique_ptr<pv::EmbeddingProvider> {
        pv::ProviderConfig config = index.manifest().provider;
        if (!cache.empty()) config.cache_path = cache;
        return pv::make_provider(config);
    };

    if (query_cmd->parsed()) {
        auto index = pv::VectorIndex::load(query_index);
        auto provider = provider_for_index(index, cache_override);
        pv::RetrievalOptions options;
        options.policy = query_policy.to_policy();
        options.candidate_pool = pool;
        options.normalize = (index.manifest().normalize_query || force_normalize) && !no_normalize;
        auto normalizer = pv::QueryNormalizer::with_default_rules();
        if (options.normalize) {
            bool fell_back = false;
            (void)normalizer.normalize(query_text, &fell_back);
            if (fell_back) {
                std::cerr << "warning: normalization left nothing content-bearing; "
                             "using the original query\n";
            }
        }
        auto report = pv::retrieve(query_text, index, *provider, normalizer, options);
        print_report(report);
        if (!prompt_out.empty()) {
            std::ofstream out(prompt_out, std::ios::binary | std::ios::trunc);
            if (!out) throw pv::Error::io("cannot write prompt artifact " + prompt_out);
            out << pv::assemble_prompt(report, index);
        }
        return 0;
    }

    if (eval_cmd->parsed()) {
        auto suite = pv::load_query_suite(suite_path);
        std::vector<pv::MethodConfig> method_list;
        for (char id : methods) method_list.push_back(pv::MethodConfig::from_id(id));

        std::map<char, pv::VectorIndex> loaded;
        std::unique_ptr<pv::EmbeddingProvider> provider;
        for (const auto& method : method_list) {
            auto dir = std::filesystem::path(index_root) / std::string(1, method.id);
            if (!std::filesystem::exists(dir / "manifest.json")) {
                throw pv::Error::io("missing index for method '" + std::string(1, method.id) +
                                    "' under " + index_root);
            }
            loaded.emplace(method.id, pv::VectorIndex::load(dir));
            if (!provider) provider = provider_for_index(loaded.at(method.id), eval_cache);
        }
        auto normalizer = pv::QueryNormalizer::with_default_rules();
        auto results = pv::run_matrix(
            suite, method_list,
            [&loaded](const pv::MethodConfig& m) -> const pv::VectorIndex& {
                return loaded.at(m.id);
            },
            *provider, normalizer, eval_policy.to_policy());

        std::filesystem::path out_dir(eval_out);
        pv::emit_tables(results, out_dir);
        pv::emit_heatmap(results, out_dir / "heatmap_max_similarity.csv");
        pv::emit_boxplot_data(results, out_dir / "boxplot_scores.csv");
        pv::emit_results_summary(results, out_dir / "results_summary.csv");
        std::cout << results.size() << " results written to " << eval_out << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const pv::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
