#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fixtures/eval_reference.hpp"
#include "polyvector/errors.hpp"
#include "polyvector/ingestion.hpp"
#include "polyvector/retrieval.hpp"
#include "support/synthetic_corpus.hpp"

namespace pv = polyvector;
namespace ts = polyvector::testsupport;

namespace {

std::vector<pv::SelectedItem> items_from_fixture(const ts::FixtureRow& row) {
    std::vector<pv::SelectedItem> items;
    for (const auto& item : row.items) {
        pv::SelectedItem out;
        out.chunk_id = item.label;
        out.matched_tag = *pv::tag_from_name(item.tag);
        out.matched_display_label = item.label;
        out.similarity = item.sim;
        out.token_count = item.tokens;
        items.push_back(std::move(out));
    }
    return items;
}

const ts::FixtureRow& fixture_row(const char* query, char method) {
    for (const auto& row : ts::reference_rows()) {
        if (row.method == method && std::string(row.query) == query) return row;
    }
    throw std::runtime_error("missing fixture row");
}

/// Index over hand-made unit chunks with lineage, for dedup/prune tests.
struct MiniIndexBuilder {
    std::vector<pv::EmbeddingRecord> records;
    std::vector<pv::Chunk> chunks;
    std::map<std::string, bool> chunk_present;

    void add_chunk(const std::string& id, std::vector<std::string> ancestors,
                   std::size_t tokens = 10, bool unit = true) {
        if (chunk_present[id]) return;
        chunk_present[id] = true;
        pv::Chunk chunk;
        chunk.id = id;
        if (unit) chunk.unit = static_cast<pv::UnitId>(chunks.size());
        chunk.text = "texto " + id;
        chunk.token_count = tokens;
        chunk.display_label = id;
        chunk.ancestor_chunk_ids = std::move(ancestors);
        chunks.push_back(std::move(chunk));
    }

    std::size_t add_record(const std::string& payload, pv::EmbedTypeTag tag,
                           std::size_t tokens = 10) {
        pv::EmbeddingRecord record;
        std::string digits = std::to_string(records.size());
        record.record_id = "r" + std::string(6 - digits.size(), '0') + digits;
        record.tag = tag;
        record.payload_chunk_id = payload;
        record.display_label = std::string(pv::tag_name(tag)) + ":" + payload;
        record.token_count = tokens;
        records.push_back(record);
        return records.size() - 1;
    }

    pv::VectorIndex build(pv::ChunkStrategy strategy = pv::ChunkStrategy::Multilayer) {
        std::vector<pv::EmbeddingVector> vectors(records.size());
        for (auto& vec : vectors) vec.values = {1.0};
        pv::IndexManifest manifest;
        manifest.strategy = strategy;
        manifest.dim = 1;
        manifest.vector_precision = "float64";
        return pv::VectorIndex::assemble(manifest, records, std::move(vectors), chunks);
    }
};

}  // namespace

TEST_CASE("query normalization reproduces the shipped pairs") {
    auto normalizer = pv::QueryNormalizer::with_default_rules();
    const std::pair<const char*, const char*> cases[] = {
        {"Quais são os objetivos fundamentais da República Federativa do Brasil?",
         "Objetivos fundamentais da República Federativa do Brasil"},
        {"Por favor, você poderia me explicar quais direitos a Constituição garante aos povos "
         "indígenas?",
         "Direitos garantidos aos povos indígenas pela Constituição"},
        {"Quais direitos são assegurados pelo art. 5º da Constituição?",
         "Direitos assegurados pelo art. 5º da Constituição"},
        {"Quais são os direitos previstos no art. 7º da Constituição?",
         "Direitos previstos no art. 7º da Constituição"},
        {"Qual o tema do Capítulo VI do Título VIII da Constituição?",
         "Tema do Capítulo VI do Título VIII da Constituição"},
        {"Explique o art. 69 da Constituição", "Art. 69 da Constituição"},
        {"Explique a norma urn:lex:br:federal:constituicao:1988-10-05;1988!art69",
         "Norma urn:lex:br:federal:constituicao:1988-10-05;1988!art69"},
        {"Quais as diferenças entre o art. 51 e o art. 52 da Constituição?",
         "Diferenças entre o art. 51 e o art. 52 da Constituição"},
    };
    for (const auto& [original, expected] : cases) {
        CAPTURE(original);
        std::string got = normalizer.normalize(original);
        CHECK(got == expected);
        // idempotence
        CHECK(normalizer.normalize(got) == got);
    }
}

TEST_CASE("normalization falls back to the original when nothing remains") {
    auto normalizer = pv::QueryNormalizer::with_default_rules();
    // only a speech-act marker: stripping would leave nothing content-bearing
    bool fell_back = false;
    CHECK(normalizer.normalize("Explique o ?", &fell_back) == "Explique o ?");
    CHECK(fell_back);
    CHECK(normalizer.normalize("Por favor, ") == "Por favor,");
    // a bare trailing question mark is still stripped
    CHECK(normalizer.normalize("Quais?", &fell_back) == "Quais");
    CHECK_FALSE(fell_back);
}

TEST_CASE("dedup keeps the best-scoring record per payload") {
    MiniIndexBuilder b;
    b.add_chunk("c1", {});
    b.add_chunk("c2", {});
    auto lbl_c1 = b.add_record("c1", pv::EmbedTypeTag::LBL);
    auto urn_c1 = b.add_record("c1", pv::EmbedTypeTag::URN);
    auto art_c2 = b.add_record("c2", pv::EmbedTypeTag::ART);
    auto index = b.build();

    std::vector<pv::SearchHit> ranked{{lbl_c1, 0.9}, {art_c2, 0.85}, {urn_c1, 0.8}};
    auto unique = pv::dedup_by_payload(ranked, index);
    REQUIRE(unique.size() == 2);
    CHECK(unique[0].chunk_id == "c1");
    CHECK(unique[0].similarity == 0.9);
    CHECK(unique[0].matched_tag == pv::EmbedTypeTag::LBL);
    CHECK(unique[1].chunk_id == "c2");
    CHECK(unique[1].similarity == 0.85);
    CHECK(unique[1].matched_tag == pv::EmbedTypeTag::ART);
}

TEST_CASE("dedup leaves distinct payloads unchanged") {
    MiniIndexBuilder b;
    for (int i = 0; i < 5; ++i) b.add_chunk("c" + std::to_string(i), {});
    std::vector<pv::SearchHit> ranked;
    for (int i = 0; i < 5; ++i) {
        ranked.push_back({b.add_record("c" + std::to_string(i), pv::EmbedTypeTag::ART),
                          0.9 - 0.1 * i});
    }
    auto index = b.build();
    auto unique = pv::dedup_by_payload(ranked, index);
    CHECK(unique.size() == 5);
}

TEST_CASE("dedup equals a brute-force group-by-max oracle on random fixtures") {
    std::mt19937_64 rng(21);
    for (int round = 0; round < 30; ++round) {
        MiniIndexBuilder b;
        const int payloads = 8;
        for (int i = 0; i < payloads; ++i) b.add_chunk("c" + std::to_string(i), {});
        const int n = 40;
        std::vector<pv::SearchHit> ranked;
        for (int i = 0; i < n; ++i) {
            int payload = static_cast<int>(rng() % payloads);
            auto idx = b.add_record("c" + std::to_string(payload), pv::EmbedTypeTag::ART);
            ranked.push_back({idx, 0.0});
        }
        // descending random similarities
        std::vector<double> sims(n);
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        for (auto& s : sims) s = dist(rng);
        std::sort(sims.rbegin(), sims.rend());
        for (int i = 0; i < n; ++i) ranked[i].similarity = sims[i];

        auto index = b.build();
        auto unique = pv::dedup_by_payload(ranked, index);

        // oracle: group by payload, keep max similarity, order by that max
        std::map<std::string, double> best;
        for (const auto& hit : ranked) {
            const auto& payload = index.record(hit.record_index).payload_chunk_id;
            auto it = best.find(payload);
            if (it == best.end() || hit.similarity > it->second) best[payload] = hit.similarity;
        }
        REQUIRE(unique.size() == best.size());
        for (const auto& item : unique) {
            CHECK(item.similarity == best.at(item.chunk_id));
        }
        for (std::size_t i = 1; i < unique.size(); ++i) {
            CHECK(unique[i - 1].similarity >= unique[i].similarity);
        }
    }
}

TEST_CASE("containment pruning drops descendants of earlier ancestors") {
    MiniIndexBuilder b;
    b.add_chunk("art3", {});
    b.add_chunk("art3_cpt", {"art3"});
    b.add_record("art3", pv::EmbedTypeTag::ART);
    b.add_record("art3_cpt", pv::EmbedTypeTag::CPT);
    auto index = b.build();

    std::vector<pv::SelectedItem> ancestor_first{
        {"art3", pv::EmbedTypeTag::ART, "art3", 0.86, 10},
        {"art3_cpt", pv::EmbedTypeTag::CPT, "caput", 0.80, 5},
    };
    auto pruned = pv::prune_contained(ancestor_first, index);
    REQUIRE(pruned.size() == 1);
    CHECK(pruned[0].chunk_id == "art3");

    std::vector<pv::SelectedItem> descendant_first{
        {"art3_cpt", pv::EmbedTypeTag::CPT, "caput", 0.86, 5},
        {"art3", pv::EmbedTypeTag::ART, "art3", 0.82, 10},
    };
    CHECK(pv::prune_contained(descendant_first, index).size() == 2);
}

TEST_CASE("reference-matched hits survive containment pruning") {
    MiniIndexBuilder b;
    b.add_chunk("art5", {});
    b.add_chunk("art5_cpt_inc1", {"art5_cpt", "art5"});
    b.add_record("art5", pv::EmbedTypeTag::ART);
    b.add_record("art5_cpt_inc1", pv::EmbedTypeTag::IL);
    auto index = b.build();

    std::vector<pv::SelectedItem> ranked{
        {"art5", pv::EmbedTypeTag::ART, "art5", 0.79, 100},
        {"art5_cpt_inc1", pv::EmbedTypeTag::IL, "inciso", 0.72, 10},
    };
    auto pruned = pv::prune_contained(ranked, index);
    CHECK(pruned.size() == 2);

    // the same chunk matched through its content vector is pruned
    ranked[1].matched_tag = pv::EmbedTypeTag::INC;
    CHECK(pv::prune_contained(ranked, index).size() == 1);
}

TEST_CASE("pruning equals a quadratic ancestor-scan oracle on random trees") {
    std::mt19937_64 rng(31);
    for (int round = 0; round < 40; ++round) {
        MiniIndexBuilder b;
        const int n = 12;
        std::vector<std::vector<std::string>> ancestors(n);
        for (int i = 0; i < n; ++i) {
            std::string id = "u" + std::to_string(i);
            if (i > 0) {
                int parent = static_cast<int>(rng() % i);
                ancestors[i] = ancestors[parent];
                ancestors[i].insert(ancestors[i].begin(), "u" + std::to_string(parent));
            }
            b.add_chunk(id, ancestors[i]);
            b.add_record(id, pv::EmbedTypeTag::ART);
        }
        auto index = b.build();

        std::vector<pv::SelectedItem> ranked;
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        double sim = 0.99;
        for (int i : order) {
            ranked.push_back({"u" + std::to_string(i), pv::EmbedTypeTag::ART,
                              "u" + std::to_string(i), sim, 10});
            sim -= 0.01;
        }

        auto pruned = pv::prune_contained(ranked, index);

        // oracle: drop item when ANY earlier input item is one of its ancestors
        std::vector<pv::SelectedItem> expected;
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            int unit = order[i];
            bool drop = false;
            for (std::size_t j = 0; j < i && !drop; ++j) {
                const auto& candidate = ranked[j].chunk_id;
                drop = std::find(ancestors[unit].begin(), ancestors[unit].end(), candidate) !=
                       ancestors[unit].end();
            }
            if (!drop) expected.push_back(ranked[i]);
        }
        REQUIRE(pruned.size() == expected.size());
        for (std::size_t i = 0; i < pruned.size(); ++i) {
            CHECK(pruned[i].chunk_id == expected[i].chunk_id);
        }
    }
}

TEST_CASE("selection stops at the budget, including the crossing chunk") {
    auto& row = fixture_row("Q1", 'e');
    auto selected = pv::select_context(items_from_fixture(row), {});
    CHECK(selected.size() == 13);
    auto metrics = pv::compute_metrics(selected);
    CHECK(metrics.total_tokens == 6702);
}

TEST_CASE("the minimum-segments floor overrides budget and threshold") {
    // two huge items put the running total past the budget before the floor
    auto& row = fixture_row("Q3", 'h');
    auto selected = pv::select_context(items_from_fixture(row), {});
    CHECK(selected.size() == 5);
    CHECK(pv::compute_metrics(selected).total_tokens == 8289);

    // items below the drop cutoff still fill the floor
    auto& multilayer = fixture_row("Q1", 'c');
    auto floor_filled = pv::select_context(items_from_fixture(multilayer), {});
    CHECK(floor_filled.size() == 5);
    CHECK(pv::compute_metrics(floor_filled).total_tokens == 940);
}

TEST_CASE("uniform window rows stop exactly at the budget") {
    for (const char* query : {"Q1", "Q2", "Q3", "Q4", "Q5"}) {
        auto& row = fixture_row(query, 'a');
        auto selected = pv::select_context(items_from_fixture(row), {});
        CHECK(selected.size() == 5);
        CHECK(pv::compute_metrics(selected).total_tokens == 4000);
        // a sixth 800-token candidate would not be admitted
        auto extended = items_from_fixture(row);
        pv::SelectedItem extra = extended.back();
        extra.similarity -= 0.0001;
        extended.push_back(extra);
        CHECK(pv::select_context(extended, {}).size() == 5);
    }
}

TEST_CASE("selection output is a prefix of its input") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> sim_dist(0.2, 0.95);
    std::uniform_int_distribution<std::size_t> tok_dist(5, 2000);
    for (int round = 0; round < 50; ++round) {
        std::vector<pv::SelectedItem> ranked;
        std::vector<double> sims;
        for (int i = 0; i < 20; ++i) sims.push_back(sim_dist(rng));
        std::sort(sims.rbegin(), sims.rend());
        for (int i = 0; i < 20; ++i) {
            ranked.push_back({"c" + std::to_string(i), pv::EmbedTypeTag::ART, "", sims[i],
                              tok_dist(rng)});
        }
        auto selected = pv::select_context(ranked, {});
        REQUIRE(selected.size() <= ranked.size());
        CHECK(selected.size() >= std::min<std::size_t>(5, ranked.size()));
        for (std::size_t i = 0; i < selected.size(); ++i) {
            CHECK(selected[i].chunk_id == ranked[i].chunk_id);
        }
    }
}

TEST_CASE("fewer candidates than the floor selects everything") {
    std::vector<pv::SelectedItem> ranked;
    for (int i = 0; i < 3; ++i) {
        ranked.push_back({"c" + std::to_string(i), pv::EmbedTypeTag::ART, "", 0.9 - 0.2 * i, 10});
    }
    CHECK(pv::select_context(ranked, {}).size() == 3);
    CHECK(pv::select_context({}, {}).empty());
}

TEST_CASE("tiny chunks above the cutoff run to budget or exhaustion") {
    std::vector<pv::SelectedItem> ranked;
    for (int i = 0; i < 50; ++i) {
        ranked.push_back({"c" + std::to_string(i), pv::EmbedTypeTag::ART, "", 0.9 - 0.0001 * i, 3});
    }
    auto selected = pv::select_context(ranked, {});
    CHECK(selected.size() == 50);  // 150 tokens never crosses the budget
}

TEST_CASE("selection policy validation") {
    CHECK_THROWS_AS((void)pv::select_context({}, {0, 0.2, 5}), pv::Error);
    CHECK_THROWS_AS((void)pv::select_context({}, {4000, 0.0, 5}), pv::Error);
    CHECK_THROWS_AS((void)pv::select_context({}, {4000, 1.0, 5}), pv::Error);
    CHECK_THROWS_AS((void)pv::select_context({}, {4000, 0.2, 0}), pv::Error);
}

TEST_CASE("metrics match the published window row") {
    auto& row = fixture_row("Q1", 'a');
    auto metrics = pv::compute_metrics(items_from_fixture(row));
    CHECK(std::abs(metrics.mean - 0.6370) < 5e-5);
    CHECK(std::abs(metrics.stddev - 0.0530) < 5e-5);
    CHECK(metrics.min == 0.5899);
    CHECK(metrics.max == 0.7067);
    CHECK(metrics.total_tokens == 4000);
    CHECK(metrics.segments == 5);
}

TEST_CASE("single item metrics collapse to that item") {
    std::vector<pv::SelectedItem> one{{"c", pv::EmbedTypeTag::ART, "", 0.42, 10}};
    auto metrics = pv::compute_metrics(one);
    CHECK(metrics.mean == 0.42);
    CHECK(metrics.min == 0.42);
    CHECK(metrics.max == 0.42);
    CHECK(metrics.stddev == 0.0);
}

TEST_CASE("metrics agree with an extended-precision oracle") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int round = 0; round < 50; ++round) {
        std::vector<pv::SelectedItem> items;
        int n = 2 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) {
            items.push_back({"c", pv::EmbedTypeTag::ART, "", dist(rng), 1});
        }
        auto metrics = pv::compute_metrics(items);
        long double sum = 0;
        for (const auto& item : items) sum += item.similarity;
        long double mean = sum / n;
        long double ss = 0;
        for (const auto& item : items) {
            ss += (item.similarity - mean) * (item.similarity - mean);
        }
        long double stddev = std::sqrt(ss / (n - 1));
        CHECK(std::abs(metrics.mean - static_cast<double>(mean)) < 1e-10);
        CHECK(std::abs(metrics.stddev - static_cast<double>(stddev)) < 1e-10);
    }
}

TEST_CASE("sample standard deviation, not population") {
    // population formula would give 0.0474 for this row
    auto& row = fixture_row("Q1", 'a');
    auto metrics = pv::compute_metrics(items_from_fixture(row));
    CHECK(metrics.stddev > 0.050);
    CHECK(metrics.stddev < 0.056);
}

TEST_CASE("retrieve: canonical labels and urns hit their unit at rank 1 on a poly index") {
    auto corpus = ts::make_synthetic_corpus();
    auto tree = pv::parse_document(corpus.text, corpus.norm).tree;
    pv::ProviderConfig config;
    config.native_dim = config.target_dim = 128;
    auto provider = pv::make_provider(config);
    pv::CorpusOptions corpus_options;
    corpus_options.window_tokens = 120;
    corpus_options.overlap_tokens = 40;
    auto poly = pv::build_method_index(tree, pv::MethodConfig::from_id('g'), *provider,
                                       pv::default_tokenizer(), corpus_options);
    auto normalizer = pv::QueryNormalizer::with_default_rules();
    pv::RetrievalOptions options;

    auto articles = pv::enumerate_units(tree, {pv::UnitKind::Article});
    for (std::size_t i = 0; i < 5; ++i) {
        auto unit = articles[i];
        auto label = pv::build_label(tree, unit).canonical;
        auto report = pv::retrieve(label, poly, *provider, normalizer, options);
        REQUIRE_FALSE(report.items.empty());
        CHECK(report.items[0].chunk_id == pv::build_urn(tree, unit).fragment);
        CHECK(report.items[0].similarity == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(report.items[0].matched_tag == pv::EmbedTypeTag::LBL);

        auto urn = pv::build_urn(tree, unit).value;
        auto urn_report = pv::retrieve(urn, poly, *provider, normalizer, options);
        REQUIRE_FALSE(urn_report.items.empty());
        CHECK(urn_report.items[0].chunk_id == pv::build_urn(tree, unit).fragment);
        CHECK(urn_report.items[0].matched_tag == pv::EmbedTypeTag::URN);
    }
}

TEST_CASE("retrieve: content-only index does not resolve urn queries") {
    auto corpus = ts::make_synthetic_corpus();
    auto tree = pv::parse_document(corpus.text, corpus.norm).tree;
    pv::ProviderConfig config;
    config.native_dim = config.target_dim = 128;
    auto provider = pv::make_provider(config);
    auto content_only = pv::build_method_index(tree, pv::MethodConfig::from_id('c'), *provider,
                                               pv::default_tokenizer());
    auto normalizer = pv::QueryNormalizer::with_default_rules();
    pv::RetrievalOptions options;

    auto articles = pv::enumerate_units(tree, {pv::UnitKind::Article});
    auto target = articles[3];
    auto urn = pv::build_urn(tree, target).value;
    auto report = pv::retrieve(urn, content_only, *provider, normalizer, options);
    REQUIRE_FALSE(report.items.empty());
    CHECK(report.items[0].chunk_id != pv::build_urn(tree, target).fragment);
    CHECK(report.items[0].similarity < 0.9);
}

TEST_CASE("poly references do not change selections for content-only queries") {
    auto corpus = ts::make_synthetic_corpus();
    auto tree = pv::parse_document(corpus.text, corpus.norm).tree;
    pv::ProviderConfig config;
    config.native_dim = config.target_dim = 128;
    auto provider = pv::make_provider(config);
    auto content_only = pv::build_method_index(tree, pv::MethodConfig::from_id('c'), *provider,
                                               pv::default_tokenizer());
    auto poly = pv::build_method_index(tree, pv::MethodConfig::from_id('g'), *provider,
                                       pv::default_tokenizer());
    auto normalizer = pv::QueryNormalizer::with_default_rules();
    pv::RetrievalOptions options;

    for (const char* query : {"planejamento integrado das ações de energia",
                              "fiscalização permanente das atividades de saúde",
                              "cadastro atualizado das ações de transporte"}) {
        auto a = pv::retrieve(query, content_only, *provider, normalizer, options);
        auto b = pv::retrieve(query, poly, *provider, normalizer, options);
        REQUIRE(a.items.size() == b.items.size());
        for (std::size_t i = 0; i < a.items.size(); ++i) {
            CHECK(a.items[i].chunk_id == b.items[i].chunk_id);
            CHECK(a.items[i].similarity == doctest::Approx(b.items[i].similarity).epsilon(1e-12));
        }
    }
}

TEST_CASE("retrieve validates the provider fingerprint") {
    auto corpus = ts::make_synthetic_corpus();
    auto tree = pv::parse_document(corpus.text, corpus.norm).tree;
    pv::ProviderConfig config;
    config.native_dim = config.target_dim = 64;
    auto provider = pv::make_provider(config);
    auto index = pv::build_method_index(tree, pv::MethodConfig::from_id('b'), *provider,
                                        pv::default_tokenizer());
    pv::ProviderConfig other = config;
    other.seed = 1234;
    auto mismatched = pv::make_provider(other);
    auto normalizer = pv::QueryNormalizer::with_default_rules();
    CHECK_THROWS_AS(
        (void)pv::retrieve("texto", index, *mismatched, normalizer, pv::RetrievalOptions{}),
        pv::Error);
}

TEST_CASE("prompt artifact lists the query and chunks in rank order") {
    auto corpus = ts::make_synthetic_corpus();
    auto tree = pv::parse_document(corpus.text, corpus.norm).tree;
    pv::ProviderConfig config;
    config.native_dim = config.target_dim = 64;
    auto provider = pv::make_provider(config);
    auto index = pv::build_method_index(tree, pv::MethodConfig::from_id('b'), *provider,
                                        pv::default_tokenizer());
    auto normalizer = pv::QueryNormalizer::with_default_rules();
    auto report =
        pv::retrieve("política de floresta", index, *provider, normalizer, pv::RetrievalOptions{});
    auto prompt = pv::assemble_prompt(report, index);
    CHECK(prompt.find("política de floresta") == 0);
    std::size_t last = 0;
    for (const auto& item : report.items) {
        auto pos = prompt.find(index.chunk(item.chunk_id).text, last);
        REQUIRE(pos != std::string::npos);
        last = pos;
    }
}
