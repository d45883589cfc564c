#include <benchmark/benchmark.h>

#include <random>

#include "polyvector/embedding.hpp"
#include "polyvector/index.hpp"
#include "polyvector/retrieval.hpp"

namespace pv = polyvector;

namespace {

pv::VectorIndex random_index(std::size_t records, std::size_t dim) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist(0.0, 1.0);

    std::vector<pv::EmbeddingRecord> recs(records);
    std::vector<pv::EmbeddingVector> vectors(records);
    std::vector<pv::Chunk> chunks(records);
    for (std::size_t i = 0; i < records; ++i) {
        std::string id = "c" + std::to_string(i);
        recs[i].record_id = "r" + std::to_string(i);
        recs[i].tag = pv::EmbedTypeTag::ART;
        recs[i].payload_chunk_id = id;
        recs[i].token_count = 100;
        vectors[i].values.resize(dim);
        for (auto& v : vectors[i].values) v = dist(rng);
        vectors[i].normalize();
        chunks[i].id = id;
        chunks[i].token_count = 100;
    }
    pv::IndexManifest manifest;
    manifest.method_id = 'b';
    manifest.strategy = pv::ChunkStrategy::Flat;
    manifest.dim = dim;
    manifest.vector_precision = "float64";
    return pv::VectorIndex::assemble(manifest, std::move(recs), std::move(vectors),
                                     std::move(chunks));
}

void BM_KnnScan(benchmark::State& state) {
    const auto index = random_index(static_cast<std::size_t>(state.range(0)), 256);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> dist(0.0, 1.0);
    pv::EmbeddingVector query;
    query.values.resize(256);
    for (auto& v : query.values) v = dist(rng);
    query.normalize();
    for (auto _ : state) {
        benchmark::DoNotOptimize(index.knn(query, 100));
    }
}
BENCHMARK(BM_KnnScan)->Arg(12288)->Unit(benchmark::kMillisecond);

void BM_DeterministicEmbed(benchmark::State& state) {
    pv::ProviderConfig config;
    auto provider = pv::make_provider(config);
    std::vector<std::string> inputs{
        "Constituição da República Federativa do Brasil de 1988, Artigo 5º, Inciso XIX"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(provider->embed_batch(inputs));
    }
}
BENCHMARK(BM_DeterministicEmbed);

void BM_SelectContext(benchmark::State& state) {
    std::vector<pv::SelectedItem> ranked(1000);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        ranked[i].chunk_id = "c" + std::to_string(i);
        ranked[i].similarity = 0.95 - 0.0001 * static_cast<double>(i);
        ranked[i].token_count = 40;
    }
    pv::SelectionPolicy policy;
    for (auto _ : state) {
        benchmark::DoNotOptimize(pv::select_context(ranked, policy));
    }
}
BENCHMARK(BM_SelectContext);

}  // namespace

BENCHMARK_MAIN();
