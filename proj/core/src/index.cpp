#include "polyvector/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "polyvector/errors.hpp"
#include "polyvector/ingestion.hpp"

namespace polyvector {

namespace {

using json = nlohmann::ordered_json;

constexpr char kVectorsMagic[8] = {'P', 'V', 'V', 'E', 'C', '0', '0', '1'};

std::string record_id_for(std::size_t index) {
    std::string digits = std::to_string(index);
    std::string id = "r";
    for (std::size_t i = digits.size(); i < 6; ++i) id += '0';
    return id + digits;
}

void append_le32(std::string& out, std::uint32_t value) {
    out += static_cast<char>(value & 0xFF);
    out += static_cast<char>((value >> 8) & 0xFF);
    out += static_cast<char>((value >> 16) & 0xFF);
    out += static_cast<char>((value >> 24) & 0xFF);
}

void append_le64(std::string& out, std::uint64_t value) {
    append_le32(out, static_cast<std::uint32_t>(value & 0xFFFFFFFFULL));
    append_le32(out, static_cast<std::uint32_t>(value >> 32));
}

std::uint32_t read_le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t read_le64(const unsigned char* p) {
    return static_cast<std::uint64_t>(read_le32(p)) |
           (static_cast<std::uint64_t>(read_le32(p + 4)) << 32);
}

json provider_to_json(const ProviderConfig& config) {
    json out;
    out["kind"] = config.kind == ProviderConfig::Kind::Deterministic ? "deterministic" : "remote";
    out["endpoint"] = config.endpoint;
    out["model_name"] = config.model_name;
    out["native_dim"] = config.native_dim;
    out["target_dim"] = config.target_dim;
    out["seed"] = config.seed;
    out["renormalize_after_truncation"] = config.renormalize_after_truncation;
    return out;
}

ProviderConfig provider_from_json(const json& doc) {
    ProviderConfig config;
    config.kind = doc.at("kind").get<std::string>() == "remote" ? ProviderConfig::Kind::Remote
                                                                : ProviderConfig::Kind::Deterministic;
    config.endpoint = doc.at("endpoint").get<std::string>();
    config.model_name = doc.at("model_name").get<std::string>();
    config.native_dim = doc.at("native_dim").get<std::size_t>();
    config.target_dim = doc.at("target_dim").get<std::size_t>();
    config.seed = doc.at("seed").get<std::uint64_t>();
    config.renormalize_after_truncation = doc.at("renormalize_after_truncation").get<bool>();
    return config;
}

json chunk_to_json(const Chunk& chunk) {
    json out;
    out["id"] = chunk.id;
    if (chunk.unit) out["unit"] = *chunk.unit; else out["unit"] = nullptr;
    if (chunk.window_index) out["window"] = *chunk.window_index; else out["window"] = nullptr;
    out["tag"] = std::string(tag_name(chunk.content_tag));
    out["label"] = chunk.display_label;
    out["urn"] = chunk.urn;
    out["tokens"] = chunk.token_count;
    out["ancestors"] = chunk.ancestor_chunk_ids;
    out["text"] = chunk.text;
    return out;
}

Chunk chunk_from_json(const json& doc) {
    Chunk chunk;
    chunk.id = doc.at("id").get<std::string>();
    if (!doc.at("unit").is_null()) chunk.unit = doc.at("unit").get<UnitId>();
    if (!doc.at("window").is_null()) chunk.window_index = doc.at("window").get<std::size_t>();
    auto tag = tag_from_name(doc.at("tag").get<std::string>());
    if (!tag) throw Error::parse("unknown chunk tag in index metadata");
    chunk.content_tag = *tag;
    chunk.display_label = doc.at("label").get<std::string>();
    chunk.urn = doc.at("urn").get<std::string>();
    chunk.token_count = doc.at("tokens").get<std::size_t>();
    chunk.ancestor_chunk_ids = doc.at("ancestors").get<std::vector<std::string>>();
    chunk.text = doc.at("text").get<std::string>();
    chunk.embed_input = chunk.text;
    return chunk;
}

}  // namespace

VectorIndex VectorIndex::build(const MethodConfig& method, IndexBuildInputs inputs,
                               EmbeddingProvider& provider, const IndexBuildOptions& options) {
    if (inputs.content_chunks.empty()) {
        throw Error::structure("index build requires a non-empty content chunk set");
    }

    std::vector<Chunk> chunks = std::move(inputs.content_chunks);
    const std::size_t content_count = chunks.size();
    {
        std::set<std::string> ids;
        for (const auto& chunk : chunks) ids.insert(chunk.id);
        for (auto& chunk : inputs.payload_only_chunks) {
            if (ids.insert(chunk.id).second) chunks.push_back(std::move(chunk));
        }
    }

    std::unordered_map<std::string, std::size_t> chunk_by_id;
    for (std::size_t i = 0; i < chunks.size(); ++i) chunk_by_id[chunks[i].id] = i;

    std::vector<EmbeddingRecord> records;
    std::vector<std::string> embed_inputs;
    records.reserve(content_count + inputs.references.size());
    embed_inputs.reserve(records.capacity());

    for (std::size_t i = 0; i < content_count; ++i) {
        const Chunk& chunk = chunks[i];
        EmbeddingRecord record;
        record.record_id = record_id_for(records.size());
        record.tag = chunk.content_tag;
        record.payload_chunk_id = chunk.id;
        record.display_label = chunk.display_label;
        record.urn = chunk.urn;
        record.token_count = chunk.token_count;
        records.push_back(std::move(record));
        embed_inputs.push_back(chunk.embed_input);
    }

    for (const auto& reference : inputs.references) {
        auto it = chunk_by_id.find(reference.payload_chunk_id);
        if (it == chunk_by_id.end()) {
            throw Error::structure("reference record points at unknown chunk '" +
                                   reference.payload_chunk_id + "'");
        }
        EmbeddingRecord record;
        record.record_id = record_id_for(records.size());
        record.tag = reference.tag;
        record.payload_chunk_id = reference.payload_chunk_id;
        record.display_label = reference.display_label;
        record.urn = reference.urn;
        record.token_count = chunks[it->second].token_count;
        records.push_back(std::move(record));
        embed_inputs.push_back(reference.embed_input);
    }

    std::vector<EmbeddingVector> vectors = provider.embed_batch(embed_inputs);
    if (!options.store_double) {
        // Narrow once at build time so persisted and in-memory search agree.
        for (auto& vec : vectors) {
            for (double& v : vec.values) v = static_cast<double>(static_cast<float>(v));
        }
    }

    IndexManifest manifest;
    manifest.method_id = method.id;
    manifest.strategy = method.strategy;
    manifest.poly = method.poly;
    manifest.record_count = records.size();
    manifest.content_count = content_count;
    manifest.unit_count = inputs.references.size() / 3;
    manifest.dim = provider.config().target_dim;
    manifest.provider_fingerprint = provider.config().fingerprint();
    manifest.provider = provider.config();
    manifest.vector_precision = options.store_double ? "float64" : "float32";
    manifest.normalize_query = method.normalize_query;

    return assemble(std::move(manifest), std::move(records), std::move(vectors), std::move(chunks));
}

VectorIndex VectorIndex::assemble(IndexManifest manifest, std::vector<EmbeddingRecord> records,
                                  std::vector<EmbeddingVector> vectors, std::vector<Chunk> chunks) {
    if (records.size() != vectors.size()) {
        throw Error::structure("record/vector count mismatch");
    }
    for (const auto& vec : vectors) {
        if (vec.dim() != manifest.dim) {
            throw Error::structure("vector dimension mismatch in index");
        }
    }
    VectorIndex index;
    index.manifest_ = std::move(manifest);
    index.manifest_.record_count = records.size();
    index.records_ = std::move(records);
    index.vectors_ = std::move(vectors);
    index.chunks_ = std::move(chunks);
    index.rebuild_lookup();

    index.row_norms_.reserve(index.vectors_.size());
    for (const auto& vec : index.vectors_) index.row_norms_.push_back(vec.norm());

    for (const auto& record : index.records_) {
        if (index.chunk_by_id_.find(record.payload_chunk_id) == index.chunk_by_id_.end()) {
            throw Error::structure("record " + record.record_id + " points at unknown chunk '" +
                                   record.payload_chunk_id + "'");
        }
    }
    return index;
}

void VectorIndex::rebuild_lookup() {
    chunk_by_id_.clear();
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        if (!chunk_by_id_.emplace(chunks_[i].id, i).second) {
            throw Error::structure("duplicate chunk id '" + chunks_[i].id + "' in index");
        }
    }
}

const Chunk* VectorIndex::find_chunk(const std::string& chunk_id) const {
    auto it = chunk_by_id_.find(chunk_id);
    return it == chunk_by_id_.end() ? nullptr : &chunks_[it->second];
}

const Chunk& VectorIndex::chunk(const std::string& chunk_id) const {
    const Chunk* found = find_chunk(chunk_id);
    if (!found) throw Error::structure("unknown chunk id '" + chunk_id + "'");
    return *found;
}

std::vector<SearchHit> VectorIndex::knn(const EmbeddingVector& query, std::size_t k) const {
    if (records_.empty()) throw Error::structure("knn on an empty index");
    if (k == 0) throw Error::config("knn requires k >= 1");
    if (query.dim() != manifest_.dim) {
        throw Error::config("query dimension " + std::to_string(query.dim()) +
                            " does not match index dimension " + std::to_string(manifest_.dim));
    }
    const double query_norm = query.norm();
    if (!(query_norm > 0.0)) throw Error::structure("knn query vector has zero norm");

    std::vector<SearchHit> hits;
    hits.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        double dot = 0.0;
        const auto& row = vectors_[i].values;
        for (std::size_t d = 0; d < row.size(); ++d) dot += row[d] * query.values[d];
        double denom = row_norms_[i] * query_norm;
        hits.push_back({i, denom > 0.0 ? dot / denom : 0.0});
    }

    auto better = [this](const SearchHit& a, const SearchHit& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        const auto& ra = records_[a.record_index];
        const auto& rb = records_[b.record_index];
        if (ra.token_count != rb.token_count) return ra.token_count > rb.token_count;
        return ra.record_id < rb.record_id;
    };
    const std::size_t keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + keep, hits.end(), better);
    hits.resize(keep);
    return hits;
}

void VectorIndex::save(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error::io("cannot create index directory " + dir.string());

    auto cleanup = [&dir]() {
        std::error_code ignore;
        for (const char* name : {"manifest.json", "vectors.bin", "records.jsonl", "chunks.jsonl"}) {
            std::filesystem::remove(dir / name, ignore);
        }
    };

    try {
        json manifest;
        manifest["method_id"] = std::string(1, manifest_.method_id);
        manifest["strategy"] = std::string(strategy_name(manifest_.strategy));
        manifest["poly"] = manifest_.poly;
        manifest["normalize_query"] = manifest_.normalize_query;
        manifest["record_count"] = manifest_.record_count;
        manifest["content_count"] = manifest_.content_count;
        manifest["unit_count"] = manifest_.unit_count;
        manifest["dim"] = manifest_.dim;
        manifest["vector_precision"] = manifest_.vector_precision;
        manifest["provider_fingerprint"] = manifest_.provider_fingerprint;
        manifest["provider"] = provider_to_json(manifest_.provider);
        {
            std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
            if (!out) throw Error::io("cannot write index manifest");
            out << manifest.dump(2) << '\n';
        }

        {
            const bool wide = manifest_.vector_precision == "float64";
            std::string blob;
            blob.assign(kVectorsMagic, sizeof(kVectorsMagic));
            append_le64(blob, vectors_.size());
            append_le64(blob, manifest_.dim);
            for (const auto& vec : vectors_) {
                for (double v : vec.values) {
                    if (wide) {
                        append_le64(blob, std::bit_cast<std::uint64_t>(v));
                    } else {
                        append_le32(blob, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
                    }
                }
            }
            std::ofstream out(dir / "vectors.bin", std::ios::binary | std::ios::trunc);
            if (!out) throw Error::io("cannot write index vectors");
            out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
            if (!out) throw Error::io("failed writing index vectors");
        }

        {
            std::ofstream out(dir / "records.jsonl", std::ios::binary | std::ios::trunc);
            if (!out) throw Error::io("cannot write index records");
            for (const auto& record : records_) {
                json row;
                row["id"] = record.record_id;
                row["tag"] = std::string(tag_name(record.tag));
                row["payload"] = record.payload_chunk_id;
                row["label"] = record.display_label;
                row["urn"] = record.urn;
                row["tokens"] = record.token_count;
                out << row.dump() << '\n';
            }
        }

        {
            std::ofstream out(dir / "chunks.jsonl", std::ios::binary | std::ios::trunc);
            if (!out) throw Error::io("cannot write index chunk store");
            for (const auto& chunk : chunks_) out << chunk_to_json(chunk).dump() << '\n';
        }
    } catch (...) {
        cleanup();
        throw;
    }
}

VectorIndex VectorIndex::load(const std::filesystem::path& dir) {
    std::ifstream manifest_in(dir / "manifest.json", std::ios::binary);
    if (!manifest_in) throw Error::io("missing index manifest in " + dir.string());
    json manifest_doc;
    try {
        manifest_in >> manifest_doc;
    } catch (const json::exception& e) {
        throw Error::parse("malformed index manifest: " + std::string(e.what()));
    }

    IndexManifest manifest;
    try {
        manifest.method_id = manifest_doc.at("method_id").get<std::string>().at(0);
        auto strategy = manifest_doc.at("strategy").get<std::string>();
        if (strategy == "blind") manifest.strategy = ChunkStrategy::Blind;
        else if (strategy == "flat") manifest.strategy = ChunkStrategy::Flat;
        else if (strategy == "multilayer") manifest.strategy = ChunkStrategy::Multilayer;
        else throw Error::parse("unknown strategy in manifest: " + strategy);
        manifest.poly = manifest_doc.at("poly").get<bool>();
        manifest.normalize_query = manifest_doc.at("normalize_query").get<bool>();
        manifest.record_count = manifest_doc.at("record_count").get<std::size_t>();
        manifest.content_count = manifest_doc.at("content_count").get<std::size_t>();
        manifest.unit_count = manifest_doc.at("unit_count").get<std::size_t>();
        manifest.dim = manifest_doc.at("dim").get<std::size_t>();
        manifest.vector_precision = manifest_doc.at("vector_precision").get<std::string>();
        manifest.provider_fingerprint = manifest_doc.at("provider_fingerprint").get<std::string>();
        manifest.provider = provider_from_json(manifest_doc.at("provider"));
    } catch (const json::exception& e) {
        throw Error::parse("malformed index manifest: " + std::string(e.what()));
    }

    std::ifstream vec_in(dir / "vectors.bin", std::ios::binary);
    if (!vec_in) throw Error::io("missing index vectors in " + dir.string());
    std::string blob((std::istreambuf_iterator<char>(vec_in)), std::istreambuf_iterator<char>());
    if (blob.size() < sizeof(kVectorsMagic) + 16 ||
        std::memcmp(blob.data(), kVectorsMagic, sizeof(kVectorsMagic)) != 0) {
        throw Error::parse("malformed vectors file in " + dir.string());
    }
    const auto* base = reinterpret_cast<const unsigned char*>(blob.data());
    const std::uint64_t rows = read_le64(base + 8);
    const std::uint64_t dim = read_le64(base + 16);
    const bool wide = manifest.vector_precision == "float64";
    const std::size_t value_size = wide ? 8 : 4;
    if (dim != manifest.dim || blob.size() != 24 + rows * dim * value_size) {
        throw Error::parse("vectors file size mismatch in " + dir.string());
    }
    std::vector<EmbeddingVector> vectors(rows);
    const unsigned char* cursor = base + 24;
    for (auto& vec : vectors) {
        vec.values.resize(dim);
        for (std::uint64_t d = 0; d < dim; ++d) {
            if (wide) {
                vec.values[d] = std::bit_cast<double>(read_le64(cursor));
            } else {
                vec.values[d] = static_cast<double>(std::bit_cast<float>(read_le32(cursor)));
            }
            cursor += value_size;
        }
    }

    auto read_jsonl = [&dir](const char* name) {
        std::ifstream in(dir / name, std::ios::binary);
        if (!in) throw Error::io(std::string("missing index file ") + name + " in " + dir.string());
        std::vector<json> rows;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                rows.push_back(json::parse(line));
            } catch (const json::exception& e) {
                throw Error::parse(std::string("malformed line in ") + name + ": " + e.what());
            }
        }
        return rows;
    };

    std::vector<EmbeddingRecord> records;
    for (const auto& row : read_jsonl("records.jsonl")) {
        EmbeddingRecord record;
        record.record_id = row.at("id").get<std::string>();
        auto tag = tag_from_name(row.at("tag").get<std::string>());
        if (!tag) throw Error::parse("unknown record tag in index metadata");
        record.tag = *tag;
        record.payload_chunk_id = row.at("payload").get<std::string>();
        record.display_label = row.at("label").get<std::string>();
        record.urn = row.at("urn").get<std::string>();
        record.token_count = row.at("tokens").get<std::size_t>();
        records.push_back(std::move(record));
    }

    std::vector<Chunk> chunks;
    for (const auto& row : read_jsonl("chunks.jsonl")) chunks.push_back(chunk_from_json(row));

    if (records.size() != manifest.record_count) {
        throw Error::parse("record count mismatch between manifest and records.jsonl");
    }
    return assemble(std::move(manifest), std::move(records), std::move(vectors), std::move(chunks));
}

IndexBuildInputs assemble_method_inputs(const DocumentTree& tree, const MethodConfig& method,
                                        const Tokenizer& tokenizer, const CorpusOptions& options) {
    IndexBuildInputs inputs;
    switch (method.strategy) {
        case ChunkStrategy::Blind:
            inputs.content_chunks =
                chunk_blind(tree, tokenizer, options.window_tokens, options.overlap_tokens);
            break;
        case ChunkStrategy::Flat:
            inputs.content_chunks = chunk_flat(tree, tokenizer);
            break;
        case ChunkStrategy::Multilayer:
            inputs.content_chunks = chunk_multilayer(tree, tokenizer);
            break;
    }
    if (method.poly) {
        std::set<UnitKind> kinds{UnitKind::Title,    UnitKind::Chapter,
                                 UnitKind::Section,  UnitKind::Subsection,
                                 UnitKind::Article,  UnitKind::Caput,
                                 UnitKind::Paragraph, UnitKind::SoleParagraph,
                                 UnitKind::Inciso,   UnitKind::Alinea};
        auto units = enumerate_units(tree, kinds);
        inputs.references = make_reference_records(tree, units, options.references);
        inputs.payload_only_chunks = unit_payload_chunks(tree, tokenizer);
    }
    return inputs;
}

VectorIndex build_method_index(const DocumentTree& tree, const MethodConfig& method,
                               EmbeddingProvider& provider, const Tokenizer& tokenizer,
                               const CorpusOptions& corpus, const IndexBuildOptions& build) {
    return VectorIndex::build(method, assemble_method_inputs(tree, method, tokenizer, corpus),
                              provider, build);
}

}  // namespace polyvector
