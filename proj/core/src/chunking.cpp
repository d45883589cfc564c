#include "polyvector/chunking.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "polyvector/errors.hpp"
#include "polyvector/ingestion.hpp"

namespace polyvector {

namespace {

constexpr std::array<std::string_view, 14> kTagNames{
    "Blind", "ART", "CPT", "PAR", "INC", "ALI", "SEC", "SUB", "CAP", "TIT", "DOC",
    "LBL", "URN", "I+L",
};

std::string window_chunk_id(std::size_t index) {
    std::string digits = std::to_string(index + 1);
    std::string id = "w";
    for (std::size_t i = digits.size(); i < 5; ++i) id += '0';
    return id + digits;
}

Chunk make_unit_chunk(const DocumentTree& tree, UnitId id, const Tokenizer& tokenizer) {
    const auto& unit = tree.unit(id);
    auto urn = build_urn(tree, id);
    Chunk chunk;
    chunk.id = urn.fragment;
    chunk.urn = urn.value;
    chunk.unit = id;
    chunk.text = unit.full_text;
    chunk.token_count = tokenizer.count(chunk.text);
    chunk.embed_input = chunk.text;
    chunk.content_tag = content_tag_for(unit.kind);
    chunk.display_label = build_label(tree, id).display;
    for (UnitId up : tree.ancestors(id)) {
        chunk.ancestor_chunk_ids.push_back(build_urn(tree, up).fragment);
    }
    return chunk;
}

std::set<UnitKind> all_kinds() {
    return {UnitKind::Title,    UnitKind::Chapter,   UnitKind::Section, UnitKind::Subsection,
            UnitKind::Article,  UnitKind::Caput,     UnitKind::Paragraph,
            UnitKind::SoleParagraph, UnitKind::Inciso, UnitKind::Alinea};
}

void check_unique_ids(const std::vector<Chunk>& chunks) {
    std::set<std::string_view> seen;
    for (const auto& chunk : chunks) {
        if (!seen.insert(chunk.id).second) {
            throw Error::structure("duplicate chunk id '" + chunk.id +
                                   "'; unit identifiers must be unique");
        }
    }
}

}  // namespace

std::string_view tag_name(EmbedTypeTag tag) { return kTagNames[static_cast<std::size_t>(tag)]; }

std::optional<EmbedTypeTag> tag_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kTagNames.size(); ++i) {
        if (kTagNames[i] == name) return static_cast<EmbedTypeTag>(i);
    }
    return std::nullopt;
}

bool is_reference_tag(EmbedTypeTag tag) {
    return tag == EmbedTypeTag::LBL || tag == EmbedTypeTag::URN || tag == EmbedTypeTag::IL;
}

EmbedTypeTag content_tag_for(UnitKind kind) {
    switch (kind) {
        case UnitKind::Title: return EmbedTypeTag::TIT;
        case UnitKind::Chapter: return EmbedTypeTag::CAP;
        case UnitKind::Section: return EmbedTypeTag::SEC;
        case UnitKind::Subsection: return EmbedTypeTag::SUB;
        case UnitKind::Article: return EmbedTypeTag::ART;
        case UnitKind::Caput: return EmbedTypeTag::CPT;
        case UnitKind::Paragraph:
        case UnitKind::SoleParagraph: return EmbedTypeTag::PAR;
        case UnitKind::Inciso: return EmbedTypeTag::INC;
        case UnitKind::Alinea: return EmbedTypeTag::ALI;
    }
    return EmbedTypeTag::DOC;
}

std::vector<Chunk> chunk_blind(const DocumentTree& tree, const Tokenizer& tokenizer,
                               std::size_t window_tokens, std::size_t overlap_tokens) {
    if (window_tokens <= overlap_tokens) {
        throw Error::config("blind window must exceed its overlap (window " +
                            std::to_string(window_tokens) + ", overlap " +
                            std::to_string(overlap_tokens) + ")");
    }
    const std::string text = tree.document_text();
    const auto spans = tokenizer.spans(text);
    const std::size_t stride = window_tokens - overlap_tokens;

    std::vector<Chunk> chunks;
    if (spans.empty()) return chunks;
    for (std::size_t start = 0; start < spans.size(); start += stride) {
        std::size_t last = std::min(start + window_tokens, spans.size()) - 1;
        Chunk chunk;
        chunk.window_index = chunks.size();
        chunk.id = window_chunk_id(chunks.size());
        chunk.text = text.substr(spans[start].begin, spans[last].end - spans[start].begin);
        chunk.token_count = last - start + 1;
        chunk.embed_input = chunk.text;
        chunk.content_tag = EmbedTypeTag::Blind;
        chunk.display_label = "Chunk #" + std::to_string(chunks.size() + 1);
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

std::vector<Chunk> chunk_flat(const DocumentTree& tree, const Tokenizer& tokenizer) {
    std::vector<Chunk> chunks;
    for (UnitId id : enumerate_units(tree, {UnitKind::Article})) {
        chunks.push_back(make_unit_chunk(tree, id, tokenizer));
    }
    check_unique_ids(chunks);
    return chunks;
}

std::vector<Chunk> chunk_multilayer(const DocumentTree& tree, const Tokenizer& tokenizer) {
    std::vector<Chunk> chunks;
    for (UnitId id : enumerate_units(tree, all_kinds())) {
        chunks.push_back(make_unit_chunk(tree, id, tokenizer));
    }
    check_unique_ids(chunks);
    return chunks;
}

std::vector<Chunk> unit_payload_chunks(const DocumentTree& tree, const Tokenizer& tokenizer) {
    return chunk_multilayer(tree, tokenizer);
}

std::vector<ReferenceRecord> make_reference_records(const DocumentTree& tree,
                                                    const std::vector<UnitId>& units,
                                                    const ReferenceOptions& options) {
    std::vector<ReferenceRecord> records;
    records.reserve(units.size() * 3);
    for (UnitId id : units) {
        auto label = build_label(tree, id);
        auto urn = build_urn(tree, id);
        if (urn.fragment.empty()) {
            throw Error::structure("unit " + std::to_string(id) + " produced an empty urn fragment");
        }
        const std::string& embedded_label =
            options.embed_display_labels ? label.display : label.canonical;

        ReferenceRecord lbl;
        lbl.payload_chunk_id = urn.fragment;
        lbl.tag = EmbedTypeTag::LBL;
        lbl.embed_input = embedded_label;
        lbl.display_label = label.display;
        lbl.urn = urn.value;
        records.push_back(std::move(lbl));

        ReferenceRecord urn_record;
        urn_record.payload_chunk_id = urn.fragment;
        urn_record.tag = EmbedTypeTag::URN;
        urn_record.embed_input = urn.value;
        urn_record.display_label = urn.value;
        urn_record.urn = urn.value;
        records.push_back(std::move(urn_record));

        ReferenceRecord combined;
        combined.payload_chunk_id = urn.fragment;
        combined.tag = EmbedTypeTag::IL;
        combined.embed_input = urn.value + ", " + embedded_label;
        combined.display_label = urn.value + ", " + label.display;
        combined.urn = urn.value;
        records.push_back(std::move(combined));
    }
    return records;
}

}  // namespace polyvector
