#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polyvector/document_model.hpp"
#include "polyvector/tokenizer.hpp"

namespace polyvector {

/// Embedding-record type: content tags identify the structural layer a
/// content vector came from (Blind for window chunks, DOC reserved for the
/// root, which is never indexed); LBL/URN/I+L mark reference vectors.
enum class EmbedTypeTag {
    Blind, ART, CPT, PAR, INC, ALI, SEC, SUB, CAP, TIT, DOC,  // content
    LBL, URN, IL,                                             // reference
};

std::string_view tag_name(EmbedTypeTag tag);  // "Blind", "ART", ..., "I+L"
std::optional<EmbedTypeTag> tag_from_name(std::string_view name);
bool is_reference_tag(EmbedTypeTag tag);
EmbedTypeTag content_tag_for(UnitKind kind);

/// An indexable text span: a structural unit's full text or one blind
/// sliding window. Unit chunks are identified by their urn fragment,
/// windows by "w" plus a zero-padded 1-based number.
struct Chunk {
    std::string id;
    std::optional<UnitId> unit;
    std::optional<std::size_t> window_index;  // 0-based
    std::string text;
    std::size_t token_count{};
    std::string embed_input;  // equals text for content chunks
    EmbedTypeTag content_tag{EmbedTypeTag::Blind};
    std::string display_label;
    std::string urn;  // full urn:lex value for unit chunks, empty for windows
    std::vector<std::string> ancestor_chunk_ids;  // unit lineage, nearest first
};

/// One reference vector to add to the unified space, pointing at the
/// payload chunk its label designates.
struct ReferenceRecord {
    std::string payload_chunk_id;
    EmbedTypeTag tag{};  // LBL, URN, or IL
    std::string embed_input;
    std::string display_label;
    std::string urn;
};

/// Sliding windows over the whole document token stream; stride is
/// window - overlap and the final partial window is kept. Throws
/// ErrorKind::Config when window <= overlap.
std::vector<Chunk> chunk_blind(const DocumentTree& tree, const Tokenizer& tokenizer,
                               std::size_t window_tokens, std::size_t overlap_tokens);

/// One chunk per article, text = article full text.
std::vector<Chunk> chunk_flat(const DocumentTree& tree, const Tokenizer& tokenizer);

/// One chunk per structural unit at every layer.
std::vector<Chunk> chunk_multilayer(const DocumentTree& tree, const Tokenizer& tokenizer);

/// Payload chunks for every structural unit; used to give reference records
/// a retrievable unit-sized payload when the content strategy (blind/flat)
/// does not already index those units.
std::vector<Chunk> unit_payload_chunks(const DocumentTree& tree, const Tokenizer& tokenizer);

struct ReferenceOptions {
    /// Embed the short display labels instead of the canonical full-name
    /// form (the default embeds the canonical form).
    bool embed_display_labels = false;
};

/// Exactly three records (LBL, URN, I+L) per unit, in document order.
std::vector<ReferenceRecord> make_reference_records(const DocumentTree& tree,
                                                    const std::vector<UnitId>& units,
                                                    const ReferenceOptions& options = {});

}  // namespace polyvector
