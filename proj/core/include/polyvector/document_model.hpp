#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace polyvector {

/// Identity of the norm a document tree belongs to. The full name prefixes
/// every canonical label; the urn base prefixes every unit URN.
struct NormIdentity {
    std::string full_name;   // e.g. "Constituição da República Federativa do Brasil de 1988"
    std::string short_name;  // display abbreviation, e.g. "CRFB"
    std::string urn_base;    // e.g. "urn:lex:br:federal:constituicao:1988-10-05;1988"

    /// Throws ErrorKind::Structure when full_name/urn_base are empty or the
    /// urn base already carries a fragment separator.
    void validate() const;
};

enum class UnitKind {
    Title,
    Chapter,
    Section,
    Subsection,
    Article,
    Caput,
    Paragraph,      // numbered paragraph ("§ n")
    SoleParagraph,  // "Parágrafo único."
    Inciso,
    Alinea,
};

constexpr bool is_grouping(UnitKind k) {
    return k == UnitKind::Title || k == UnitKind::Chapter || k == UnitKind::Section ||
           k == UnitKind::Subsection;
}

constexpr bool is_textual(UnitKind k) { return !is_grouping(k); }

std::string_view kind_name(UnitKind k);
std::optional<UnitKind> kind_from_name(std::string_view name);

using UnitId = std::uint32_t;

/// One node of the legal-document hierarchy. Units are immutable once the
/// owning tree has been finalized.
struct StructuralUnit {
    UnitId id{};
    UnitKind kind{};
    std::string ordinal;           // designator as printed: "VIII", "5º", "231.", "único", "a"
    std::optional<UnitId> parent;  // nullopt: attached directly under the document root
    std::vector<UnitId> children;  // document order
    std::string own_text;          // text belonging to this unit alone
    std::string full_text;         // own_text plus descendant text, document order
};

/// The document root plus all structural units, id-indexed. The tree object
/// itself plays the role of the single root node; preamble text that
/// precedes the first recognized unit is owned by the root.
struct DocumentTree {
    NormIdentity norm;
    std::string preamble;
    std::vector<StructuralUnit> units;
    std::vector<UnitId> top_level;  // root's children, document order

    const StructuralUnit& unit(UnitId id) const;
    StructuralUnit& unit(UnitId id);

    /// Ancestor chain of a unit, nearest parent first (root excluded).
    std::vector<UnitId> ancestors(UnitId id) const;

    /// Nearest ancestor of the given kind, or the unit itself when it matches.
    std::optional<UnitId> enclosing(UnitId id, UnitKind kind) const;

    /// Whole-document text: preamble plus every top-level unit's full text.
    std::string document_text() const;

    /// Computes full_text bottom-up and validates parent/child linkage.
    /// Must be called once after construction; throws ErrorKind::Structure
    /// on broken links.
    void finalize();
};

struct UnitLabel {
    std::string canonical;  // embedding input, prefixed with the norm's full name
    std::string display;    // report form, prefixed with the norm's short name
};

struct UnitUrn {
    std::string value;     // urn_base + "!" + fragment
    std::string fragment;  // lowercase, "_"-joined segments
};

/// Canonical + display label for a unit. Textual units are anchored at
/// their article ("…, Artigo 5º, Inciso XIX"); grouping units carry the
/// comma-joined path of grouping designators ("…, TÍTULO VI, CAPÍTULO II,
/// Seção II"). The canonical form names the caput only for the caput unit
/// itself; the display form keeps "caput" in the path of its descendants.
UnitLabel build_label(const DocumentTree& tree, UnitId id);

/// urn:lex identifier for a unit, e.g. "…;1988!art60_par4".
UnitUrn build_urn(const DocumentTree& tree, UnitId id);

/// Combined identifier-plus-label strings: urn value, ", ", label.
std::string build_identifier_plus_label(const DocumentTree& tree, UnitId id);
std::string build_identifier_plus_label_display(const DocumentTree& tree, UnitId id);

/// Strips ordinal suffixes before fragment construction: "5º" -> "5",
/// "51." -> "51", "103-A." -> "103a". Lowercases the result.
std::string normalize_ordinal(std::string_view ordinal);

}  // namespace polyvector
