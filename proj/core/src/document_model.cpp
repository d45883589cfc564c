#include "polyvector/document_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "polyvector/errors.hpp"
#include "polyvector/roman.hpp"

namespace polyvector {

namespace {

constexpr std::array<std::string_view, 10> kKindNames{
    "title", "chapter", "section", "subsection", "article",
    "caput", "paragraph", "sole_paragraph", "inciso", "alinea",
};

int arabic_from_roman_ordinal(const StructuralUnit& unit) {
    auto value = roman::to_arabic(unit.ordinal);
    if (!value) {
        throw Error::structure("unit " + std::to_string(unit.id) +
                               ": ordinal '" + unit.ordinal + "' is not a roman numeral");
    }
    return *value;
}

std::string grouping_designator(const StructuralUnit& unit) {
    switch (unit.kind) {
        case UnitKind::Title: return "TÍTULO " + unit.ordinal;
        case UnitKind::Chapter: return "CAPÍTULO " + unit.ordinal;
        case UnitKind::Section: return "Seção " + unit.ordinal;
        case UnitKind::Subsection: return "Subseção " + unit.ordinal;
        default:
            throw Error::structure("not a grouping unit");
    }
}

}  // namespace

void NormIdentity::validate() const {
    if (full_name.empty()) throw Error::structure("norm full_name is empty");
    if (urn_base.empty()) throw Error::structure("norm urn_base is empty");
    if (urn_base.find('!') != std::string::npos) {
        throw Error::structure("norm urn_base must not contain '!': " + urn_base);
    }
}

std::string_view kind_name(UnitKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<UnitKind> kind_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (kKindNames[i] == name) return static_cast<UnitKind>(i);
    }
    return std::nullopt;
}

const StructuralUnit& DocumentTree::unit(UnitId id) const {
    if (id >= units.size()) throw Error::structure("unit id out of range: " + std::to_string(id));
    return units[id];
}

StructuralUnit& DocumentTree::unit(UnitId id) {
    if (id >= units.size()) throw Error::structure("unit id out of range: " + std::to_string(id));
    return units[id];
}

std::vector<UnitId> DocumentTree::ancestors(UnitId id) const {
    std::vector<UnitId> chain;
    auto current = unit(id).parent;
    while (current) {
        chain.push_back(*current);
        current = unit(*current).parent;
    }
    return chain;
}

std::optional<UnitId> DocumentTree::enclosing(UnitId id, UnitKind kind) const {
    if (unit(id).kind == kind) return id;
    for (UnitId up : ancestors(id)) {
        if (unit(up).kind == kind) return up;
    }
    return std::nullopt;
}

std::string DocumentTree::document_text() const {
    std::string out = preamble;
    for (UnitId id : top_level) {
        if (!out.empty() && !unit(id).full_text.empty()) out += ' ';
        out += unit(id).full_text;
    }
    return out;
}

void DocumentTree::finalize() {
    norm.validate();
    for (const auto& u : units) {
        for (UnitId child : u.children) {
            if (child >= units.size() || units[child].parent != u.id) {
                throw Error::structure("broken parent link at unit " + std::to_string(u.id));
            }
        }
        if (u.parent && *u.parent >= units.size()) {
            throw Error::structure("dangling parent at unit " + std::to_string(u.id));
        }
    }
    // Children were appended in document order during parsing, so a reverse
    // id sweep visits every child before its parent.
    for (auto it = units.rbegin(); it != units.rend(); ++it) {
        it->full_text = it->own_text;
        for (UnitId child : it->children) {
            const auto& sub = units[child].full_text;
            if (sub.empty()) continue;
            if (!it->full_text.empty()) it->full_text += ' ';
            it->full_text += sub;
        }
    }
}

std::string normalize_ordinal(std::string_view ordinal) {
    std::string out;
    for (std::size_t i = 0; i < ordinal.size();) {
        unsigned char c = static_cast<unsigned char>(ordinal[i]);
        // "º" (masculine ordinal indicator) is 0xC2 0xBA; "°" is 0xC2 0xB0.
        if (c == 0xC2 && i + 1 < ordinal.size()) {
            unsigned char next = static_cast<unsigned char>(ordinal[i + 1]);
            if (next == 0xBA || next == 0xB0) {
                i += 2;
                continue;
            }
        }
        if (c == '.' || c == '-' || c == ' ') {
            ++i;
            continue;
        }
        out += static_cast<char>(std::tolower(c));
        ++i;
    }
    return out;
}

UnitLabel build_label(const DocumentTree& tree, UnitId id) {
    const auto& target = tree.unit(id);
    const auto& norm = tree.norm;

    if (is_grouping(target.kind)) {
        // Path of grouping designators from the outermost ancestor down.
        std::vector<UnitId> path = tree.ancestors(id);
        std::reverse(path.begin(), path.end());
        path.push_back(id);
        std::string suffix;
        for (UnitId step : path) {
            const auto& u = tree.unit(step);
            if (!is_grouping(u.kind)) {
                throw Error::structure("grouping unit " + std::to_string(id) +
                                       " has non-grouping ancestor");
            }
            suffix += ", " + grouping_designator(u);
        }
        return {norm.full_name + suffix, norm.short_name + suffix};
    }

    auto article = tree.enclosing(id, UnitKind::Article);
    if (!article) {
        throw Error::structure("textual unit " + std::to_string(id) +
                               " is not anchored at an article");
    }

    // Components below the article, outermost first.
    std::vector<UnitId> path;
    for (UnitId step = id; step != *article;) {
        path.push_back(step);
        auto parent = tree.unit(step).parent;
        if (!parent) {
            throw Error::structure("textual unit " + std::to_string(id) + " detached from article");
        }
        step = *parent;
    }
    std::reverse(path.begin(), path.end());

    std::string canonical_suffix = ", Artigo " + tree.unit(*article).ordinal;
    std::string display_suffix = ", Art. " + tree.unit(*article).ordinal;
    for (UnitId step : path) {
        const auto& u = tree.unit(step);
        switch (u.kind) {
            case UnitKind::Caput:
                // The canonical form names the caput only when it is the
                // target itself; the display form always keeps it in the path.
                if (step == id) canonical_suffix += ", caput";
                display_suffix += ", caput";
                break;
            case UnitKind::Paragraph:
                canonical_suffix += ", § " + u.ordinal;
                display_suffix += ", § " + u.ordinal;
                break;
            case UnitKind::SoleParagraph:
                canonical_suffix += ", Parágrafo único.";
                display_suffix += ", Parágrafo único.";
                break;
            case UnitKind::Inciso:
                canonical_suffix += ", Inciso " + u.ordinal;
                display_suffix += ", Inciso " + u.ordinal;
                break;
            case UnitKind::Alinea:
                canonical_suffix += ", Alínea " + u.ordinal;
                display_suffix += ", Alínea " + u.ordinal;
                break;
            default:
                throw Error::structure("unexpected kind below article at unit " +
                                       std::to_string(step));
        }
    }
    return {norm.full_name + canonical_suffix, norm.short_name + display_suffix};
}

UnitUrn build_urn(const DocumentTree& tree, UnitId id) {
    const auto& target = tree.unit(id);

    std::string fragment;
    if (is_grouping(target.kind)) {
        std::vector<UnitId> path = tree.ancestors(id);
        std::reverse(path.begin(), path.end());
        path.push_back(id);
        for (UnitId step : path) {
            const auto& u = tree.unit(step);
            int n = arabic_from_roman_ordinal(u);
            const char* seg = nullptr;
            switch (u.kind) {
                case UnitKind::Title: seg = "tit"; break;
                case UnitKind::Chapter: seg = "cap"; break;
                case UnitKind::Section: seg = "sec"; break;
                case UnitKind::Subsection: seg = "sub"; break;
                default:
                    throw Error::structure("grouping unit " + std::to_string(id) +
                                           " has non-grouping ancestor");
            }
            if (!fragment.empty()) fragment += '_';
            fragment += seg + std::to_string(n);
        }
    } else {
        auto article = tree.enclosing(id, UnitKind::Article);
        if (!article) {
            throw Error::structure("textual unit " + std::to_string(id) +
                                   " is not anchored at an article");
        }
        std::vector<UnitId> path;
        for (UnitId step = id; step != *article;) {
            path.push_back(step);
            auto parent = tree.unit(step).parent;
            if (!parent) {
                throw Error::structure("textual unit " + std::to_string(id) +
                                       " detached from article");
            }
            step = *parent;
        }
        std::reverse(path.begin(), path.end());

        std::string art = normalize_ordinal(tree.unit(*article).ordinal);
        if (art.empty()) {
            throw Error::structure("article " + std::to_string(*article) + " has empty ordinal");
        }
        fragment = "art" + art;
        for (UnitId step : path) {
            const auto& u = tree.unit(step);
            switch (u.kind) {
                case UnitKind::Caput:
                    fragment += "_cpt";
                    break;
                case UnitKind::Paragraph: {
                    std::string n = normalize_ordinal(u.ordinal);
                    if (n.empty() || !std::all_of(n.begin(), n.end(), [](char c) {
                            return std::isdigit(static_cast<unsigned char>(c));
                        })) {
                        throw Error::structure("paragraph ordinal '" + u.ordinal +
                                               "' is not numeric");
                    }
                    fragment += "_par" + n;
                    break;
                }
                case UnitKind::SoleParagraph:
                    fragment += "_par1u";
                    break;
                case UnitKind::Inciso:
                    fragment += "_inc" + std::to_string(arabic_from_roman_ordinal(u));
                    break;
                case UnitKind::Alinea:
                    fragment += "_ali" + normalize_ordinal(u.ordinal);
                    break;
                default:
                    throw Error::structure("unexpected kind below article at unit " +
                                           std::to_string(step));
            }
        }
    }

    if (fragment.empty()) throw Error::structure("empty urn fragment for unit " + std::to_string(id));
    return {tree.norm.urn_base + "!" + fragment, fragment};
}

std::string build_identifier_plus_label(const DocumentTree& tree, UnitId id) {
    return build_urn(tree, id).value + ", " + build_label(tree, id).canonical;
}

std::string build_identifier_plus_label_display(const DocumentTree& tree, UnitId id) {
    return build_urn(tree, id).value + ", " + build_label(tree, id).display;
}

}  // namespace polyvector
