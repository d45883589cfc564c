#include "polyvector/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "polyvector/errors.hpp"
#include "polyvector/roman.hpp"

namespace polyvector {

namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kOrdinalMasc = "\xC2\xBA";   // º
constexpr std::string_view kDegreeSign = "\xC2\xB0";    // ° (tolerated variant)
constexpr std::string_view kSectionSign = "\xC2\xA7";   // §
constexpr std::string_view kEnDash = "\xE2\x80\x93";    // –
constexpr std::string_view kEmDash = "\xE2\x80\x94";    // —

bool starts_with(std::string_view text, std::string_view prefix) {
    return text.substr(0, prefix.size()) == prefix;
}

bool is_roman_char(char c) {
    return c == 'I' || c == 'V' || c == 'X' || c == 'L' || c == 'C' || c == 'D' || c == 'M';
}

struct MarkerMatch {
    UnitKind kind;
    std::string ordinal;     // designator value as printed
    std::string designator;  // full marker text as printed
    std::size_t end;         // byte offset just past the marker
};

// Levels drive which open units a new marker closes.
int level_of(UnitKind kind) {
    switch (kind) {
        case UnitKind::Title: return 1;
        case UnitKind::Chapter: return 2;
        case UnitKind::Section: return 3;
        case UnitKind::Subsection: return 4;
        case UnitKind::Article: return 5;
        case UnitKind::Caput:
        case UnitKind::Paragraph:
        case UnitKind::SoleParagraph: return 6;
        case UnitKind::Inciso: return 7;
        case UnitKind::Alinea: return 8;
    }
    return 9;
}

std::size_t skip_spaces(std::string_view line, std::size_t i) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    return i;
}

// Matches "<digits>[-<upper letters>]" plus an optional "º"/"°"/"." suffix,
// all captured verbatim into `ordinal`.
std::optional<std::size_t> match_arabic_ordinal(std::string_view line, std::size_t i,
                                                std::string& ordinal) {
    std::size_t start = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == start) return std::nullopt;
    if (i < line.size() && line[i] == '-') {
        std::size_t j = i + 1;
        while (j < line.size() && std::isupper(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i + 1) i = j;
    }
    std::string_view rest = line.substr(i);
    if (starts_with(rest, kOrdinalMasc) || starts_with(rest, kDegreeSign)) {
        i += kOrdinalMasc.size();
    } else if (i < line.size() && line[i] == '.') {
        ++i;
    }
    ordinal.assign(line.substr(start, i - start));
    return i;
}

std::optional<MarkerMatch> match_grouping(std::string_view line) {
    struct Pattern {
        std::string_view keyword;
        UnitKind kind;
    };
    static constexpr std::array<Pattern, 4> kPatterns{{
        {"TÍTULO", UnitKind::Title},
        {"CAPÍTULO", UnitKind::Chapter},
        {"Seção", UnitKind::Section},
        {"Subseção", UnitKind::Subsection},
    }};
    for (const auto& p : kPatterns) {
        if (!starts_with(line, p.keyword)) continue;
        std::size_t i = skip_spaces(line, p.keyword.size());
        std::size_t start = i;
        while (i < line.size() && is_roman_char(line[i])) ++i;
        if (i == start) continue;
        if (i < line.size() && line[i] != ' ' && line[i] != '\t') continue;
        std::string ordinal{line.substr(start, i - start)};
        if (!roman::to_arabic(ordinal)) continue;
        return MarkerMatch{p.kind, ordinal, std::string(p.keyword) + " " + ordinal, i};
    }
    return std::nullopt;
}

std::optional<MarkerMatch> match_article(std::string_view line, std::size_t i, bool& malformed) {
    if (!starts_with(line.substr(i), "Art.")) return std::nullopt;
    std::size_t j = skip_spaces(line, i + 4);
    std::string ordinal;
    auto end = match_arabic_ordinal(line, j, ordinal);
    if (!end) {
        malformed = true;
        return std::nullopt;
    }
    return MarkerMatch{UnitKind::Article, ordinal, "Art. " + ordinal, *end};
}

std::optional<MarkerMatch> match_paragraph(std::string_view line, std::size_t i, bool& malformed) {
    if (!starts_with(line.substr(i), kSectionSign)) return std::nullopt;
    std::size_t j = i + kSectionSign.size();
    if (starts_with(line.substr(j), kSectionSign)) return std::nullopt;  // "§§" is a reference
    j = skip_spaces(line, j);
    std::string ordinal;
    auto end = match_arabic_ordinal(line, j, ordinal);
    if (!end) {
        malformed = true;
        return std::nullopt;
    }
    return MarkerMatch{UnitKind::Paragraph, ordinal,
                       std::string(kSectionSign) + " " + ordinal, *end};
}

std::optional<MarkerMatch> match_sole_paragraph(std::string_view line, std::size_t i) {
    static constexpr std::string_view kKeyword = "Parágrafo único";
    if (!starts_with(line.substr(i), kKeyword)) return std::nullopt;
    std::size_t j = i + kKeyword.size();
    std::string designator{kKeyword};
    if (j < line.size() && line[j] == '.') {
        designator += '.';
        ++j;
    }
    return MarkerMatch{UnitKind::SoleParagraph, "único", designator, j};
}

std::optional<MarkerMatch> match_inciso(std::string_view line, std::size_t i) {
    std::size_t j = i;
    while (j < line.size() && is_roman_char(line[j])) ++j;
    if (j == i) return std::nullopt;
    std::string ordinal{line.substr(i, j - i)};
    if (!roman::to_arabic(ordinal)) return std::nullopt;
    std::size_t k = skip_spaces(line, j);
    if (k == j) return std::nullopt;  // require a space before the dash
    std::string_view rest = line.substr(k);
    std::size_t dash_len = 0;
    if (starts_with(rest, kEnDash)) dash_len = kEnDash.size();
    else if (starts_with(rest, kEmDash)) dash_len = kEmDash.size();
    else if (!rest.empty() && rest[0] == '-') dash_len = 1;
    if (dash_len == 0) return std::nullopt;
    std::size_t end = k + dash_len;
    if (end < line.size() && line[end] != ' ' && line[end] != '\t') return std::nullopt;
    return MarkerMatch{UnitKind::Inciso, ordinal,
                       ordinal + " " + std::string(line.substr(k, dash_len)), end};
}

std::optional<MarkerMatch> match_alinea(std::string_view line, std::size_t i) {
    if (i + 1 >= line.size()) return std::nullopt;
    char c = line[i];
    if (!std::islower(static_cast<unsigned char>(c))) return std::nullopt;
    if (line[i + 1] != ')') return std::nullopt;
    std::size_t end = i + 2;
    if (end < line.size() && line[end] != ' ' && line[end] != '\t') return std::nullopt;
    return MarkerMatch{UnitKind::Alinea, std::string(1, c), std::string(1, c) + ")", end};
}

// True when `i` sits after sentence-ending punctuation plus whitespace, so
// an inline marker may open here ("…avulso. Art. 8º …").
bool inline_boundary(std::string_view line, std::size_t i) {
    if (i == 0) return false;
    std::size_t j = i;
    bool saw_space = false;
    while (j > 0 && (line[j - 1] == ' ' || line[j - 1] == '\t')) {
        --j;
        saw_space = true;
    }
    if (!saw_space || j == 0) return false;
    char p = line[j - 1];
    return p == '.' || p == ';' || p == ':';
}

class Parser {
public:
    explicit Parser(NormIdentity norm) { doc_.tree.norm = std::move(norm); }

    ParsedDocument run(std::string_view source) {
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= source.size()) {
            std::size_t eol = source.find('\n', pos);
            std::string_view line = source.substr(
                pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
            ++line_no;
            process_line(line, line_no);
            if (eol == std::string_view::npos) break;
            pos = eol + 1;
        }
        if (doc_.tree.units.empty() && collapse_whitespace(doc_.tree.preamble).empty()) {
            throw Error::parse("document contains no text");
        }
        doc_.tree.finalize();
        for (const auto& unit : doc_.tree.units) {
            ++doc_.report.unit_count_by_kind[unit.kind];
        }
        check_fragment_uniqueness();
        return std::move(doc_);
    }

private:
    void process_line(std::string_view line, std::size_t line_no) {
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) {
            line.remove_suffix(1);
        }
        if (line.empty()) return;
        // Grouping headings only ever open at the start of a line.
        if (auto grouping = match_grouping(line)) {
            open_unit(*grouping, line_no);
            append_text(line.substr(grouping->end), line_no);
            return;
        }
        std::size_t text_start = 0;
        std::size_t i = 0;
        while (i < line.size()) {
            if (i == 0 || inline_boundary(line, i)) {
                bool malformed = false;
                auto marker = match_textual_marker(line, i, malformed);
                if (marker) {
                    append_text(line.substr(text_start, i - text_start), line_no);
                    open_unit(*marker, line_no);
                    text_start = marker->end;
                    i = marker->end;
                    continue;
                }
                if (malformed) {
                    doc_.report.warnings.emplace_back(
                        line_no, "marker-like text could not be parsed; attached as content");
                }
            }
            ++i;
        }
        append_text(line.substr(text_start), line_no);
    }

    static std::optional<MarkerMatch> match_textual_marker(std::string_view line, std::size_t i,
                                                           bool& malformed) {
        if (auto m = match_article(line, i, malformed)) return m;
        if (auto m = match_paragraph(line, i, malformed)) return m;
        if (auto m = match_sole_paragraph(line, i)) return m;
        if (auto m = match_inciso(line, i)) return m;
        if (auto m = match_alinea(line, i)) return m;
        return std::nullopt;
    }

    void open_unit(const MarkerMatch& marker, std::size_t line_no) {
        int level = level_of(marker.kind);
        while (!stack_.empty() && level_of(top_kind()) >= level) stack_.pop_back();

        switch (marker.kind) {
            case UnitKind::Paragraph:
            case UnitKind::SoleParagraph:
                if (stack_.empty() || top_kind() != UnitKind::Article) {
                    throw Error::parse("line " + std::to_string(line_no) +
                                       ": paragraph marker outside an article");
                }
                break;
            case UnitKind::Inciso:
                if (!stack_.empty() && top_kind() == UnitKind::Article) {
                    push_unit(UnitKind::Caput, "", "", line_no);
                }
                if (stack_.empty() ||
                    (top_kind() != UnitKind::Caput && top_kind() != UnitKind::Paragraph &&
                     top_kind() != UnitKind::SoleParagraph)) {
                    throw Error::parse("line " + std::to_string(line_no) +
                                       ": inciso marker outside an article");
                }
                break;
            case UnitKind::Alinea:
                if (stack_.empty() || top_kind() != UnitKind::Inciso) {
                    throw Error::parse("line " + std::to_string(line_no) +
                                       ": alínea marker outside an inciso");
                }
                break;
            default:
                break;  // groupings and articles accept whatever enclosing scope remains
        }
        push_unit(marker.kind, marker.ordinal, marker.designator, line_no);
    }

    void push_unit(UnitKind kind, std::string ordinal, std::string own_text,
                   std::size_t /*line_no*/) {
        auto& tree = doc_.tree;
        StructuralUnit unit;
        unit.id = static_cast<UnitId>(tree.units.size());
        unit.kind = kind;
        unit.ordinal = std::move(ordinal);
        unit.own_text = std::move(own_text);
        if (stack_.empty()) {
            tree.top_level.push_back(unit.id);
        } else {
            unit.parent = stack_.back();
            tree.units[stack_.back()].children.push_back(unit.id);
        }
        stack_.push_back(unit.id);
        tree.units.push_back(std::move(unit));
    }

    void append_text(std::string_view raw, std::size_t line_no) {
        std::string text = collapse_whitespace(raw);
        if (text.empty()) return;
        if (stack_.empty()) {
            auto& preamble = doc_.tree.preamble;
            if (!preamble.empty()) preamble += ' ';
            preamble += text;
            return;
        }
        // Head text of an article belongs to its caput.
        if (top_kind() == UnitKind::Article) {
            push_unit(UnitKind::Caput, "", "", line_no);
        }
        auto& own = doc_.tree.units[stack_.back()].own_text;
        if (!own.empty()) own += ' ';
        own += text;
    }

    UnitKind top_kind() const { return doc_.tree.units[stack_.back()].kind; }

    void check_fragment_uniqueness() {
        std::set<std::string> seen;
        for (const auto& unit : doc_.tree.units) {
            auto fragment = build_urn(doc_.tree, unit.id).fragment;
            if (!seen.insert(fragment).second) {
                doc_.report.warnings.emplace_back(
                    0, "duplicate unit identifier '" + fragment + "'");
            }
        }
    }

    ParsedDocument doc_;
    std::vector<UnitId> stack_;
};

}  // namespace

std::size_t ParseReport::total_units() const {
    std::size_t total = 0;
    for (const auto& [kind, count] : unit_count_by_kind) total += count;
    return total;
}

ParsedDocument parse_document(std::string_view source_text, NormIdentity norm) {
    norm.validate();
    return Parser(std::move(norm)).run(source_text);
}

std::vector<UnitId> enumerate_units(const DocumentTree& tree, const std::set<UnitKind>& layer) {
    std::vector<UnitId> out;
    std::vector<UnitId> pending(tree.top_level.rbegin(), tree.top_level.rend());
    while (!pending.empty()) {
        UnitId id = pending.back();
        pending.pop_back();
        const auto& unit = tree.unit(id);
        if (layer.count(unit.kind) != 0) out.push_back(id);
        pending.insert(pending.end(), unit.children.rbegin(), unit.children.rend());
    }
    return out;
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_space = true;  // trims leading whitespace
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            if (!in_space) out += ' ';
            in_space = true;
        } else {
            out += c;
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

void save_tree(const DocumentTree& tree, const std::filesystem::path& file) {
    json doc;
    doc["norm"] = {{"full_name", tree.norm.full_name},
                   {"short_name", tree.norm.short_name},
                   {"urn_base", tree.norm.urn_base}};
    doc["preamble"] = tree.preamble;
    json units = json::array();
    for (const auto& unit : tree.units) {
        json u;
        u["id"] = unit.id;
        u["kind"] = std::string(kind_name(unit.kind));
        u["ordinal"] = unit.ordinal;
        if (unit.parent) u["parent"] = *unit.parent; else u["parent"] = nullptr;
        u["children"] = unit.children;
        u["own_text"] = unit.own_text;
        units.push_back(std::move(u));
    }
    doc["units"] = std::move(units);
    doc["top_level"] = tree.top_level;

    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error::io("cannot write tree file: " + file.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error::io("failed writing tree file: " + file.string());
}

DocumentTree load_tree(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error::io("cannot open tree file: " + file.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error::parse("malformed tree file " + file.string() + ": " + e.what());
    }
    DocumentTree tree;
    try {
        tree.norm.full_name = doc.at("norm").at("full_name").get<std::string>();
        tree.norm.short_name = doc.at("norm").at("short_name").get<std::string>();
        tree.norm.urn_base = doc.at("norm").at("urn_base").get<std::string>();
        tree.preamble = doc.at("preamble").get<std::string>();
        for (const auto& u : doc.at("units")) {
            StructuralUnit unit;
            unit.id = u.at("id").get<UnitId>();
            auto kind = kind_from_name(u.at("kind").get<std::string>());
            if (!kind) throw Error::parse("unknown unit kind in " + file.string());
            unit.kind = *kind;
            unit.ordinal = u.at("ordinal").get<std::string>();
            if (!u.at("parent").is_null()) unit.parent = u.at("parent").get<UnitId>();
            unit.children = u.at("children").get<std::vector<UnitId>>();
            unit.own_text = u.at("own_text").get<std::string>();
            tree.units.push_back(std::move(unit));
        }
        tree.top_level = doc.at("top_level").get<std::vector<UnitId>>();
    } catch (const json::exception& e) {
        throw Error::parse("malformed tree file " + file.string() + ": " + e.what());
    }
    tree.finalize();
    return tree;
}

}  // namespace polyvector
