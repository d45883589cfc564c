#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "polyvector/document_model.hpp"

namespace polyvector {

struct ParseReport {
    std::map<UnitKind, std::size_t> unit_count_by_kind;
    std::vector<std::pair<std::size_t, std::string>> warnings;  // (line number, message)

    std::size_t total_units() const;
};

struct ParsedDocument {
    DocumentTree tree;
    ParseReport report;
};

/// Parses plain text following Brazilian legislative drafting conventions
/// (uppercase "TÍTULO <roman>" headings, "Art. <n>", "§ <n>" /
/// "Parágrafo único.", incisos "<roman> –", alíneas "<letter>)") into a
/// structural tree. Markers are recognized at line starts and inline after
/// sentence-ending punctuation. Text before the first marker becomes the
/// root preamble; article text before the first paragraph or inciso becomes
/// the article's caput.
///
/// Throws ErrorKind::Parse with a line number for orphan markers (e.g. a
/// "§" outside any article) and for blank input. Unrecognizable
/// marker-like lines attach to the nearest open unit with a warning.
ParsedDocument parse_document(std::string_view source_text, NormIdentity norm);

/// Document-ordered units restricted to the requested kinds.
std::vector<UnitId> enumerate_units(const DocumentTree& tree, const std::set<UnitKind>& layer);

/// Collapses whitespace runs to single spaces and trims the ends. The
/// parser applies this to every attributed text piece, so
/// collapse_whitespace(source) equals tree.document_text() after a parse.
std::string collapse_whitespace(std::string_view text);

void save_tree(const DocumentTree& tree, const std::filesystem::path& file);
DocumentTree load_tree(const std::filesystem::path& file);

}  // namespace polyvector
