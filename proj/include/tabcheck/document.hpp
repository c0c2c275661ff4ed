#pragma once

#include <cstddef>
#include <cstdint>
#include <compare>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tabcheck/errors.hpp"
#include "tabcheck/numeric_value.hpp"

namespace tabcheck {

using MentionId = std::int64_t;

enum class DocType { ipo_prospectus, auditor_report, annual_report, synthetic };

std::string_view to_string(DocType t);
DocType doc_type_from_string(std::string_view s);

enum class CellKind { header, numeric, text, empty };

struct Cell {
    std::string raw_text;
    CellKind kind = CellKind::empty;
};

/// Kind of a cell from its text and grid coordinates. Numeric wins whenever
/// the text normalizes; otherwise first row/column cells are headers.
CellKind classify_cell(std::string_view raw, std::size_t row, std::size_t col);

struct Section {
    std::string section_id;
    std::string title;
};

struct Table {
    std::string table_id;
    std::string section_id;
    std::string chapter_title;
    std::string text_before;
    std::string text_after;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<Cell> cells;  // row-major, n_rows * n_cols

    const Cell& at(std::size_t row, std::size_t col) const { return cells[row * n_cols + col]; }
};

/// Builds a validated table from a string grid. Throws GridError if ragged or empty.
Table make_table(std::string table_id, std::string section_id, std::string chapter_title,
                 std::string text_before, std::string text_after,
                 const std::vector<std::vector<std::string>>& grid);

struct Document {
    std::string doc_id;
    DocType doc_type = DocType::synthetic;
    std::vector<Section> sections;
    std::vector<Table> tables;  // reading order

    /// Index of the table with the given id, or npos.
    std::size_t table_index(std::string_view table_id) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct NumericalMention {
    MentionId mention_id = 0;
    std::string table_id;
    std::size_t table_index = 0;
    std::size_t row = 0;
    std::size_t col = 0;
    std::string raw_text;
    NumericValue value;
};

/// Unordered mention pair in canonical (first < second) form.
struct PairKey {
    MentionId first = 0;
    MentionId second = 0;

    static PairKey of(MentionId a, MentionId b) { return a < b ? PairKey{a, b} : PairKey{b, a}; }
    friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

struct GoldAnnotation {
    std::string doc_id;
    std::vector<std::vector<MentionId>> equivalence_groups;

    /// All unordered pairs within each group.
    std::set<PairKey> pairs() const;
};

/// Checks disjointness and |group| >= 2. Throws SchemaError.
void validate_gold(const GoldAnnotation& gold);

struct MentionContext {
    MentionId mention_id = 0;
    std::string text;
};

struct ContextOptions {
    std::size_t surrounding_char_budget = 500;  // per side, in code points
};

// -- parsing / serialization --------------------------------------------------

Document parse_document(std::string_view bytes);
Document document_from_json(const nlohmann::json& j);
nlohmann::json document_to_json(const Document& doc);
std::string serialize_document(const Document& doc);

GoldAnnotation parse_gold(std::string_view bytes);
nlohmann::json gold_to_json(const GoldAnnotation& gold);

// -- table operations ---------------------------------------------------------

/// Pipe-delimited rendering, one line per row, "---" separator after row 0.
std::string linearize_table(const Table& t);

/// Escapes '|' and newlines for a linearized cell.
std::string escape_cell(std::string_view text);

/// One mention per numeric cell in row-major order. Ids are drawn from
/// next_id, which is advanced.
std::vector<NumericalMention> extract_mentions(const Table& t, std::size_t table_index,
                                               MentionId& next_id);

/// All mentions of a document, ids assigned from 0 in reading order.
std::vector<NumericalMention> extract_mentions(const Document& d);

// -- contexts -----------------------------------------------------------------

/// Keeps the last `budget` code points of a UTF-8 string.
std::string utf8_tail(std::string_view s, std::size_t budget);
/// Keeps the first `budget` code points of a UTF-8 string.
std::string utf8_head(std::string_view s, std::size_t budget);

/// Context shared by every mention of a table: chapter title, bounded text
/// before, linearized table, bounded text after.
std::string table_context_text(const Table& t, const ContextOptions& opts = {});

std::string position_statement(std::size_t row, std::size_t col);

MentionContext build_context(const Document& d, const NumericalMention& m,
                             const ContextOptions& opts = {});

}  // namespace tabcheck
