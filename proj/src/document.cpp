#include "tabcheck/document.hpp"

#include <array>
#include <unordered_set>

namespace tabcheck {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<DocType, std::string_view>, 4> kDocTypes = {{
    {DocType::ipo_prospectus, "ipo_prospectus"},
    {DocType::auditor_report, "auditor_report"},
    {DocType::annual_report, "annual_report"},
    {DocType::synthetic, "synthetic"},
}};

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw SchemaError(where + " is not an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(where + " missing field '" + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string()) throw SchemaError(where + "." + key + " must be a string");
    return v.get<std::string>();
}

const json& require_array(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_array()) throw SchemaError(where + "." + key + " must be an array");
    return v;
}

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::string_view to_string(DocType t) {
    for (const auto& [type, name] : kDocTypes)
        if (type == t) return name;
    return "synthetic";
}

DocType doc_type_from_string(std::string_view s) {
    for (const auto& [type, name] : kDocTypes)
        if (name == s) return type;
    throw SchemaError("unknown doc_type '" + std::string(s) + "'");
}

CellKind classify_cell(std::string_view raw, std::size_t row, std::size_t col) {
    if (raw.find_first_not_of(" \t\r\n") == std::string_view::npos) return CellKind::empty;
    NumericValue v;
    if (try_normalize_value(raw, v)) return CellKind::numeric;
    if (row == 0 || col == 0) return CellKind::header;
    return CellKind::text;
}

Table make_table(std::string table_id, std::string section_id, std::string chapter_title,
                 std::string text_before, std::string text_after,
                 const std::vector<std::vector<std::string>>& grid) {
    if (grid.empty() || grid.front().empty())
        throw GridError("table '" + table_id + "' has no cells");
    Table t;
    t.n_rows = grid.size();
    t.n_cols = grid.front().size();
    t.cells.reserve(t.n_rows * t.n_cols);
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (grid[r].size() != t.n_cols)
            throw GridError("table '" + table_id + "' row " + std::to_string(r) + " has " +
                            std::to_string(grid[r].size()) + " cells, expected " +
                            std::to_string(t.n_cols));
        for (std::size_t c = 0; c < t.n_cols; ++c)
            t.cells.push_back(Cell{grid[r][c], classify_cell(grid[r][c], r, c)});
    }
    t.table_id = std::move(table_id);
    t.section_id = std::move(section_id);
    t.chapter_title = std::move(chapter_title);
    t.text_before = std::move(text_before);
    t.text_after = std::move(text_after);
    return t;
}

std::size_t Document::table_index(std::string_view table_id) const {
    for (std::size_t i = 0; i < tables.size(); ++i)
        if (tables[i].table_id == table_id) return i;
    return npos;
}

std::set<PairKey> GoldAnnotation::pairs() const {
    std::set<PairKey> out;
    for (const auto& group : equivalence_groups)
        for (std::size_t a = 0; a < group.size(); ++a)
            for (std::size_t b = a + 1; b < group.size(); ++b) out.insert(PairKey::of(group[a], group[b]));
    return out;
}

void validate_gold(const GoldAnnotation& gold) {
    std::unordered_set<MentionId> seen;
    for (const auto& group : gold.equivalence_groups) {
        if (group.size() < 2) throw SchemaError("gold group of size < 2 in " + gold.doc_id);
        for (MentionId id : group)
            if (!seen.insert(id).second)
                throw SchemaError("mention " + std::to_string(id) + " in two gold groups of " + gold.doc_id);
    }
}

Document document_from_json(const json& j) {
    Document d;
    d.doc_id = require_string(j, "doc_id", "document");
    d.doc_type = doc_type_from_string(require_string(j, "doc_type", "document"));

    std::unordered_set<std::string> section_ids;
    for (const auto& s : require_array(j, "sections", "document")) {
        Section sec{require_string(s, "section_id", "section"), require_string(s, "title", "section")};
        if (!section_ids.insert(sec.section_id).second)
            throw SchemaError("duplicate section_id '" + sec.section_id + "'");
        d.sections.push_back(std::move(sec));
    }

    std::unordered_set<std::string> table_ids;
    for (const auto& tj : require_array(j, "tables", "document")) {
        const std::string id = require_string(tj, "table_id", "table");
        const std::string where = "table '" + id + "'";
        std::vector<std::vector<std::string>> grid;
        for (const auto& row : require_array(tj, "cells", where)) {
            if (!row.is_array()) throw SchemaError(where + " row is not an array");
            auto& out_row = grid.emplace_back();
            for (const auto& cell : row) {
                if (!cell.is_string()) throw SchemaError(where + " cell is not a string");
                out_row.push_back(cell.get<std::string>());
            }
        }
        Table t = make_table(id, require_string(tj, "section_id", where),
                             require_string(tj, "chapter_title", where),
                             require_string(tj, "text_before", where),
                             require_string(tj, "text_after", where), grid);
        if (!table_ids.insert(t.table_id).second) throw SchemaError("duplicate table_id '" + id + "'");
        if (!section_ids.contains(t.section_id))
            throw SchemaError(where + " references unknown section '" + t.section_id + "'");
        d.tables.push_back(std::move(t));
    }
    return d;
}

Document parse_document(std::string_view bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("invalid JSON: ") + e.what());
    }
    return document_from_json(j);
}

json document_to_json(const Document& doc) {
    json sections = json::array();
    for (const auto& s : doc.sections) sections.push_back({{"section_id", s.section_id}, {"title", s.title}});
    json tables = json::array();
    for (const auto& t : doc.tables) {
        json cells = json::array();
        for (std::size_t r = 0; r < t.n_rows; ++r) {
            json row = json::array();
            for (std::size_t c = 0; c < t.n_cols; ++c) row.push_back(t.at(r, c).raw_text);
            cells.push_back(std::move(row));
        }
        tables.push_back({{"table_id", t.table_id},
                          {"section_id", t.section_id},
                          {"chapter_title", t.chapter_title},
                          {"text_before", t.text_before},
                          {"text_after", t.text_after},
                          {"cells", std::move(cells)}});
    }
    return {{"doc_id", doc.doc_id},
            {"doc_type", std::string(to_string(doc.doc_type))},
            {"sections", std::move(sections)},
            {"tables", std::move(tables)}};
}

std::string serialize_document(const Document& doc) { return document_to_json(doc).dump(); }

GoldAnnotation parse_gold(std::string_view bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("invalid gold JSON: ") + e.what());
    }
    GoldAnnotation g;
    g.doc_id = require_string(j, "doc_id", "gold");
    for (const auto& group : require_array(j, "groups", "gold")) {
        if (!group.is_array()) throw SchemaError("gold group is not an array");
        auto& out = g.equivalence_groups.emplace_back();
        for (const auto& id : group) {
            if (!id.is_number_integer()) throw SchemaError("gold mention id is not an integer");
            out.push_back(id.get<MentionId>());
        }
    }
    validate_gold(g);
    return g;
}

json gold_to_json(const GoldAnnotation& gold) {
    return {{"doc_id", gold.doc_id}, {"groups", gold.equivalence_groups}};
}

std::string escape_cell(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '|') {
            out += "\\|";
        } else if (c == '\n') {
            out += "\\n";
        } else if (c == '\r') {
            continue;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string linearize_table(const Table& t) {
    std::string out;
    auto emit_row = [&](auto&& cell_text) {
        out.push_back('|');
        for (std::size_t c = 0; c < t.n_cols; ++c) {
            const std::string text = cell_text(c);
            if (text.empty()) {
                out += " |";
            } else {
                out.push_back(' ');
                out += text;
                out += " |";
            }
        }
    };
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        if (r > 0) out.push_back('\n');
        emit_row([&](std::size_t c) { return escape_cell(t.at(r, c).raw_text); });
        if (r == 0) {
            out.push_back('\n');
            emit_row([](std::size_t) { return std::string("---"); });
        }
    }
    return out;
}

std::vector<NumericalMention> extract_mentions(const Table& t, std::size_t table_index,
                                               MentionId& next_id) {
    std::vector<NumericalMention> out;
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        for (std::size_t c = 0; c < t.n_cols; ++c) {
            const Cell& cell = t.at(r, c);
            if (cell.kind != CellKind::numeric) continue;
            out.push_back(NumericalMention{next_id++, t.table_id, table_index, r, c, cell.raw_text,
                                           normalize_value(cell.raw_text)});
        }
    }
    return out;
}

std::vector<NumericalMention> extract_mentions(const Document& d) {
    std::vector<NumericalMention> out;
    MentionId next = 0;
    for (std::size_t i = 0; i < d.tables.size(); ++i) {
        auto part = extract_mentions(d.tables[i], i, next);
        out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return out;
}

std::string utf8_tail(std::string_view s, std::size_t budget) {
    std::size_t pos = s.size();
    std::size_t count = 0;
    while (pos > 0 && count < budget) {
        --pos;
        while (pos > 0 && is_continuation(static_cast<unsigned char>(s[pos]))) --pos;
        ++count;
    }
    return std::string(s.substr(pos));
}

std::string utf8_head(std::string_view s, std::size_t budget) {
    std::size_t pos = 0;
    std::size_t count = 0;
    while (pos < s.size() && count < budget) {
        ++pos;
        while (pos < s.size() && is_continuation(static_cast<unsigned char>(s[pos]))) ++pos;
        ++count;
    }
    return std::string(s.substr(0, pos));
}

std::string table_context_text(const Table& t, const ContextOptions& opts) {
    std::string out = t.chapter_title;
    out.push_back('\n');
    out += utf8_tail(t.text_before, opts.surrounding_char_budget);
    out.push_back('\n');
    out += linearize_table(t);
    out.push_back('\n');
    out += utf8_head(t.text_after, opts.surrounding_char_budget);
    return out;
}

std::string position_statement(std::size_t row, std::size_t col) {
    return "value at row " + std::to_string(row) + ", column " + std::to_string(col);
}

MentionContext build_context(const Document& d, const NumericalMention& m, const ContextOptions& opts) {
    const std::size_t ti = d.table_index(m.table_id);
    if (ti == Document::npos) throw UnknownMention("table '" + m.table_id + "' not in " + d.doc_id);
    const Table& t = d.tables[ti];
    if (m.row >= t.n_rows || m.col >= t.n_cols || t.at(m.row, m.col).kind != CellKind::numeric ||
        t.at(m.row, m.col).raw_text != m.raw_text)
        throw UnknownMention("mention " + std::to_string(m.mention_id) + " does not match a numeric cell");
    return MentionContext{m.mention_id, table_context_text(t, opts) + "\n" + position_statement(m.row, m.col)};
}

}  // namespace tabcheck
