#include <doctest.h>

#include <json.hpp>

#include "support.hpp"
#include "tabcheck/document.hpp"
#include "tabcheck/errors.hpp"

using namespace tabcheck;

namespace {

std::string one_table_doc(const std::string& cells) {
    return R"({"doc_id":"d","doc_type":"synthetic","sections":[{"section_id":"s","title":"T"}],
              "tables":[{"table_id":"t","section_id":"s","chapter_title":"C","text_before":"","text_after":"",
              "cells":)" + cells + "}]}";
}

}  // namespace

TEST_CASE("normalize_value handles separators, accounting negatives and percent") {
    auto a = normalize_value("49,120");
    CHECK(a.to_string() == "49120");
    CHECK_FALSE(a.is_percent());
    CHECK(normalize_value("(1,234.5)").to_string() == "-1234.5");
    auto p = normalize_value("12.5%");
    CHECK(p.is_percent());
    CHECK(p.to_string() == "12.5%");
    CHECK(normalize_value("$1 000").to_string() == "1000");
    CHECK(normalize_value("0.8%").to_string() == "0.8%");
    CHECK(normalize_value("007").to_string() == "7");
    CHECK_THROWS_AS(normalize_value("12a"), NotNumeric);
    CHECK_THROWS_AS(normalize_value(""), NotNumeric);
    CHECK_THROWS_AS(normalize_value("Revenue"), NotNumeric);
}

TEST_CASE("numeric values compare exactly, not as binary floats") {
    CHECK(numeric_equal(normalize_value("1.50"), normalize_value("1.5")));
    CHECK_FALSE(numeric_equal(normalize_value("1.5"), normalize_value("1.5%")));
    CHECK_FALSE(numeric_equal(normalize_value("0.30000000000000001"), normalize_value("0.3")));
    auto big = normalize_value("123,456,789,012,345,678,901.25");
    CHECK(NumericValue::from_canonical(big.to_string()) == big);
}

TEST_CASE("parse_document accepts a minimal table and rejects ragged grids") {
    Document d = parse_document(one_table_doc(R"([["5"]])"));
    CHECK(d.tables.size() == 1);
    CHECK(extract_mentions(d).size() <= 1);
    CHECK_THROWS_AS(parse_document(one_table_doc(R"([["a","b","c"],["1","2"]])")), GridError);
    CHECK_THROWS_AS(parse_document(R"({"doc_id":"d"})"), SchemaError);
    CHECK_THROWS_AS(parse_document(one_table_doc(R"([[1]])")), SchemaError);
}

TEST_CASE("linearize_table format and escaping") {
    Table t = make_table("t", "s", "", "", "", {{"A", "B"}, {"1", "2"}});
    CHECK(linearize_table(t) == "| A | B |\n| --- | --- |\n| 1 | 2 |");
    Table e = make_table("t", "s", "", "", "", {{"A", ""}, {"a|b", "x\ny"}});
    const std::string s = linearize_table(e);
    CHECK(s.find("| A | |") != std::string::npos);
    CHECK(s.find("a\\|b") != std::string::npos);
    CHECK(s.find("x\ny") == std::string::npos);
}

TEST_CASE("extract_mentions scans numeric cells in row-major order") {
    Table text_only = make_table("t", "s", "", "", "", {{"A", "B"}, {"x", "y"}});
    MentionId next = 0;
    CHECK(extract_mentions(text_only, 0, next).empty());

    const std::vector<std::vector<std::string>> grid{{"Item", "2019", "2020"}, {"Sales", "49,120", "x"}, {"Cost", "(3)", "4%"}};
    Table t = make_table("t", "s", "", "", "", grid);
    next = 10;
    auto ms = extract_mentions(t, 0, next);
    std::vector<std::pair<std::size_t, std::size_t>> expected;
    for (std::size_t r = 0; r < grid.size(); ++r)
        for (std::size_t c = 0; c < grid[r].size(); ++c) {
            NumericValue v;
            if (try_normalize_value(grid[r][c], v)) expected.emplace_back(r, c);
        }
    REQUIRE(ms.size() == expected.size());
    CHECK(ms.size() == 5);
    for (std::size_t i = 0; i < ms.size(); ++i) {
        CHECK(ms[i].row == expected[i].first);
        CHECK(ms[i].col == expected[i].second);
        CHECK(ms[i].mention_id == static_cast<MentionId>(10 + i));
    }
    CHECK(ms[2].value.to_string() == "49120");
    CHECK(next == 15);
}

TEST_CASE("build_context caps surrounding text per side and shares table context") {
    const std::string before(1200, 'q');
    const std::string after(1200, 'z');
    Document d;
    d.doc_id = "d";
    d.sections = {{"s", "S"}};
    d.tables.push_back(make_table("t", "s", "Chapter", before, after, {{"Item", "Year"}, {"x", "1"}, {"y", "2"}}));
    auto ms = extract_mentions(d);
    REQUIRE(ms.size() == 2);
    auto c0 = build_context(d, ms[0]);
    auto c1 = build_context(d, ms[1]);
    CHECK(std::count(c0.text.begin(), c0.text.end(), 'q') == 500);
    CHECK(std::count(c0.text.begin(), c0.text.end(), 'z') == 500);
    const std::string shared = table_context_text(d.tables[0]);
    CHECK(c0.text == shared + "\n" + position_statement(1, 1));
    CHECK(c1.text == shared + "\n" + position_statement(2, 1));
    CHECK(build_context(d, ms[0]).text == c0.text);

    NumericalMention ghost = ms[0];
    ghost.table_id = "nope";
    CHECK_THROWS_AS(build_context(d, ghost), UnknownMention);
}

TEST_CASE("utf8 truncation counts code points") {
    CHECK(utf8_tail("\xc3\xa9\xc3\xa9x", 2) == "\xc3\xa9x");
    CHECK(utf8_head("\xc3\xa9\xc3\xa9x", 1) == "\xc3\xa9");
}

TEST_CASE("generated documents round-trip through serialization") {
    auto corpus = generate_corpus(testsupport::small_config(100, 21));
    for (const auto& d : corpus.documents) {
        const std::string once = serialize_document(d);
        const Document back = parse_document(once);
        CHECK(serialize_document(back) == once);
    }
}

TEST_CASE("document invariants on generated output") {
    auto corpus = generate_corpus(testsupport::small_config(10, 3));
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        const auto& d = corpus.documents[i];
        auto m1 = extract_mentions(d);
        auto m2 = extract_mentions(d);
        REQUIRE(m1.size() == m2.size());
        for (std::size_t k = 0; k < m1.size(); ++k) {
            CHECK(m1[k].mention_id == static_cast<MentionId>(k));
            CHECK(m1[k].mention_id == m2[k].mention_id);
            CHECK(m1[k].row == m2[k].row);
        }
        for (const auto& t : d.tables)
            for (std::size_t r = 0; r < t.n_rows; ++r)
                for (std::size_t c = 0; c < t.n_cols; ++c) {
                    NumericValue v;
                    CHECK((t.at(r, c).kind == CellKind::numeric) == try_normalize_value(t.at(r, c).raw_text, v));
                }
        const auto& g = corpus.gold[i];
        std::size_t expect = 0;
        for (const auto& grp : g.equivalence_groups) expect += grp.size() * (grp.size() - 1) / 2;
        CHECK(g.pairs().size() == expect);
        CHECK_NOTHROW(validate_gold(g));
    }
}

TEST_CASE("validate_gold rejects overlapping and singleton groups") {
    CHECK_THROWS_AS(validate_gold(GoldAnnotation{"d", {{1}}}), SchemaError);
    CHECK_THROWS_AS(validate_gold(GoldAnnotation{"d", {{1, 2}, {2, 3}}}), SchemaError);
    CHECK_NOTHROW(validate_gold(GoldAnnotation{"d", {{1, 2}, {3, 4, 5}}}));
}
