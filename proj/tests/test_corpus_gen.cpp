#include <doctest.h>

#include <filesystem>
#include <map>

#include "support.hpp"
#include "tabcheck/corpus_gen.hpp"
#include "tabcheck/errors.hpp"
#include "tabcheck/pipeline.hpp"

using namespace tabcheck;

namespace {

std::string dump_all(const SyntheticCorpus& c) {
    std::string s;
    for (const auto& d : c.documents) s += serialize_document(d);
    for (const auto& g : c.gold) s += gold_to_json(g).dump();
    for (const auto& p : c.planted_inconsistencies) s += planted_to_json(p).dump();
    return s;
}

std::map<MentionId, NumericValue> values_of(const Document& d) {
    std::map<MentionId, NumericValue> out;
    for (const auto& m : extract_mentions(d)) out[m.mention_id] = m.value;
    return out;
}

std::size_t group_count(const SyntheticCorpus& c) {
    std::size_t n = 0;
    for (const auto& g : c.gold) n += g.equivalence_groups.size();
    return n;
}

}  // namespace

TEST_CASE("all-isolated config yields no gold groups") {
    auto cfg = testsupport::small_config(3);
    cfg.isolated_fraction = 1.0;
    auto c = generate_corpus(cfg);
    for (const auto& g : c.gold) CHECK(g.equivalence_groups.empty());
}

TEST_CASE("generation is deterministic under config and seed") {
    auto cfg = testsupport::small_config(5, 99);
    cfg.inconsistency_rate = 0.3;
    CHECK(dump_all(generate_corpus(cfg)) == dump_all(generate_corpus(cfg)));
    auto other = cfg;
    other.rng_seed = 100;
    CHECK(dump_all(generate_corpus(cfg)) != dump_all(generate_corpus(other)));
}

TEST_CASE("grouped fraction tracks the configured share") {
    GenConfig cfg;  // 50 docs, ~200 mentions each, 20% grouped
    auto c = generate_corpus(cfg);
    std::size_t mentions = 0, grouped = 0;
    for (std::size_t i = 0; i < c.documents.size(); ++i) {
        mentions += extract_mentions(c.documents[i]).size();
        for (const auto& g : c.gold[i].equivalence_groups) grouped += g.size();
    }
    const double frac = static_cast<double>(grouped) / static_cast<double>(mentions);
    CHECK(std::abs(frac - 0.2) <= 0.02);
}

TEST_CASE("pos-neg ratio matches the configured regime") {
    GenConfig cfg;
    cfg.n_docs = 20;
    auto c = generate_corpus(cfg);
    const double measured = measured_pos_neg_ratio(c);
    const double expected = expected_pos_neg_ratio(cfg);
    CHECK(std::abs(measured - expected) / expected <= 0.10);
}

TEST_CASE("gold groups hold identical values before injection") {
    auto c = generate_corpus(testsupport::small_config(10, 8));
    for (std::size_t i = 0; i < c.documents.size(); ++i) {
        auto vals = values_of(c.documents[i]);
        std::set<std::string> tables;
        for (const auto& grp : c.gold[i].equivalence_groups) {
            CHECK(grp.size() >= 2);
            for (auto id : grp) {
                REQUIRE(vals.count(id));
                CHECK(vals[id] == vals[grp.front()]);
            }
        }
        for (const auto& t : c.documents[i].tables) CHECK(tables.insert(t.table_id).second);
        CHECK_NOTHROW(parse_document(serialize_document(c.documents[i])));
    }
}

TEST_CASE("inject_inconsistencies at rate 0 changes nothing") {
    auto c = generate_corpus(testsupport::small_config(4, 2));
    auto same = inject_inconsistencies(c, 0.0, 17);
    CHECK(dump_all(same) == dump_all(c));
    CHECK(same.planted_inconsistencies.empty());
}

TEST_CASE("inject_inconsistencies at rate 1 perturbs every group") {
    auto cfg = testsupport::small_config(1, 4);
    cfg.group_count = 10;
    auto c = generate_corpus(cfg);
    REQUIRE(group_count(c) == 10);
    auto bad = inject_inconsistencies(c, 1.0, 3);
    CHECK(bad.planted_inconsistencies.size() == 10);
}

TEST_CASE("planted pairs disagree numerically and untouched group pairs agree") {
    auto cfg = testsupport::small_config(10, 12);
    cfg.inconsistency_rate = 0.4;
    auto c = generate_corpus(cfg);
    REQUIRE_FALSE(c.planted_inconsistencies.empty());
    auto planted = planted_pairs(c.documents, c.planted_inconsistencies);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < c.documents.size(); ++i) {
        auto vals = values_of(c.documents[i]);
        const auto gold = c.gold[i].pairs();
        for (const auto& k : planted[i].pairs) {
            CHECK(gold.count(k));
            CHECK_FALSE(numeric_equal(vals[k.first], vals[k.second]));
        }
        for (const auto& k : gold) {
            const bool is_planted = planted[i].pairs.count(k) > 0;
            CHECK(numeric_equal(vals[k.first], vals[k.second]) == !is_planted);
            ++checked;
        }
    }
    CHECK(checked > 0);
    for (const auto& p : c.planted_inconsistencies) CHECK_FALSE(p.original_value == p.perturbed_value);
}

TEST_CASE("infeasible configs are rejected") {
    auto cfg = testsupport::small_config(1);
    cfg.isolated_fraction = 1.5;
    CHECK_THROWS_AS(generate_corpus(cfg), InfeasibleConfig);
    cfg = testsupport::small_config(1);
    cfg.group_size_min = 5;
    cfg.group_size_max = 2;
    CHECK_THROWS_AS(generate_corpus(cfg), InfeasibleConfig);
    cfg = testsupport::small_config(1);
    cfg.inconsistency_rate = -0.1;
    CHECK_THROWS_AS(generate_corpus(cfg), InfeasibleConfig);
}

TEST_CASE("flat key-value config round trip") {
    GenConfig cfg;
    cfg.apply({{"n_docs", "7"}, {"inconsistency_rate", "0.25"}});
    CHECK(cfg.n_docs == 7);
    CHECK(cfg.inconsistency_rate == 0.25);
    GenConfig back;
    back.apply(cfg.to_kv());
    CHECK(back.to_kv() == cfg.to_kv());
    CHECK_THROWS_AS(cfg.apply({{"bogus", "1"}}), SchemaError);
}

TEST_CASE("corpus directory round trip") {
    auto cfg = testsupport::small_config(3, 6);
    cfg.inconsistency_rate = 0.5;
    auto c = generate_corpus(cfg);
    const auto dir = std::filesystem::temp_directory_path() / "tabcheck_corpus_rt";
    std::filesystem::remove_all(dir);
    write_corpus(c, dir);
    CHECK(dump_all(read_corpus(dir)) == dump_all(c));
    std::filesystem::remove_all(dir);
}
