#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "support.hpp"
#include "tabcheck/errors.hpp"
#include "tabcheck/pair_classifier.hpp"
#include "tabcheck/tokenizer.hpp"

using namespace tabcheck;

namespace {

bool contains_token_run(const std::vector<Token>& hay, const std::vector<Token>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < needle.size() && ok; ++k) ok = hay[i + k].id == needle[k].id;
        if (ok) return true;
    }
    return false;
}

ClassificationPrompt bare_prompt(const std::string& doc, MentionId a, MentionId b) {
    ClassificationPrompt p;
    p.doc_id = doc;
    p.mention_i = a;
    p.mention_j = b;
    return p;
}

class CountingBackend final : public ClassifierBackend {
public:
    mutable std::atomic<int> in_flight{0};
    mutable std::atomic<int> peak{0};
    mutable std::atomic<int> calls{0};
    int fail_first = 0;

    std::string classify(const ClassificationPrompt& p) const override {
        const int now = ++in_flight;
        int old = peak.load();
        while (now > old && !peak.compare_exchange_weak(old, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
        --in_flight;
        if (calls++ < fail_first) throw BackendUnavailable("flaky");
        return p.mention_i % 2 == 0 ? "yes" : "no";
    }
};

}  // namespace

TEST_CASE("response parsing") {
    CHECK(parse_response("Yes, they are semantically equivalent.") == Decision::equivalent);
    CHECK(parse_response("not equivalent") == Decision::not_equivalent);
    CHECK(parse_response("cannot determine") == Decision::abstain);
    CHECK(parse_response("No, they are not equivalent.") == Decision::not_equivalent);
    CHECK(parse_response("They are NOT semantically equivalent") == Decision::not_equivalent);
    CHECK(parse_response("EQUIVALENT") == Decision::equivalent);
    CHECK(parse_response("") == Decision::abstain);
    // word-bounded: "know" and "yesterday" do not hold markers
    CHECK(parse_response("I know nothing about yesterday") == Decision::abstain);
    CHECK(parse_response("Answer: no.") == Decision::not_equivalent);
    CHECK(parse_response("yes") == Decision::equivalent);
}

TEST_CASE("decision strings") {
    for (auto d : {Decision::equivalent, Decision::not_equivalent, Decision::abstain})
        CHECK(decision_from_string(to_string(d)) == d);
    CHECK_THROWS(decision_from_string("maybe"));
}

TEST_CASE("prompt masks numeric cells and names both positions") {
    Document d;
    d.doc_id = "d";
    d.sections = {{"s", ""}};
    d.tables.push_back(make_table("t1", "s", "Results", "Revenue rose.", "", {{"Item", "FY2019"}, {"Revenue", "49,120"}, {"Cost", "(3.5)"}}));
    d.tables.push_back(make_table("t2", "s", "Summary", "", "", {{"Item", "FY2019"}, {"Revenue", "49,120"}}));
    auto ms = extract_mentions(d);
    REQUIRE(ms.size() == 3);

    auto p = build_prompt(d, ms[0], ms[2]);
    CHECK(p.context_block.find("[NUM]") != std::string::npos);
    CHECK(p.context_block.find("49,120") == std::string::npos);
    CHECK(p.context_block.find("49120") == std::string::npos);
    CHECK(p.context_block.find("FY2019") != std::string::npos);
    CHECK(p.output_instruction.find("row 1, column 1 of table t1") != std::string::npos);
    CHECK(p.output_instruction.find("row 1, column 1 of table t2") != std::string::npos);
    CHECK(p.text().find(p.task_description) == 0);

    auto same = build_prompt(d, ms[0], ms[1]);
    CHECK(same.context_block.find("[Table t1]") != std::string::npos);
    CHECK(same.context_block.find("[Table t1]", same.context_block.find("[Table t1]") + 1) == std::string::npos);
    CHECK(same.output_instruction.find("row 2, column 1") != std::string::npos);

    NumericalMention bad = ms[0];
    bad.row = 9;
    CHECK_THROWS_AS(build_prompt(d, bad, ms[1]), PositionOutOfRange);
    bad = ms[0];
    bad.col = 5;
    CHECK_THROWS_AS(build_prompt(d, bad, ms[1]), PositionOutOfRange);
}

TEST_CASE("masking touches only numeric cells") {
    auto corpus = generate_corpus(testsupport::small_config(3, 71));
    for (const auto& d : corpus.documents)
        for (const auto& t : d.tables) {
            std::vector<std::vector<std::string>> grid(t.n_rows, std::vector<std::string>(t.n_cols));
            for (std::size_t r = 0; r < t.n_rows; ++r)
                for (std::size_t c = 0; c < t.n_cols; ++c)
                    grid[r][c] = t.at(r, c).kind == CellKind::numeric ? std::string(kNumPlaceholder) : t.at(r, c).raw_text;
            const Table masked = make_table(t.table_id, t.section_id, t.chapter_title, t.text_before, t.text_after, grid);
            CHECK(masked_table_context(t) == table_context_text(masked));
        }
}

TEST_CASE("no numeric value survives masking on generated prompts") {
    auto cfg = testsupport::small_config(8, 73);
    auto corpus = generate_corpus(cfg);
    const auto& tok = default_tokenizer();
    std::size_t prompts = 0;
    for (const auto& d : corpus.documents) {
        auto ms = extract_mentions(d);
        for (std::size_t k = 0; k + 7 < ms.size(); k += 3) {
            auto p = build_prompt(d, ms[k], ms[k + 7]);
            const auto hay = tok.tokenize(p.context_block);
            for (const auto* m : {&ms[k], &ms[k + 7]}) {
                const Table& t = d.tables[m->table_index];
                for (const auto& cell : t.cells) {
                    if (cell.kind != CellKind::numeric) continue;
                    CHECK_FALSE(contains_token_run(hay, tok.tokenize(normalize_value(cell.raw_text).to_string())));
                    CHECK(p.context_block.find("| " + cell.raw_text + " |") == std::string::npos);
                }
            }
            ++prompts;
        }
    }
    CHECK(prompts > 100);
}

TEST_CASE("templates need all four position slots") {
    PromptTemplates t;
    CHECK_NOTHROW(t.validate());
    t.output_instruction = "row {row_i} col {col_i} vs row {row_j}";
    CHECK_THROWS(t.validate());
}

TEST_CASE("oracle backend reproduces gold labels") {
    auto corpus = generate_corpus(testsupport::small_config(2, 75));
    OracleBackend oracle(label_set(corpus.gold));
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        const auto& d = corpus.documents[i];
        auto ms = extract_mentions(d);
        std::vector<ClassificationPrompt> prompts;
        for (std::size_t a = 0; a < ms.size(); a += 5)
            for (std::size_t b = a + 1; b < ms.size(); b += 7) prompts.push_back(build_prompt(d, ms[a], ms[b]));
        for (const auto& k : corpus.gold[i].pairs())
            prompts.push_back(build_prompt(d, ms[k.first], ms[k.second]));
        auto verdicts = classify_pairs(oracle, prompts);
        const auto gold = corpus.gold[i].pairs();
        REQUIRE(verdicts.size() == prompts.size());
        for (std::size_t v = 0; v < verdicts.size(); ++v) {
            CHECK(verdicts[v].mention_i == prompts[v].mention_i);
            CHECK(verdicts[v].mention_j == prompts[v].mention_j);
            const bool eq = gold.count(PairKey::of(prompts[v].mention_i, prompts[v].mention_j)) > 0;
            CHECK((verdicts[v].decision == Decision::equivalent) == eq);
            CHECK(verdicts[v].raw_response_digest == sha256_hex(verdicts[v].raw_response));
        }
    }
    CHECK(classify_pairs(oracle, std::vector<ClassificationPrompt>{}).empty());
}

TEST_CASE("noisy backend flips about the configured fraction, deterministically") {
    LabelSet labels;
    std::vector<ClassificationPrompt> prompts;
    for (MentionId i = 0; i < 10000; ++i) {
        prompts.push_back(bare_prompt("doc_" + std::to_string(i % 37), i, i + 1));
        if (i % 3 == 0) labels.insert({prompts.back().doc_id, PairKey::of(i, i + 1)});
    }
    OracleBackend oracle(labels);
    NoisyBackend noisy(labels, 0.1, 99);
    auto clean = classify_pairs(oracle, prompts);
    auto a = classify_pairs(noisy, prompts);
    auto b = classify_pairs(NoisyBackend(labels, 0.1, 99), prompts);
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        const bool f = a[i].decision != clean[i].decision;
        flipped += f;
        CHECK(f == noisy.flips(prompts[i]));
        CHECK(a[i].decision == b[i].decision);
    }
    const double rate = static_cast<double>(flipped) / prompts.size();
    CHECK(std::abs(rate - 0.1) <= 0.02);
    NoisyBackend silent(labels, 0.0, 1);
    auto c = classify_pairs(silent, prompts);
    for (std::size_t i = 0; i < prompts.size(); ++i) CHECK(c[i].decision == clean[i].decision);
}

TEST_CASE("dispatch keeps order, bounds concurrency and retries") {
    std::vector<ClassificationPrompt> prompts;
    for (MentionId i = 0; i < 60; ++i) prompts.push_back(bare_prompt("d", i, i + 100));
    CountingBackend backend;
    DispatchOptions opts;
    opts.max_in_flight = 3;
    opts.backoff = std::chrono::milliseconds(1);
    auto v = classify_pairs(backend, prompts, opts);
    REQUIRE(v.size() == prompts.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(v[i].mention_i == prompts[i].mention_i);
        CHECK(v[i].decision == (i % 2 == 0 ? Decision::equivalent : Decision::not_equivalent));
    }
    CHECK(backend.peak.load() <= 3);

    CountingBackend flaky;
    flaky.fail_first = 2;
    opts.max_in_flight = 1;
    CHECK(classify_pairs(flaky, std::span(prompts).first(1), opts).size() == 1);
    CountingBackend dead;
    dead.fail_first = 1000;
    opts.max_retries = 2;
    CHECK_THROWS_AS(classify_pairs(dead, std::span(prompts).first(4), opts), BackendUnavailable);
}

TEST_CASE("abstains are counted") {
    std::vector<ClassifierVerdict> v(3);
    v[0].decision = Decision::abstain;
    v[1].decision = Decision::equivalent;
    v[2].decision = Decision::abstain;
    CHECK(count_abstains(v) == 2);
}

TEST_CASE("sha256 known answers") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("verdict records round trip") {
    std::vector<ClassifierVerdict> v{{"d1", 3, 9, Decision::equivalent, "yes", sha256_hex("yes")},
                                     {"d2", 1, 2, Decision::abstain, "hmm", sha256_hex("hmm")}};
    std::stringstream ss;
    write_verdicts(ss, v);
    auto back = read_verdicts(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].doc_id == "d1");
    CHECK(back[0].mention_j == 9);
    CHECK(back[1].decision == Decision::abstain);
    CHECK(back[1].raw_response_digest == v[1].raw_response_digest);
    std::stringstream bad("{\"doc_id\": 1}\n");
    CHECK_THROWS_AS(read_verdicts(bad), SchemaError);
}

TEST_CASE("remote backend speaks chat-completion JSON to a local server") {
    httplib::Server server;
    std::mutex mu;
    std::vector<nlohmann::json> bodies;
    std::vector<std::string> auths;
    std::atomic<int> failures_left{1};
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        if (failures_left-- > 0) {
            res.status = 503;
            return;
        }
        auto j = nlohmann::json::parse(req.body);
        {
            std::lock_guard lock(mu);
            bodies.push_back(j);
            auths.push_back(req.get_header_value("Authorization"));
        }
        const std::string content = j["messages"][0]["content"].get<std::string>();
        const std::string reply = content.find("row 1") != std::string::npos ? "Yes, equivalent." : "No.";
        nlohmann::json out{{"choices", {{{"message", {{"role", "assistant"}, {"content", reply}}}}}}};
        res.set_content(out.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ::setenv("TABCHECK_TEST_TOKEN", "secret-token", 1);
    RemoteConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    cfg.token_env = "TABCHECK_TEST_TOKEN";
    cfg.model = "m";
    cfg.timeout = std::chrono::milliseconds(5000);
    RemoteBackend remote(cfg);

    ClassificationPrompt yes = bare_prompt("d", 1, 2);
    yes.task_description = "task";
    yes.context_block = "ctx";
    yes.output_instruction = "row 1 vs row 2";
    ClassificationPrompt no = yes;
    no.output_instruction = "row 3 vs row 4";
    DispatchOptions opts;
    opts.backoff = std::chrono::milliseconds(1);
    auto v = classify_pairs(remote, std::vector<ClassificationPrompt>{yes, no}, opts);
    REQUIRE(v.size() == 2);
    CHECK(v[0].decision == Decision::equivalent);
    CHECK(v[1].decision == Decision::not_equivalent);
    {
        std::lock_guard lock(mu);
        REQUIRE(bodies.size() == 2);
        CHECK(bodies[0]["temperature"] == 0);
        CHECK(bodies[0]["model"] == "m");
        CHECK(bodies[0]["messages"].size() == 1);
        CHECK(auths[0] == "Bearer secret-token");
    }
    CHECK(RemoteBackend::request_body(cfg, yes).find("\"temperature\":0") != std::string::npos);
    CHECK_THROWS_AS(RemoteBackend::response_text("{}"), BackendUnavailable);

    server.stop();
    th.join();
    opts.max_retries = 1;
    CHECK_THROWS_AS(classify_pairs(remote, std::vector<ClassificationPrompt>{yes}, opts), BackendUnavailable);
}
