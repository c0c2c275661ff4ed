#include "tabcheck/pair_classifier.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "tabcheck/hashing.hpp"

namespace tabcheck {

namespace {

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

void check_position(const Document& d, const NumericalMention& m) {
    if (m.table_index >= d.tables.size())
        throw PositionOutOfRange("mention " + std::to_string(m.mention_id) + " refers to table index " +
                                 std::to_string(m.table_index));
    const Table& t = d.tables[m.table_index];
    if (m.row >= t.n_rows || m.col >= t.n_cols)
        throw PositionOutOfRange("mention " + std::to_string(m.mention_id) + " at (" + std::to_string(m.row) + ", " +
                                 std::to_string(m.col) + ") outside " + std::to_string(t.n_rows) + "x" +
                                 std::to_string(t.n_cols) + " table " + t.table_id);
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

void PromptTemplates::validate() const {
    for (std::string_view slot : {"{row_i}", "{col_i}", "{row_j}", "{col_j}"})
        if (output_instruction.find(slot) == std::string::npos)
            throw Error("output instruction lacks slot " + std::string(slot));
}

std::string ClassificationPrompt::text() const {
    return task_description + "\n\n" + context_block + "\n\n" + output_instruction;
}

std::string masked_table_context(const Table& t, const ContextOptions& opts) {
    Table masked = t;
    for (auto& cell : masked.cells)
        if (cell.kind == CellKind::numeric) cell.raw_text = std::string(kNumPlaceholder);
    return table_context_text(masked, opts);
}

ClassificationPrompt build_prompt(const Document& d, const NumericalMention& a, const NumericalMention& b,
                                  const PromptTemplates& templates) {
    templates.validate();
    check_position(d, a);
    check_position(d, b);
    const Table& ta = d.tables[a.table_index];
    const Table& tb = d.tables[b.table_index];

    ClassificationPrompt p;
    p.doc_id = d.doc_id;
    p.mention_i = a.mention_id;
    p.mention_j = b.mention_id;
    p.task_description = templates.task_description;
    p.context_block = "[Table " + ta.table_id + "]\n" + masked_table_context(ta);
    if (a.table_index != b.table_index) p.context_block += "\n\n[Table " + tb.table_id + "]\n" + masked_table_context(tb);

    std::string out = templates.output_instruction;
    replace_all(out, "{row_i}", std::to_string(a.row));
    replace_all(out, "{col_i}", std::to_string(a.col));
    replace_all(out, "{row_j}", std::to_string(b.row));
    replace_all(out, "{col_j}", std::to_string(b.col));
    replace_all(out, "{table_i}", ta.table_id);
    replace_all(out, "{table_j}", tb.table_id);
    p.output_instruction = std::move(out);
    return p;
}

std::string_view to_string(Decision d) {
    switch (d) {
        case Decision::equivalent: return "equivalent";
        case Decision::not_equivalent: return "not_equivalent";
        case Decision::abstain: return "abstain";
    }
    return "abstain";
}

Decision decision_from_string(std::string_view s) {
    if (s == "equivalent") return Decision::equivalent;
    if (s == "not_equivalent") return Decision::not_equivalent;
    if (s == "abstain") return Decision::abstain;
    throw SchemaError("unknown decision '" + std::string(s) + "'");
}

Decision parse_response(std::string_view raw, const ResponseMarkers& markers) {
    std::string text(raw);
    for (char& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    auto first_hit = [&](const std::string& marker) {
        for (std::size_t pos = text.find(marker); pos != std::string::npos; pos = text.find(marker, pos + 1)) {
            const bool left = pos == 0 || !word_char(text[pos - 1]);
            const std::size_t end = pos + marker.size();
            const bool right = end >= text.size() || !word_char(text[end]);
            if (left && right) return pos;
        }
        return std::string::npos;
    };

    std::size_t best = std::string::npos;
    Decision decision = Decision::abstain;
    for (const auto& m : markers.negative) {
        const std::size_t pos = first_hit(m);
        if (pos < best) {
            best = pos;
            decision = Decision::not_equivalent;
        }
    }
    for (const auto& m : markers.affirmative) {
        const std::size_t pos = first_hit(m);
        if (pos < best) {
            best = pos;
            decision = Decision::equivalent;
        }
    }
    return decision;
}

LabelSet label_set(std::span<const GoldAnnotation> gold) {
    LabelSet out;
    for (const auto& g : gold)
        for (const auto& k : g.pairs()) out.emplace(g.doc_id, k);
    return out;
}

std::string OracleBackend::classify(const ClassificationPrompt& prompt) const {
    const bool eq = equivalent_.contains({prompt.doc_id, PairKey::of(prompt.mention_i, prompt.mention_j)});
    return std::string(eq ? kAffirmativeReply : kNegativeReply);
}

NoisyBackend::NoisyBackend(LabelSet equivalent, double flip_rate, std::uint64_t seed)
    : equivalent_(std::move(equivalent)), flip_rate_(flip_rate), seed_(seed) {
    if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw Error("flip rate must lie in [0, 1]");
}

bool NoisyBackend::flips(const ClassificationPrompt& prompt) const {
    const PairKey k = PairKey::of(prompt.mention_i, prompt.mention_j);
    std::uint64_t h = fnv1a64(prompt.doc_id, seed_);
    h = mix64(h ^ static_cast<std::uint64_t>(k.first));
    h = mix64(h ^ static_cast<std::uint64_t>(k.second));
    return unit_double(h) < flip_rate_;
}

std::string NoisyBackend::classify(const ClassificationPrompt& prompt) const {
    bool eq = equivalent_.contains({prompt.doc_id, PairKey::of(prompt.mention_i, prompt.mention_j)});
    if (flips(prompt)) eq = !eq;
    return std::string(eq ? kAffirmativeReply : kNegativeReply);
}

RemoteBackend::RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme_end = cfg_.url.find("://");
    if (scheme_end == std::string::npos) throw Error("remote backend url needs a scheme: " + cfg_.url);
    const auto path_start = cfg_.url.find('/', scheme_end + 3);
    scheme_host_port_ = cfg_.url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : cfg_.url.substr(path_start);
    if (const char* tok = std::getenv(cfg_.token_env.c_str())) token_ = tok;
}

std::string RemoteBackend::request_body(const RemoteConfig& cfg, const ClassificationPrompt& prompt) {
    nlohmann::json j{{"model", cfg.model},
                     {"temperature", 0},
                     {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.text()}}})}};
    return j.dump();
}

std::string RemoteBackend::response_text(const std::string& body) {
    try {
        const auto j = nlohmann::json::parse(body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
        throw BackendUnavailable(std::string("malformed response: ") + ex.what());
    }
}

std::string RemoteBackend::classify(const ClassificationPrompt& prompt) const {
    httplib::Client client(scheme_host_port_);
    if (!client.is_valid()) throw BackendUnavailable("cannot create client for " + scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    const auto res = client.Post(path_, headers, request_body(cfg_, prompt), "application/json");
    if (!res) throw BackendUnavailable(cfg_.url + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw BackendUnavailable(cfg_.url + ": HTTP " + std::to_string(res->status));
    return response_text(res->body);
}

std::vector<ClassifierVerdict> classify_pairs(const ClassifierBackend& backend,
                                              std::span<const ClassificationPrompt> prompts,
                                              const DispatchOptions& opts) {
    std::vector<ClassifierVerdict> out(prompts.size());
    if (prompts.empty()) return out;

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            if (failed.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= prompts.size()) return;
            const auto& p = prompts[i];
            std::string raw;
            for (int attempt = 0;; ++attempt) {
                try {
                    raw = backend.classify(p);
                    break;
                } catch (const BackendUnavailable&) {
                    if (attempt >= opts.max_retries) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        failed = true;
                        return;
                    }
                    std::this_thread::sleep_for(opts.backoff * (1 << std::min(attempt, 10)));
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    failed = true;
                    return;
                }
            }
            const Decision d = parse_response(raw);
            std::string digest = sha256_hex(raw);
            out[i] = ClassifierVerdict{p.doc_id, p.mention_i, p.mention_j, d, std::move(raw), std::move(digest)};
        }
    };

    const std::size_t n_workers = std::clamp<std::size_t>(opts.max_in_flight, 1, prompts.size());
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
    return out;
}

std::size_t count_abstains(std::span<const ClassifierVerdict> verdicts) {
    return static_cast<std::size_t>(
        std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.decision == Decision::abstain; }));
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 15]);
    }
    return out;
}

void write_verdicts(std::ostream& out, std::span<const ClassifierVerdict> verdicts) {
    for (const auto& v : verdicts) {
        nlohmann::json j{{"doc_id", v.doc_id},
                         {"mention_i", v.mention_i},
                         {"mention_j", v.mention_j},
                         {"decision", to_string(v.decision)},
                         {"raw_response_digest",
                          v.raw_response_digest.empty() ? sha256_hex(v.raw_response) : v.raw_response_digest}};
        out << j.dump() << '\n';
    }
}

std::vector<ClassifierVerdict> read_verdicts(std::istream& in) {
    std::vector<ClassifierVerdict> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ClassifierVerdict v;
            v.doc_id = j.at("doc_id").get<std::string>();
            v.mention_i = j.at("mention_i").get<MentionId>();
            v.mention_j = j.at("mention_j").get<MentionId>();
            v.decision = decision_from_string(j.at("decision").get<std::string>());
            v.raw_response_digest = j.at("raw_response_digest").get<std::string>();
            out.push_back(std::move(v));
        } catch (const nlohmann::json::exception& ex) {
            throw SchemaError(std::string("verdict record: ") + ex.what());
        }
    }
    return out;
}

}  // namespace tabcheck
