#include "tabcheck/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "tabcheck/cipe.hpp"
#include "tabcheck/cnap.hpp"
#include "tabcheck/hashing.hpp"
#include "tabcheck/pipeline.hpp"

namespace fs = std::filesystem;

namespace tabcheck {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::invalid_argument("not a boolean");
}

std::uint64_t seed_or(const RunConfig& c, const char* name, std::uint64_t derived) {
    auto it = c.seed_overrides.find(name);
    return it == c.seed_overrides.end() ? derived : it->second;
}

}  // namespace

std::uint64_t RunConfig::gen_seed() const { return seed_or(*this, "gen_seed", seed); }
std::uint64_t RunConfig::init_seed() const { return seed_or(*this, "init_seed", seed + 1); }
std::uint64_t RunConfig::train_seed() const { return seed_or(*this, "train_seed", seed + 4); }
std::uint64_t RunConfig::index_seed() const { return seed_or(*this, "index_seed", seed + 2); }
std::uint64_t RunConfig::noise_seed() const { return seed_or(*this, "noise_seed", seed + 3); }
std::uint64_t RunConfig::path_seed() const { return seed_or(*this, "path_seed", seed + 5); }

unsigned RunConfig::effective_workers() const {
    if (workers > 0) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

void RunConfig::apply(const std::string& key, const std::string& value) {
    try {
        if (key.starts_with("gen.")) {
            gen.apply({{key.substr(4), value}});
            return;
        }
        if (key == "corpus_dir") corpus_dir = value;
        else if (key == "gold_dir") gold_dir = value;
        else if (key == "out_dir") out_dir = value;
        else if (key == "embedder") {
            if (value != "auto" && value != "features" && value != "projection" && value != "reference")
                throw std::invalid_argument("embedder");
            embedder = value;
        } else if (key == "weights") weights = value;
        else if (key == "dim") dim = std::stoul(value);
        else if (key == "feature_dim") features.feature_dim = std::stoul(value);
        else if (key == "max_len") max_len = std::stoul(value);
        else if (key == "tau") loss.tau = std::stod(value);
        else if (key == "alpha1") loss.alpha1 = std::stod(value);
        else if (key == "alpha2") loss.alpha2 = std::stod(value);
        else if (key == "epsilon") loss.epsilon = std::stod(value);
        else if (key == "loss") loss_kind = loss_kind_from_string(value);
        else if (key == "epochs") epochs = std::stoi(value);
        else if (key == "learning_rate") learning_rate = std::stod(value);
        else if (key == "tables_per_step") tables_per_step = std::stoi(value);
        else if (key == "threshold") filter.threshold = std::stod(value);
        else if (key == "m_neighbors") filter.m_neighbors = std::stoul(value);
        else if (key == "ef_construction") filter.ef_construction = std::stoul(value);
        else if (key == "ef_search") filter.ef_search = std::stoul(value);
        else if (key == "exact_mode") filter.exact_mode = parse_bool(value);
        else if (key == "sweep") {
            parse_threshold_range(value);
            sweep = value;
        } else if (key == "backend") {
            if (value != "oracle" && value != "noisy" && value != "remote") throw std::invalid_argument("backend");
            backend = value;
        } else if (key == "noise_rate") noise_rate = std::stod(value);
        else if (key == "remote_url") remote.url = value;
        else if (key == "remote_model") remote.model = value;
        else if (key == "token_env") remote.token_env = value;
        else if (key == "timeout_ms") remote.timeout = std::chrono::milliseconds(std::stol(value));
        else if (key == "max_in_flight") dispatch.max_in_flight = std::stoul(value);
        else if (key == "max_retries") dispatch.max_retries = std::stoi(value);
        else if (key == "backoff_ms") dispatch.backoff = std::chrono::milliseconds(std::stol(value));
        else if (key == "chunk_size") chunk_size = std::stoul(value);
        else if (key == "path_order") {
            if (value != "greedy" && value != "reading") throw std::invalid_argument("path_order");
            path_order = value;
        } else if (key == "seed") seed = std::stoull(value);
        else if (key == "gen_seed" || key == "init_seed" || key == "train_seed" || key == "index_seed" ||
                 key == "noise_seed" || key == "path_seed")
            seed_overrides[key] = std::stoull(value);
        else if (key == "workers") workers = static_cast<unsigned>(std::stoul(value));
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad value for '" + key + "': " + value);
    }
}

void RunConfig::apply(const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv) apply(k, v);
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + " lacks '='");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + " has an empty key");
        kv[key] = trim(t.substr(eq + 1));
    }
    return kv;
}

SyntheticCorpus load_corpus(const RunConfig& cfg) {
    if (cfg.corpus_dir.empty()) throw ConfigError("corpus_dir is not set");
    if (!fs::is_directory(cfg.corpus_dir)) throw ConfigError("corpus_dir does not exist: " + cfg.corpus_dir);
    SyntheticCorpus corpus = read_corpus(cfg.corpus_dir);
    if (!cfg.gold_dir.empty()) {
        if (!fs::is_directory(cfg.gold_dir)) throw ConfigError("gold_dir does not exist: " + cfg.gold_dir);
        for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
            const fs::path p = fs::path(cfg.gold_dir) / (corpus.documents[i].doc_id + ".json");
            corpus.gold[i] = fs::exists(p) ? parse_gold(read_text_file(p))
                                           : GoldAnnotation{corpus.documents[i].doc_id, {}};
        }
    }
    for (const auto& g : corpus.gold) validate_gold(g);
    return corpus;
}

std::shared_ptr<const MentionEmbedder> make_embedder(const RunConfig& cfg) {
    std::string kind = cfg.embedder;
    if (kind == "auto") kind = cfg.weights.empty() ? "features" : "projection";
    if (kind == "features") return std::make_shared<FeatureEmbedder>(cfg.features);
    if (kind == "projection") {
        if (cfg.weights.empty()) throw ConfigError("projection embedder needs weights");
        if (!fs::exists(cfg.weights)) throw ConfigError("weights file does not exist: " + cfg.weights);
        return std::make_shared<ProjectionEmbedder>(ProjectionMatrix::from_matrix(read_matrix(fs::path(cfg.weights))),
                                                    cfg.features);
    }
    return std::make_shared<ReferenceEmbedder>(ReferenceWeights::make(cfg.dim, cfg.init_seed()), LayoutKind::parallel,
                                               std::string(kDefaultEmbeddingPrompt), cfg.max_len);
}

std::shared_ptr<const ClassifierBackend> make_backend(const RunConfig& cfg, const SyntheticCorpus& corpus) {
    if (cfg.backend == "oracle") return std::make_shared<OracleBackend>(label_set(corpus.gold));
    if (cfg.backend == "noisy") return std::make_shared<NoisyBackend>(label_set(corpus.gold), cfg.noise_rate, cfg.noise_seed());
    if (cfg.remote.url.empty()) throw ConfigError("remote backend needs remote_url");
    return std::make_shared<RemoteBackend>(cfg.remote);
}

namespace {

struct UsageError : Error {
    using Error::Error;
};

std::vector<fs::path> embedding_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw UsageError("embeddings directory does not exist: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".bin") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

CandidatePairSet filter_document(const EmbeddingMatrix& e, const FilterParams& p) {
    if (e.empty()) return {};
    return query_pairs(build_index(e, p), p);
}

FilterParams filter_params(const RunConfig& cfg) {
    FilterParams p = cfg.filter;
    p.seed = cfg.index_seed();
    return p;
}

std::vector<DocumentMentions> all_mentions(const SyntheticCorpus& corpus) {
    std::vector<DocumentMentions> out;
    for (const auto& d : corpus.documents) out.push_back({d.doc_id, extract_mentions(d)});
    return out;
}

std::vector<MatchReport> reports_from(const SyntheticCorpus& corpus, std::span<const ClassifierVerdict> verdicts) {
    std::vector<MatchReport> reports;
    for (const auto& d : corpus.documents) {
        const auto mentions = extract_mentions(d);
        reports.push_back(detect_inconsistencies(d.doc_id, verdicts, mentions));
    }
    return reports;
}

std::vector<ClassifierVerdict> load_verdicts(const std::string& path) {
    std::istringstream in(read_text_file(path));
    return read_verdicts(in);
}

std::string metrics_text(const EvaluationSummary& s) { return to_json(s).dump(2) + "\n"; }

class Cli {
public:
    Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    int run(const std::vector<std::string>& args);

private:
    // Flags are recorded as config keys and applied after the config file.
    CLI::Option* key_flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        return app->add_option_function<std::string>(
            flag, [this, key](const std::string& v) { flags_.emplace_back(key, v); }, help);
    }

    void build();
    void finalize_config();

    int cmd_gen();
    int cmd_extract();
    int cmd_embed();
    int cmd_train();
    int cmd_filter();
    int cmd_sweep();
    int cmd_cnap();
    int cmd_classify();
    int cmd_check();
    int cmd_eval();
    int cmd_run_all();

    std::ostream& out_;
    std::ostream& err_;
    CLI::App app_{"Cross-checks numerical mentions across the tables of a document.", "tabcheck"};
    RunConfig cfg_;
    std::string config_path_;
    std::vector<std::string> sets_;
    std::vector<std::pair<std::string, std::string>> flags_;

    std::string out_path_;
    std::string embeddings_dir_;
    std::string candidates_path_;
    std::string verdicts_path_;
    std::string log_path_;
};

void Cli::build() {
    app_.require_subcommand(1);
    app_.option_defaults()->always_capture_default(false);
    app_.add_option("--config", config_path_, "flat key=value config file");
    app_.add_option("--set", sets_, "override a config key (key=value), repeatable");
    key_flag(&app_, "--seed", "seed", "base seed");
    key_flag(&app_, "--workers", "workers", "document-level worker threads (default: all cores)");

    auto add = [&](const std::string& name, const std::string& help) {
        auto* s = app_.add_subcommand(name, help);
        s->fallthrough();
        return s;
    };

    auto* gen = add("gen", "generate a synthetic corpus");
    gen->add_option("--out", out_path_, "corpus directory")->required();
    key_flag(gen, "--docs", "gen.n_docs", "number of documents");
    key_flag(gen, "--tables", "gen.tables_per_doc", "tables per document");
    key_flag(gen, "--mentions", "gen.mentions_per_doc_target", "mentions per document");
    key_flag(gen, "--inconsistency-rate", "gen.inconsistency_rate", "fraction of groups to perturb");

    auto* extract = add("extract", "extract numerical mentions");
    key_flag(extract, "--corpus", "corpus_dir", "corpus directory");
    extract->add_option("--out", out_path_, "mentions file (jsonl)")->required();

    auto* embed = add("embed", "embed every mention");
    key_flag(embed, "--corpus", "corpus_dir", "corpus directory");
    embed->add_option("--out", out_path_, "embeddings directory")->required();
    key_flag(embed, "--embedder", "embedder", "auto | features | projection | reference");
    key_flag(embed, "--weights", "weights", "trained projection file");

    auto* train = add("train-embedder", "train the projection embedder");
    key_flag(train, "--corpus", "corpus_dir", "training corpus directory");
    train->add_option("--out", out_path_, "projection file")->required();
    train->add_option("--log", log_path_, "training log (jsonl)");
    key_flag(train, "--loss", "loss", "decoupled | standard | decoupled-no-li");
    key_flag(train, "--epochs", "epochs", "epochs");
    key_flag(train, "--lr", "learning_rate", "learning rate");
    key_flag(train, "--dim", "dim", "output dimension");

    auto* filter = add("filter", "produce candidate pairs");
    filter->add_option("--embeddings", embeddings_dir_, "embeddings directory")->required();
    filter->add_option("--out", out_path_, "candidates file (jsonl)")->required();
    key_flag(filter, "--t", "threshold", "similarity threshold");
    key_flag(filter, "--exact", "exact_mode", "brute-force search (true/false)");

    auto* sweep = add("sweep", "recall and pair counts over thresholds");
    key_flag(sweep, "--corpus", "corpus_dir", "corpus directory");
    sweep->add_option("--embeddings", embeddings_dir_, "embeddings directory")->required();
    sweep->add_option("--out", out_path_, "csv file (default: stdout)");
    key_flag(sweep, "--t", "sweep", "lo:hi:step");

    auto* cnap = add("cnap", "build pretraining chunks");
    key_flag(cnap, "--corpus", "corpus_dir", "corpus directory");
    cnap->add_option("--out", out_path_, "chunks file (jsonl)")->required();
    key_flag(cnap, "--chunk-size", "chunk_size", "tokens per chunk");
    key_flag(cnap, "--order", "path_order", "greedy | reading");

    auto* classify = add("classify", "classify candidate pairs");
    key_flag(classify, "--corpus", "corpus_dir", "corpus directory");
    classify->add_option("--candidates", candidates_path_, "candidates file")->required();
    classify->add_option("--out", out_path_, "verdicts file (jsonl)")->required();
    key_flag(classify, "--backend", "backend", "oracle | noisy | remote");
    key_flag(classify, "--noise-rate", "noise_rate", "flip rate of the noisy backend");
    key_flag(classify, "--url", "remote_url", "chat-completion endpoint");
    key_flag(classify, "--max-in-flight", "max_in_flight", "concurrent requests");

    auto* check = add("check", "report inconsistencies");
    key_flag(check, "--corpus", "corpus_dir", "corpus directory");
    check->add_option("--verdicts", verdicts_path_, "verdicts file")->required();
    check->add_option("--out", out_path_, "reports directory")->required();

    auto* eval = add("eval", "evaluate verdicts against gold");
    key_flag(eval, "--corpus", "corpus_dir", "corpus directory");
    eval->add_option("--verdicts", verdicts_path_, "verdicts file")->required();
    eval->add_option("--out", out_path_, "metrics file (default: stdout)");

    auto* all = add("run-all", "run every stage");
    key_flag(all, "--corpus", "corpus_dir", "corpus directory");
    key_flag(all, "--out", "out_dir", "output directory");
    key_flag(all, "--embedder", "embedder", "auto | features | projection | reference");
    key_flag(all, "--weights", "weights", "trained projection file");
    key_flag(all, "--t", "threshold", "similarity threshold");
    key_flag(all, "--backend", "backend", "oracle | noisy | remote");
    key_flag(all, "--noise-rate", "noise_rate", "flip rate of the noisy backend");
    key_flag(all, "--url", "remote_url", "chat-completion endpoint");
}

void Cli::finalize_config() {
    if (!config_path_.empty()) {
        if (!fs::exists(config_path_)) throw UsageError("config file does not exist: " + config_path_);
        cfg_.apply(parse_config_text(read_text_file(config_path_)));
    }
    for (const auto& [k, v] : flags_) cfg_.apply(k, v);
    for (const auto& s : sets_) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
        cfg_.apply(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
}

int Cli::run(const std::vector<std::string>& args) {
    build();
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        if (!rev.empty()) rev.pop_back();  // program name
        app_.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out_ << app_.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out_ << app_.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err_ << "usage error: " << e.what() << "\n";
        return 2;
    }
    try {
        finalize_config();
    } catch (const Error& e) {
        err_ << "usage error: " << e.what() << "\n";
        return 2;
    }

    const std::string name = app_.get_subcommands().front()->get_name();
    try {
        if (name == "gen") return cmd_gen();
        if (name == "extract") return cmd_extract();
        if (name == "embed") return cmd_embed();
        if (name == "train-embedder") return cmd_train();
        if (name == "filter") return cmd_filter();
        if (name == "sweep") return cmd_sweep();
        if (name == "cnap") return cmd_cnap();
        if (name == "classify") return cmd_classify();
        if (name == "check") return cmd_check();
        if (name == "eval") return cmd_eval();
        if (name == "run-all") return cmd_run_all();
    } catch (const UsageError& e) {
        err_ << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err_ << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err_ << "error [" << name << "]: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int Cli::cmd_gen() {
    GenConfig g = cfg_.gen;
    g.rng_seed = cfg_.gen_seed();
    const SyntheticCorpus corpus = generate_corpus(g);
    if (fs::exists(out_path_)) {
        fs::remove_all(fs::path(out_path_) / "docs");
        fs::remove_all(fs::path(out_path_) / "gold");
        fs::remove(fs::path(out_path_) / "planted.jsonl");
    }
    write_corpus(corpus, out_path_);
    out_ << "gen: " << corpus.documents.size() << " documents, " << corpus.planted_inconsistencies.size()
         << " planted inconsistencies -> " << out_path_ << "\n";
    return 0;
}

int Cli::cmd_extract() {
    const SyntheticCorpus corpus = load_corpus(cfg_);
    const auto mentions = all_mentions(corpus);
    std::ostringstream ss;
    write_mentions(ss, mentions);
    write_text_file(out_path_, ss.str());
    std::size_t total = 0;
    for (const auto& d : mentions) total += d.mentions.size();
    out_ << "extract: " << total << " mentions in " << mentions.size() << " documents\n";
    return 0;
}

int Cli::cmd_embed() {
    const SyntheticCorpus corpus = load_corpus(cfg_);
    const auto embedder = make_embedder(cfg_);
    const std::size_t n = corpus.documents.size();
    std::vector<EmbeddingMatrix> mats(n);
    parallel_for(n, cfg_.effective_workers(), [&](std::size_t i) {
        mats[i] = embed_document(*embedder, corpus.documents[i], extract_mentions(corpus.documents[i]));
    });
    fs::create_directories(out_path_);
    for (std::size_t i = 0; i < n; ++i) write_matrix(fs::path(out_path_) / (corpus.documents[i].doc_id + ".bin"), mats[i]);
    out_ << "embed: " << n << " documents, dim " << embedder->dim() << "\n";
    return 0;
}

int Cli::cmd_train() {
    const SyntheticCorpus corpus = load_corpus(cfg_);
    TrainConfig tc;
    tc.epochs = cfg_.epochs;
    tc.learning_rate = cfg_.learning_rate;
    tc.tables_per_step = cfg_.tables_per_step;
    tc.seed = cfg_.train_seed();
    tc.loss = cfg_.loss;
    tc.kind = cfg_.loss_kind;
    const auto result = train_embedder(corpus.documents, corpus.gold, tc,
                                       ProjectionMatrix::random(cfg_.dim, cfg_.features.feature_dim, cfg_.init_seed()),
                                       cfg_.features);
    write_matrix(fs::path(out_path_), result.weights.to_matrix());
    std::ostringstream log;
    for (const auto& r : result.log) log << to_json(r).dump() << '\n';
    write_text_file(log_path_.empty() ? out_path_ + ".log.jsonl" : log_path_, log.str());
    for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e)
        out_ << "train-embedder: epoch " << e << " mean loss " << result.epoch_mean_loss[e] << "\n";
    return 0;
}

int Cli::cmd_filter() {
    const auto files = embedding_files(embeddings_dir_);
    const FilterParams p = filter_params(cfg_);
    std::vector<CandidatePairSet> sets(files.size());
    parallel_for(files.size(), cfg_.effective_workers(),
                 [&](std::size_t i) { sets[i] = filter_document(read_matrix(files[i]), p); });
    std::ostringstream ss;
    std::size_t total = 0;
    for (std::size_t i = 0; i < files.size(); ++i) {
        write_candidates(ss, files[i].stem().string(), sets[i]);
        total += sets[i].size();
    }
    write_text_file(out_path_, ss.str());
    out_ << "filter: " << total << " candidate pairs at t=" << p.threshold << "\n";
    return 0;
}

int Cli::cmd_sweep() {
    const SyntheticCorpus corpus = load_corpus(cfg_);
    std::vector<ScoredDocument> scored(corpus.documents.size());
    parallel_for(scored.size(), cfg_.effective_workers(), [&](std::size_t i) {
        const auto& d = corpus.documents[i];
        const fs::path p = fs::path(embeddings_dir_) / (d.doc_id + ".bin");
        if (!fs::exists(p)) throw UsageError("missing embeddings for " + d.doc_id);
        scored[i] = score_document(d.doc_id, read_matrix(p), corpus.gold[i]);
    });
    const auto pts = sweep_thresholds(scored, parse_threshold_range(cfg_.sweep));
    std::ostringstream ss;
    write_sweep_csv(ss, pts);
    if (out_path_.empty())
        out_ << ss.str();
    else
        write_text_file(out_path_, ss.str());
    return 0;
}

int Cli::cmd_cnap() {
    const SyntheticCorpus corpus = load_corpus(cfg_);
    const std::size_t n = corpus.documents.size();
    std::vector<std::string> parts(n);
    std::vector<double> weights(n);
    parallel_for(n, cfg_.effective_workers(), [&](std::size_t i) {
        const Document& d = corpus.documents[i];
        const RelevanceGraph g = build_graph(d);
        const PretrainingPath p = cfg_.path_order == "reading" ? reading_order_path(g)
                                                                : greedy_max_path(g, mix64(cfg_.path_seed() ^ fnv1a64(d.doc_id)));
        const auto chunks = truncate_path(d, p, cfg_.chunk_size);
        std::ostringstream ss;
        write_chunks(ss, d.doc_id, chunks, p);
        parts[i] = ss.str();
        weights[i] = p.total_weight;
    });
    std::string all;
    for (const auto& p : parts) all += p;
    write_text_file(out_path_, all);
    double total = 0.0;
    for (double w : weights) total += w;
    out_ << "cnap: " << n << " documents, mean path weight " << (n ? total / static_cast<double>(n) : 0.0) << "\n";
    return 0;
}

int Cli::cmd_classify() {
    const SyntheticCorpus corpus = load_corpus(cfg_);
    const auto backend = make_backend(cfg_, corpus);
    std::istringstream in(read_text_file(candidates_path_));
    const auto records = read_candidates(in);
    const std::size_t n = corpus.documents.size();
    std::vector<std::vector<ClassifierVerdict>> parts(n);
    PromptTemplates templates;
    parallel_for(n, cfg_.effective_workers(), [&](std::size_t i) {
        const Document& d = corpus.documents[i];
        const auto mentions = extract_mentions(d);
        const auto prompts = prompts_for(d, mentions, candidates_of(d.doc_id, records), templates);
        parts[i] = classify_pairs(*backend, prompts, cfg_.dispatch);
    });
    std::vector<ClassifierVerdict> verdicts;
    for (auto& p : parts) verdicts.insert(verdicts.end(), p.begin(), p.end());
    std::ostringstream ss;
    write_verdicts(ss, verdicts);
    write_text_file(out_path_, ss.str());
    out_ << "classify: " << verdicts.size() << " verdicts, " << count_abstains(verdicts) << " abstains\n";
    return 0;
}

int Cli::cmd_check() {
    const SyntheticCorpus corpus = load_corpus(cfg_);
    const auto reports = reports_from(corpus, load_verdicts(verdicts_path_));
    std::size_t bad = 0;
    for (const auto& r : reports) {
        write_text_file(fs::path(out_path_) / (r.doc_id + ".json"), to_json(r).dump(2) + "\n");
        bad += r.inconsistencies.size();
    }
    out_ << "check: " << bad << " inconsistencies in " << reports.size() << " documents\n";
    return 0;
}

int Cli::cmd_eval() {
    const SyntheticCorpus corpus = load_corpus(cfg_);
    const auto reports = reports_from(corpus, load_verdicts(verdicts_path_));
    const std::string text = metrics_text(summarize(corpus, reports));
    if (out_path_.empty())
        out_ << text;
    else
        write_text_file(out_path_, text);
    return 0;
}

int Cli::cmd_run_all() {
    if (cfg_.out_dir.empty()) throw UsageError("run-all needs --out or out_dir");
    const SyntheticCorpus corpus = load_corpus(cfg_);
    PipelineConfig pc;
    pc.embedder = make_embedder(cfg_);
    pc.backend = make_backend(cfg_, corpus);
    pc.filter = filter_params(cfg_);
    pc.dispatch = cfg_.dispatch;
    pc.sweep = parse_threshold_range(cfg_.sweep);
    pc.workers = cfg_.effective_workers();
    pc.out_dir = cfg_.out_dir;
    const PipelineResult r = run_pipeline(corpus, pc);
    const auto& inc = r.summary.inconsistencies.micro;
    const auto& pairs = r.summary.pairs.micro;
    out_ << "run-all: pairs P=" << pairs.precision << " R=" << pairs.recall << " F1=" << pairs.f1
         << "; inconsistencies P=" << inc.precision << " R=" << inc.recall << " (" << inc.counts.intersection << "/"
         << inc.counts.gold << ")" << "; abstains " << r.summary.abstains << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Cli cli(out, err);
    return cli.run(args);
}

}  // namespace tabcheck
