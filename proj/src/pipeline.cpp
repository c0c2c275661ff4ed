#include "tabcheck/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

namespace fs = std::filesystem;

namespace tabcheck {

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::jthread> threads;
        for (unsigned w = 0; w < std::min<std::size_t>(workers, n); ++w) threads.emplace_back(work);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void write_mentions(std::ostream& out, std::span<const DocumentMentions> docs) {
    for (const auto& d : docs)
        for (const auto& m : d.mentions) {
            nlohmann::json j{{"doc_id", d.doc_id}, {"mention_id", m.mention_id}, {"table_id", m.table_id},
                             {"table_index", m.table_index}, {"row", m.row}, {"col", m.col},
                             {"raw_text", m.raw_text}, {"value", m.value.to_string()}};
            out << j.dump() << '\n';
        }
}

std::vector<DocumentMentions> read_mentions(std::istream& in) {
    std::vector<DocumentMentions> out;
    std::unordered_map<std::string, std::size_t> slot;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            const auto doc_id = j.at("doc_id").get<std::string>();
            auto [it, fresh] = slot.emplace(doc_id, out.size());
            if (fresh) out.push_back({doc_id, {}});
            NumericalMention m;
            m.mention_id = j.at("mention_id").get<MentionId>();
            m.table_id = j.at("table_id").get<std::string>();
            m.table_index = j.at("table_index").get<std::size_t>();
            m.row = j.at("row").get<std::size_t>();
            m.col = j.at("col").get<std::size_t>();
            m.raw_text = j.at("raw_text").get<std::string>();
            m.value = NumericValue::from_canonical(j.at("value").get<std::string>());
            out[it->second].mentions.push_back(std::move(m));
        } catch (const nlohmann::json::exception& ex) {
            throw SchemaError(std::string("mention record: ") + ex.what());
        }
    }
    return out;
}

std::vector<ClassificationPrompt> prompts_for(const Document& d, std::span<const NumericalMention> mentions,
                                              const CandidatePairSet& candidates, const PromptTemplates& templates) {
    std::unordered_map<MentionId, const NumericalMention*> by_id;
    for (const auto& m : mentions) by_id[m.mention_id] = &m;
    std::vector<ClassificationPrompt> out;
    out.reserve(candidates.size());
    for (const auto& c : candidates.pairs) {
        auto a = by_id.find(c.first);
        auto b = by_id.find(c.second);
        if (a == by_id.end() || b == by_id.end())
            throw UnknownMention("candidate (" + std::to_string(c.first) + ", " + std::to_string(c.second) + ") in " + d.doc_id);
        out.push_back(build_prompt(d, *a->second, *b->second, templates));
    }
    return out;
}

CandidatePairSet candidates_of(const std::string& doc_id,
                               std::span<const std::pair<std::string, CandidatePair>> records) {
    CandidatePairSet s;
    for (const auto& [id, p] : records)
        if (id == doc_id) s.pairs.push_back(p);
    std::sort(s.pairs.begin(), s.pairs.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
    return s;
}

std::vector<PredictedPairs> planted_pairs(std::span<const Document> docs, std::span<const PlantedInconsistency> planted) {
    std::vector<PredictedPairs> out;
    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& d : docs) {
        slot[d.doc_id] = out.size();
        out.push_back({d.doc_id, {}});
    }
    for (const auto& p : planted) {
        auto it = slot.find(p.doc_id);
        if (it == slot.end()) throw DocMismatch("planted inconsistency for unknown document " + p.doc_id);
        for (const auto& k : p.pairs) out[it->second].pairs.insert(PairKey::of(k.first, k.second));
    }
    return out;
}

EvaluationSummary summarize(const SyntheticCorpus& corpus, std::span<const MatchReport> reports) {
    EvaluationSummary s;
    std::vector<PredictedPairs> predicted;
    std::vector<PredictedPairs> detected;
    for (const auto& r : reports) {
        predicted.push_back({r.doc_id, r.predicted()});
        PredictedPairs bad{r.doc_id, {}};
        for (const auto& m : r.inconsistencies) bad.pairs.insert({m.mention_i, m.mention_j});
        detected.push_back(std::move(bad));
        s.abstains += r.abstains;
    }
    s.pairs = evaluate(corpus.gold, predicted);
    s.inconsistencies = evaluate_sets(planted_pairs(corpus.documents, corpus.planted_inconsistencies), detected);
    return s;
}

nlohmann::json to_json(const EvaluationSummary& s) {
    return {{"pairs", to_json(s.pairs)}, {"inconsistencies", to_json(s.inconsistencies)}, {"abstains", s.abstains}};
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed for " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PipelineResult run_pipeline(const SyntheticCorpus& corpus, const PipelineConfig& cfg) {
    if (!cfg.embedder) throw StageError("embed", "no embedder configured");
    if (!cfg.backend) throw StageError("classify", "no classifier backend configured");
    if (corpus.gold.size() != corpus.documents.size())
        throw StageError("extract", "gold annotations are not aligned with documents");

    const std::size_t n = corpus.documents.size();
    PipelineResult r;
    r.mentions.resize(n);
    r.embeddings.resize(n);
    r.candidates.resize(n);
    r.reports.resize(n);
    std::vector<std::vector<ClassifierVerdict>> verdicts(n);

    run_stage("extract", [&] {
        parallel_for(n, cfg.workers, [&](std::size_t i) {
            r.mentions[i] = {corpus.documents[i].doc_id, extract_mentions(corpus.documents[i])};
        });
    });
    run_stage("embed", [&] {
        parallel_for(n, cfg.workers, [&](std::size_t i) {
            r.embeddings[i] = embed_document(*cfg.embedder, corpus.documents[i], r.mentions[i].mentions);
        });
    });
    run_stage("filter", [&] {
        parallel_for(n, cfg.workers, [&](std::size_t i) {
            if (r.embeddings[i].empty()) {
                r.candidates[i] = {};
                return;
            }
            r.candidates[i] = query_pairs(build_index(r.embeddings[i], cfg.filter), cfg.filter);
        });
    });
    run_stage("classify", [&] {
        parallel_for(n, cfg.workers, [&](std::size_t i) {
            const auto prompts = prompts_for(corpus.documents[i], r.mentions[i].mentions, r.candidates[i], cfg.templates);
            verdicts[i] = classify_pairs(*cfg.backend, prompts, cfg.dispatch);
        });
    });
    for (auto& v : verdicts) r.verdicts.insert(r.verdicts.end(), v.begin(), v.end());
    run_stage("check", [&] {
        parallel_for(n, cfg.workers, [&](std::size_t i) {
            r.reports[i] = detect_inconsistencies(corpus.documents[i].doc_id, verdicts[i], r.mentions[i].mentions);
        });
    });
    run_stage("eval", [&] {
        r.summary = summarize(corpus, r.reports);
        std::vector<ScoredDocument> scored(n);
        parallel_for(n, cfg.workers, [&](std::size_t i) {
            scored[i] = score_document(corpus.documents[i].doc_id, r.embeddings[i], corpus.gold[i]);
        });
        r.sweep = sweep_thresholds(scored, cfg.sweep);
    });

    if (cfg.out_dir) {
        run_stage("write", [&] {
            const fs::path& out = *cfg.out_dir;
            fs::create_directories(out / "embeddings");
            std::ostringstream ms, cs, vs, ss;
            write_mentions(ms, r.mentions);
            for (std::size_t i = 0; i < n; ++i) {
                const std::string& id = corpus.documents[i].doc_id;
                write_matrix(out / "embeddings" / (id + ".bin"), r.embeddings[i]);
                write_candidates(cs, id, r.candidates[i]);
                write_text_file(out / "reports" / (id + ".json"), to_json(r.reports[i]).dump(2) + "\n");
            }
            write_verdicts(vs, r.verdicts);
            write_sweep_csv(ss, r.sweep);
            write_text_file(out / "mentions.jsonl", ms.str());
            write_text_file(out / "candidates.jsonl", cs.str());
            write_text_file(out / "verdicts.jsonl", vs.str());
            write_text_file(out / "metrics.json", to_json(r.summary).dump(2) + "\n");
            write_text_file(out / "sweep.csv", ss.str());
        });
    }
    return r;
}

}  // namespace tabcheck
