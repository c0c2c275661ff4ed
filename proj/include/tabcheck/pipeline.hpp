#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabcheck/candidate_filter.hpp"
#include "tabcheck/corpus_gen.hpp"
#include "tabcheck/crosscheck.hpp"
#include "tabcheck/embedding.hpp"
#include "tabcheck/pair_classifier.hpp"

namespace tabcheck {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. If any call throws,
/// the exception of the lowest failing index is rethrown after all finish.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

/// Runs fn, rethrowing any failure as StageError tagged with `stage`.
template <typename F>
auto run_stage(const std::string& stage, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

// -- stage artifacts ------------------------------------------------------------

struct DocumentMentions {
    std::string doc_id;
    std::vector<NumericalMention> mentions;
};

void write_mentions(std::ostream& out, std::span<const DocumentMentions> docs);
/// Groups records by doc_id in first-seen order.
std::vector<DocumentMentions> read_mentions(std::istream& in);

/// Prompts for every candidate pair of a document, in candidate order.
std::vector<ClassificationPrompt> prompts_for(const Document& d, std::span<const NumericalMention> mentions,
                                              const CandidatePairSet& candidates, const PromptTemplates& templates);

/// Candidate pairs of one document out of a mixed record list.
CandidatePairSet candidates_of(const std::string& doc_id,
                               std::span<const std::pair<std::string, CandidatePair>> records);

/// Planted inconsistency pairs grouped per document, aligned with `docs`.
std::vector<PredictedPairs> planted_pairs(std::span<const Document> docs,
                                          std::span<const PlantedInconsistency> planted);

struct EvaluationSummary {
    MetricsResult pairs;            // equivalent verdicts vs gold pairs
    MetricsResult inconsistencies;  // detected vs planted
    std::size_t abstains = 0;
};

EvaluationSummary summarize(const SyntheticCorpus& corpus, std::span<const MatchReport> reports);
nlohmann::json to_json(const EvaluationSummary& s);

// -- whole pipeline -------------------------------------------------------------

struct PipelineConfig {
    std::shared_ptr<const MentionEmbedder> embedder;
    std::shared_ptr<const ClassifierBackend> backend;
    FilterParams filter;
    PromptTemplates templates;
    DispatchOptions dispatch;
    std::vector<double> sweep = default_thresholds();
    unsigned workers = 1;
    std::optional<std::filesystem::path> out_dir;  // artifacts are written here when set
};

struct PipelineResult {
    std::vector<DocumentMentions> mentions;
    std::vector<EmbeddingMatrix> embeddings;
    std::vector<CandidatePairSet> candidates;
    std::vector<ClassifierVerdict> verdicts;
    std::vector<MatchReport> reports;
    EvaluationSummary summary;
    std::vector<SweepPoint> sweep;
};

/// extract -> embed -> filter -> classify -> check -> evaluate. Failures are
/// rethrown as StageError. Artifacts under out_dir:
///   mentions.jsonl, embeddings/<doc>.bin, candidates.jsonl, verdicts.jsonl,
///   reports/<doc>.json, metrics.json, sweep.csv
PipelineResult run_pipeline(const SyntheticCorpus& corpus, const PipelineConfig& cfg);

/// Deterministic text file writer used for every artifact.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace tabcheck
