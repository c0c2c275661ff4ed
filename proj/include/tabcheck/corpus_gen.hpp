#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tabcheck/document.hpp"

namespace tabcheck {

struct GenConfig {
    int n_docs = 50;
    int tables_per_doc = 10;
    int rows_min = 3;
    int rows_max = 8;
    int cols_min = 2;
    int cols_max = 5;
    int mentions_per_doc_target = 200;
    int group_count = 0;  // 0: derived from isolated_fraction
    int group_size_min = 2;
    int group_size_max = 4;
    double isolated_fraction = 0.8;
    int entity_vocab = 64;
    int period_vocab = 12;
    int metric_vocab = 40;
    double inconsistency_rate = 0.0;
    std::uint64_t rng_seed = 7;

    /// Throws InfeasibleConfig when ranges or rates are invalid.
    void validate() const;

    /// Overrides fields from flat key=value entries; unknown keys throw SchemaError.
    void apply(const std::map<std::string, std::string>& kv);
    std::map<std::string, std::string> to_kv() const;
};

/// Positive-to-negative pair ratio implied by a config (expected value over
/// the group-size distribution).
double expected_pos_neg_ratio(const GenConfig& cfg);

struct PlantedInconsistency {
    std::string doc_id;
    std::size_t group_index = 0;
    MentionId perturbed_mention = 0;
    std::string original_raw;
    std::string perturbed_raw;
    NumericValue original_value;
    NumericValue perturbed_value;
    std::vector<PairKey> pairs;  // (perturbed, partner) for every other group member
};

struct SyntheticCorpus {
    std::vector<Document> documents;
    std::vector<GoldAnnotation> gold;  // aligned with documents
    std::vector<PlantedInconsistency> planted_inconsistencies;
};

/// Deterministic under cfg (including rng_seed). Applies
/// inject_inconsistencies when cfg.inconsistency_rate > 0.
SyntheticCorpus generate_corpus(const GenConfig& cfg);

/// Perturbs one member of round(rate * total groups) sampled groups by a
/// nonzero decimal delta and records each perturbation.
SyntheticCorpus inject_inconsistencies(SyntheticCorpus corpus, double rate, std::uint64_t seed);

/// Re-renders a value in the display style of `style_of` (thousands
/// separators, accounting negatives, percent sign, minimum decimals).
std::string render_like(const NumericValue& value, std::string_view style_of);

// -- on-disk layout: <dir>/docs/<doc_id>.json, <dir>/gold/<doc_id>.json, <dir>/planted.jsonl

void write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);
SyntheticCorpus read_corpus(const std::filesystem::path& dir);

nlohmann::json planted_to_json(const PlantedInconsistency& p);
PlantedInconsistency planted_from_json(const nlohmann::json& j);

/// Positive pairs / negative pairs over a set of documents.
double measured_pos_neg_ratio(const SyntheticCorpus& corpus);

}  // namespace tabcheck
