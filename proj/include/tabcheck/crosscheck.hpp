#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tabcheck/document.hpp"
#include "tabcheck/pair_classifier.hpp"

namespace tabcheck {

struct MatchedPair {
    MentionId mention_i = 0;  // mention_i < mention_j
    MentionId mention_j = 0;
    std::string raw_i;
    std::string raw_j;
    NumericValue value_i;
    NumericValue value_j;
    bool equal = true;
    std::string verdict_digest;
};

struct MatchReport {
    std::string doc_id;
    std::vector<MatchedPair> matches;          // every pair judged equivalent
    std::vector<MatchedPair> inconsistencies;  // matches whose values differ
    std::size_t abstains = 0;

    std::set<PairKey> predicted() const;
};

/// Builds the report of one document from its verdicts (verdicts of other
/// documents are ignored). Pairs are sorted by mention id, i.e. reading order.
/// Throws UnknownMention for a verdict naming an absent mention.
MatchReport detect_inconsistencies(const std::string& doc_id, std::span<const ClassifierVerdict> verdicts,
                                   std::span<const NumericalMention> mentions);

struct PairCounts {
    std::size_t gold = 0;
    std::size_t predicted = 0;
    std::size_t intersection = 0;
};

/// Precision is 1 when nothing is predicted and recall is 1 when there is no
/// gold; both cases are flagged.
struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    PairCounts counts;
    bool zero_gold = false;
    bool zero_predicted = false;

    static Metrics from_counts(const PairCounts& c);
};

struct PredictedPairs {
    std::string doc_id;
    std::set<PairKey> pairs;
};

struct DocMetrics {
    std::string doc_id;
    Metrics metrics;
};

struct MetricsResult {
    std::vector<DocMetrics> per_doc;
    Metrics micro;
};

/// Micro-aggregated over documents. Throws DocMismatch unless gold and
/// predictions name the same documents in the same order.
MetricsResult evaluate(std::span<const GoldAnnotation> gold, std::span<const PredictedPairs> pred);

/// Same aggregation over plain per-document pair sets.
MetricsResult evaluate_sets(std::span<const PredictedPairs> gold, std::span<const PredictedPairs> pred);

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const MetricsResult& r);
nlohmann::json to_json(const MatchReport& r);

}  // namespace tabcheck
