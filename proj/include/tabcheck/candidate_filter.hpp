#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tabcheck/embedding.hpp"
#include "tabcheck/hnsw.hpp"

namespace tabcheck {

struct FilterParams {
    double threshold = 0.5;
    std::size_t m_neighbors = 16;
    std::size_t ef_construction = 200;
    std::size_t ef_search = 128;
    bool exact_mode = false;
    std::uint64_t seed = 42;

    void validate() const;
};

struct CandidatePair {
    MentionId first = 0;   // first < second
    MentionId second = 0;
    double similarity = 0.0;

    PairKey key() const { return {first, second}; }
};

/// Sorted by (first, second), no duplicates, no self-pairs.
struct CandidatePairSet {
    std::vector<CandidatePair> pairs;

    std::size_t size() const { return pairs.size(); }
    bool contains(MentionId a, MentionId b) const;
    std::set<PairKey> keys() const;
};

class SimilarityIndex {
public:
    const EmbeddingMatrix& embeddings() const { return embeddings_; }
    bool exact() const { return !hnsw_; }
    const HnswIndex* graph() const { return hnsw_.get(); }

private:
    friend SimilarityIndex build_index(const EmbeddingMatrix& e, const FilterParams& p);
    EmbeddingMatrix embeddings_;
    std::shared_ptr<const HnswIndex> hnsw_;
};

/// Throws DimMismatch if the matrix has no dimension or rows of another size.
SimilarityIndex build_index(const EmbeddingMatrix& e, const FilterParams& p);

/// All pairs with cosine > p.threshold. Per-node queries are spread over
/// `workers` threads; the result does not depend on the worker count.
CandidatePairSet query_pairs(const SimilarityIndex& index, const FilterParams& p, unsigned workers = 1);

/// Brute-force double loop.
CandidatePairSet exact_pairs(const EmbeddingMatrix& e, double threshold);

/// Gold pairs and all pairwise similarities of one document.
struct ScoredDocument {
    std::string doc_id;
    std::size_t n_mentions = 0;
    std::vector<double> pair_sims;  // every unordered pair
    std::vector<double> gold_sims;  // gold pairs only
};

ScoredDocument score_document(const std::string& doc_id, const EmbeddingMatrix& e, const GoldAnnotation& gold);

struct SweepPoint {
    double threshold = 0.0;
    double recall = 0.0;
    double pairs_per_doc = 0.0;
    std::size_t candidate_pairs = 0;
    std::size_t gold_found = 0;
    std::size_t gold_total = 0;
    std::size_t all_pairs = 0;  // sum of C(n, 2)
};

/// Exact-similarity sweep, recall micro-averaged over documents.
std::vector<SweepPoint> sweep_thresholds(std::span<const ScoredDocument> docs, std::span<const double> thresholds);

/// 0.1, 0.2, ..., 0.9.
std::vector<double> default_thresholds();

/// Parses "lo:hi:step" (inclusive of hi up to rounding).
std::vector<double> parse_threshold_range(const std::string& spec);

/// Largest single threshold whose recall reaches `target`, with the candidate
/// count it admits.
SweepPoint pairs_at_recall(std::span<const ScoredDocument> docs, double target);

void write_candidates(std::ostream& out, const std::string& doc_id, const CandidatePairSet& pairs);
std::vector<std::pair<std::string, CandidatePair>> read_candidates(std::istream& in);

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points);

}  // namespace tabcheck
