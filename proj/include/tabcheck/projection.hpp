#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tabcheck/embedding.hpp"

namespace tabcheck {

/// Hashed bag-of-token features over four fields of a mention: context
/// headers (chapter title and column header row), row header, column header,
/// and the position statement. Each field owns an equal block of buckets and
/// is L2-normalized within it.
struct FeatureConfig {
    std::size_t feature_dim = 1024;  // divisible by kFieldCount
    static constexpr std::size_t kFieldCount = 4;
    std::size_t block() const { return feature_dim / kFieldCount; }
};

struct SparseFeatures {
    std::vector<std::pair<std::uint32_t, float>> entries;  // sorted by index, unique
};

SparseFeatures mention_features(const Table& table, const NumericalMention& mention,
                                const FeatureConfig& cfg = {});

/// Dense, unit-norm feature vector (the untrained embedding).
std::vector<float> baseline_embed(const Table& table, const NumericalMention& mention,
                                  const FeatureConfig& cfg = {});

/// Row-major out_dim x feature_dim linear map.
struct ProjectionMatrix {
    std::size_t out_dim = 0;
    std::size_t in_dim = 0;
    std::vector<float> w;

    float& at(std::size_t r, std::size_t c) { return w[r * in_dim + c]; }
    float at(std::size_t r, std::size_t c) const { return w[r * in_dim + c]; }

    static ProjectionMatrix identity(std::size_t n);
    /// Gaussian entries with variance 1/out_dim, seeded.
    static ProjectionMatrix random(std::size_t out_dim, std::size_t in_dim, std::uint64_t seed);

    /// Persisted in the embedding-matrix format, one row per output dimension.
    EmbeddingMatrix to_matrix() const;
    static ProjectionMatrix from_matrix(const EmbeddingMatrix& m);
};

/// z = W f (unnormalized).
std::vector<double> project(const SparseFeatures& f, const ProjectionMatrix& w);

/// normalize(W f).
std::vector<float> projection_embed(const SparseFeatures& f, const ProjectionMatrix& w);

/// Untrained embedder: the normalized feature vector itself.
class FeatureEmbedder final : public MentionEmbedder {
public:
    explicit FeatureEmbedder(FeatureConfig cfg = {}) : cfg_(cfg) {}
    std::size_t dim() const override { return cfg_.feature_dim; }
    EmbeddingMatrix embed_table(const Table& table, std::span<const NumericalMention> mentions) const override;

private:
    FeatureConfig cfg_;
};

class ProjectionEmbedder final : public MentionEmbedder {
public:
    ProjectionEmbedder(ProjectionMatrix w, FeatureConfig cfg = {}) : w_(std::move(w)), cfg_(cfg) {
        if (w_.in_dim != cfg_.feature_dim)
            throw DimMismatch("projection input " + std::to_string(w_.in_dim) + " vs feature dim " +
                              std::to_string(cfg_.feature_dim));
    }

    std::size_t dim() const override { return w_.out_dim; }
    EmbeddingMatrix embed_table(const Table& table, std::span<const NumericalMention> mentions) const override;

    const ProjectionMatrix& weights() const { return w_; }

private:
    ProjectionMatrix w_;
    FeatureConfig cfg_;
};

}  // namespace tabcheck
