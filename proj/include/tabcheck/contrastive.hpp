#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tabcheck/corpus_gen.hpp"
#include "tabcheck/projection.hpp"

namespace tabcheck {

struct LossParams {
    double tau = 0.15;
    double alpha1 = 0.75;
    double alpha2 = 0.25;
    double epsilon = 1e-4;

    void validate() const;
};

/// A batch of raw embedding rows with in-batch positive sets. Similarities
/// are cosines of the rows, so rows need not be normalized.
struct Batch {
    std::size_t dim = 0;
    std::vector<double> rows;                        // n x dim, row-major
    std::vector<std::vector<std::size_t>> positives; // P(i), self excluded

    std::size_t size() const { return positives.size(); }
    std::span<const double> row(std::size_t i) const { return {rows.data() + i * dim, dim}; }

    /// Mentions with at least one in-batch positive.
    std::vector<std::size_t> nonisolated() const;
    std::vector<std::size_t> isolated() const;

    /// Builds P from per-row labels: rows with equal label >= 0 are positives;
    /// label < 0 marks a row with no partner.
    static Batch from_labels(std::size_t dim, std::vector<double> rows, std::span<const std::int64_t> labels);

    /// Throws Error unless P is symmetric, self-free and in range.
    void validate() const;
};

double cosine(std::span<const double> a, std::span<const double> b);

/// Mean over non-isolated i of -log(sum_{P(i)} exp(s/tau) / sum_{k in N_n} exp(s/tau)).
/// Throws EmptyNonIsolated when fewer than two mentions have positives.
double loss_nonisolated(const Batch& b, const LossParams& p);

/// -log(eps / (eps + sum over ordered isolated pairs t != q of exp(s/tau))).
double loss_isolated(const Batch& b, const LossParams& p);

/// alpha1 * L_n + alpha2 * L_i.
double combined_loss(const Batch& b, const LossParams& p);

/// Self-positive InfoNCE over the whole batch.
double standard_infonce(const Batch& b, const LossParams& p);

struct LossGradient {
    double loss = 0.0;
    double loss_n = 0.0;
    double loss_i = 0.0;
    std::vector<double> grad;  // n x dim, d loss / d rows
};

/// Analytic value and gradient of alpha1 * L_n + alpha2 * L_i. The L_n term
/// is skipped (zero) when the batch has no positives.
LossGradient combined_loss_gradient(const Batch& b, const LossParams& p);

/// Analytic value and gradient of the standard InfoNCE objective.
LossGradient standard_infonce_gradient(const Batch& b, const LossParams& p);

enum class LossKind { decoupled, standard, decoupled_without_isolated };

LossKind loss_kind_from_string(std::string_view s);
std::string_view to_string(LossKind k);

struct TrainConfig {
    int epochs = 3;
    double learning_rate = 2.0;
    int tables_per_step = 12;
    std::uint64_t seed = 11;
    LossParams loss{};
    LossKind kind = LossKind::decoupled;
};

struct TrainLogRecord {
    int epoch = 0;
    int step = 0;
    double loss_n = 0.0;
    double loss_i = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    ProjectionMatrix weights;
    std::vector<TrainLogRecord> log;
    std::vector<double> epoch_mean_loss;
};

/// Plain SGD on the projection matrix with the analytic loss gradient.
/// Batches are consecutive runs of tables_per_step tables taken from the
/// documents in a seeded per-epoch order; positives are gold partners that
/// fall in the same batch.
TrainResult train_embedder(std::span<const Document> docs, std::span<const GoldAnnotation> gold,
                           const TrainConfig& cfg, ProjectionMatrix init, const FeatureConfig& features = {});

nlohmann::json to_json(const TrainLogRecord& r);

}  // namespace tabcheck
