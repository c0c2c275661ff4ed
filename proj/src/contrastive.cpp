#include "tabcheck/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "tabcheck/rng.hpp"

namespace tabcheck {

void LossParams::validate() const {
    if (!(tau > 0.0)) throw Error("tau must be > 0");
    if (!(epsilon > 0.0)) throw Error("epsilon must be > 0");
    if (alpha1 < 0.0 || alpha2 < 0.0) throw Error("loss weights must be >= 0");
}

std::vector<std::size_t> Batch::nonisolated() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < positives.size(); ++i)
        if (!positives[i].empty()) out.push_back(i);
    return out;
}

std::vector<std::size_t> Batch::isolated() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < positives.size(); ++i)
        if (positives[i].empty()) out.push_back(i);
    return out;
}

Batch Batch::from_labels(std::size_t dim, std::vector<double> rows, std::span<const std::int64_t> labels) {
    Batch b;
    b.dim = dim;
    b.rows = std::move(rows);
    if (b.rows.size() != dim * labels.size()) throw DimMismatch("batch rows do not match labels");
    b.positives.resize(labels.size());
    std::unordered_map<std::int64_t, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= 0) by_label[labels[i]].push_back(i);
    for (const auto& [_, members] : by_label)
        for (std::size_t i : members)
            for (std::size_t j : members)
                if (i != j) b.positives[i].push_back(j);
    for (auto& p : b.positives) std::sort(p.begin(), p.end());
    return b;
}

void Batch::validate() const {
    if (rows.size() != dim * positives.size()) throw DimMismatch("batch rows do not match positives");
    for (std::size_t i = 0; i < positives.size(); ++i)
        for (std::size_t j : positives[i]) {
            if (j >= positives.size()) throw Error("positive index out of range");
            if (j == i) throw Error("P(i) must exclude i");
            const auto& back = positives[j];
            if (std::find(back.begin(), back.end(), i) == back.end()) throw Error("positive sets must be symmetric");
        }
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

namespace {

// Unit rows, norms and the cosine matrix of a batch.
struct Geometry {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<double> unit;
    std::vector<double> norm;
    std::vector<double> sim;

    double s(std::size_t i, std::size_t k) const { return sim[i * n + k]; }
};

Geometry geometry(const Batch& b) {
    Geometry g;
    g.n = b.size();
    g.dim = b.dim;
    g.unit.resize(g.n * g.dim);
    g.norm.resize(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const auto r = b.row(i);
        double s = 0.0;
        for (double x : r) s += x * x;
        g.norm[i] = std::sqrt(s);
        if (!(g.norm[i] > 0.0)) throw Error("zero embedding row in batch");
        for (std::size_t j = 0; j < g.dim; ++j) g.unit[i * g.dim + j] = r[j] / g.norm[i];
    }
    g.sim.assign(g.n * g.n, 0.0);
    for (std::size_t i = 0; i < g.n; ++i) {
        g.sim[i * g.n + i] = 1.0;
        for (std::size_t k = i + 1; k < g.n; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < g.dim; ++j) s += g.unit[i * g.dim + j] * g.unit[k * g.dim + j];
            g.sim[i * g.n + k] = g.sim[k * g.n + i] = s;
        }
    }
    return g;
}

// log sum exp over a list of logits; -inf for an empty list.
template <typename F>
double log_sum_exp(std::size_t count, F&& logit) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) m = std::max(m, logit(i));
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) s += std::exp(logit(i) - m);
    return m + std::log(s);
}

// Accumulates dL/ds into dL/drows through the cosine. The diagonal is
// constant and carries no gradient.
std::vector<double> backprop(const Geometry& g, const std::vector<double>& ds) {
    std::vector<double> grad(g.n * g.dim, 0.0);
    for (std::size_t a = 0; a < g.n; ++a) {
        for (std::size_t k = 0; k < g.n; ++k) {
            if (k == a) continue;
            const double w = ds[a * g.n + k] + ds[k * g.n + a];
            if (w == 0.0) continue;
            const double s = g.s(a, k);
            const double scale = w / g.norm[a];
            for (std::size_t j = 0; j < g.dim; ++j)
                grad[a * g.dim + j] += scale * (g.unit[k * g.dim + j] - s * g.unit[a * g.dim + j]);
        }
    }
    return grad;
}

// L_n and, when ds is non-null, its contribution scaled by `weight` to dL/ds.
double nonisolated_term(const Batch& b, const Geometry& g, const LossParams& p, std::vector<double>* ds,
                        double weight) {
    const auto nn = b.nonisolated();
    if (nn.size() < 2) throw EmptyNonIsolated();
    const double inv_tau = 1.0 / p.tau;
    const double inv_count = 1.0 / static_cast<double>(nn.size());
    double total = 0.0;
    for (std::size_t i : nn) {
        const auto& pos = b.positives[i];
        const double num = log_sum_exp(pos.size(), [&](std::size_t j) { return g.s(i, pos[j]) * inv_tau; });
        const double den = log_sum_exp(nn.size(), [&](std::size_t k) { return g.s(i, nn[k]) * inv_tau; });
        total += den - num;
        if (ds) {
            const double c = weight * inv_count * inv_tau;
            for (std::size_t j : pos) (*ds)[i * g.n + j] -= c * std::exp(g.s(i, j) * inv_tau - num);
            for (std::size_t k : nn) (*ds)[i * g.n + k] += c * std::exp(g.s(i, k) * inv_tau - den);
        }
    }
    return total * inv_count;
}

double isolated_term(const Batch& b, const Geometry& g, const LossParams& p, std::vector<double>* ds, double weight) {
    const auto iso = b.isolated();
    if (iso.size() < 2) return 0.0;
    const double inv_tau = 1.0 / p.tau;
    const double log_eps = std::log(p.epsilon);
    // logits: log(eps) followed by every ordered pair (t, q), t != q
    const std::size_t m = iso.size();
    const std::size_t count = 1 + m * (m - 1);
    auto logit = [&](std::size_t idx) {
        if (idx == 0) return log_eps;
        --idx;
        const std::size_t t = idx / (m - 1);
        std::size_t q = idx % (m - 1);
        if (q >= t) ++q;
        return g.s(iso[t], iso[q]) * inv_tau;
    };
    const double lse = log_sum_exp(count, logit);
    if (ds) {
        for (std::size_t t = 0; t < m; ++t)
            for (std::size_t q = 0; q < m; ++q)
                if (t != q)
                    (*ds)[iso[t] * g.n + iso[q]] += weight * inv_tau * std::exp(g.s(iso[t], iso[q]) * inv_tau - lse);
    }
    return lse - log_eps;
}

double standard_term(const Batch& b, const Geometry& g, const LossParams& p, std::vector<double>* ds) {
    const std::size_t n = b.size();
    if (n == 0) throw Error("standard InfoNCE needs a nonempty batch");
    const double inv_tau = 1.0 / p.tau;
    const double inv_count = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> pos = b.positives[i];
        pos.push_back(i);
        const double num = log_sum_exp(pos.size(), [&](std::size_t j) { return g.s(i, pos[j]) * inv_tau; });
        const double den = log_sum_exp(n, [&](std::size_t k) { return g.s(i, k) * inv_tau; });
        total += den - num;
        if (ds) {
            const double c = inv_count * inv_tau;
            for (std::size_t j : pos) (*ds)[i * n + j] -= c * std::exp(g.s(i, j) * inv_tau - num);
            for (std::size_t k = 0; k < n; ++k) (*ds)[i * n + k] += c * std::exp(g.s(i, k) * inv_tau - den);
        }
    }
    return total * inv_count;
}

}  // namespace

double loss_nonisolated(const Batch& b, const LossParams& p) {
    p.validate();
    return nonisolated_term(b, geometry(b), p, nullptr, 0.0);
}

double loss_isolated(const Batch& b, const LossParams& p) {
    p.validate();
    if (b.isolated().size() < 2) return 0.0;
    return isolated_term(b, geometry(b), p, nullptr, 0.0);
}

double combined_loss(const Batch& b, const LossParams& p) {
    p.validate();
    const Geometry g = geometry(b);
    const double ln = p.alpha1 == 0.0 ? 0.0 : nonisolated_term(b, g, p, nullptr, 0.0);
    return p.alpha1 * ln + p.alpha2 * isolated_term(b, g, p, nullptr, 0.0);
}

double standard_infonce(const Batch& b, const LossParams& p) {
    p.validate();
    return standard_term(b, geometry(b), p, nullptr);
}

LossGradient combined_loss_gradient(const Batch& b, const LossParams& p) {
    p.validate();
    const Geometry g = geometry(b);
    std::vector<double> ds(g.n * g.n, 0.0);
    LossGradient out;
    if (p.alpha1 != 0.0 && b.nonisolated().size() >= 2) out.loss_n = nonisolated_term(b, g, p, &ds, p.alpha1);
    out.loss_i = isolated_term(b, g, p, &ds, p.alpha2);
    out.loss = p.alpha1 * out.loss_n + p.alpha2 * out.loss_i;
    out.grad = backprop(g, ds);
    return out;
}

LossGradient standard_infonce_gradient(const Batch& b, const LossParams& p) {
    p.validate();
    const Geometry g = geometry(b);
    std::vector<double> ds(g.n * g.n, 0.0);
    LossGradient out;
    out.loss = standard_term(b, g, p, &ds);
    out.grad = backprop(g, ds);
    return out;
}

LossKind loss_kind_from_string(std::string_view s) {
    if (s == "decoupled") return LossKind::decoupled;
    if (s == "standard") return LossKind::standard;
    if (s == "decoupled-no-li") return LossKind::decoupled_without_isolated;
    throw Error("unknown loss kind '" + std::string(s) + "'");
}

std::string_view to_string(LossKind k) {
    switch (k) {
        case LossKind::decoupled: return "decoupled";
        case LossKind::standard: return "standard";
        case LossKind::decoupled_without_isolated: return "decoupled-no-li";
    }
    return "decoupled";
}

nlohmann::json to_json(const TrainLogRecord& r) {
    return {{"epoch", r.epoch}, {"step", r.step}, {"loss_n", r.loss_n}, {"loss_i", r.loss_i}, {"loss", r.loss}};
}

TrainResult train_embedder(std::span<const Document> docs, std::span<const GoldAnnotation> gold,
                           const TrainConfig& cfg, ProjectionMatrix init, const FeatureConfig& features) {
    cfg.loss.validate();
    if (docs.size() != gold.size()) throw DocMismatch("documents and gold annotations differ in count");
    if (init.in_dim != features.feature_dim) throw DimMismatch("initial projection does not match feature dim");
    if (cfg.tables_per_step < 1) throw Error("tables_per_step must be >= 1");

    // Per table: features and document-scoped group labels of its mentions.
    struct TableItem {
        std::size_t doc = 0;
        std::vector<SparseFeatures> features;
        std::vector<std::int64_t> labels;
    };
    std::vector<std::vector<TableItem>> by_doc(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        if (docs[d].doc_id != gold[d].doc_id) throw DocMismatch(docs[d].doc_id + " vs " + gold[d].doc_id);
        std::unordered_map<MentionId, std::int64_t> label_of;
        for (std::size_t g = 0; g < gold[d].equivalence_groups.size(); ++g)
            for (MentionId id : gold[d].equivalence_groups[g]) label_of[id] = static_cast<std::int64_t>(g);
        const auto mentions = extract_mentions(docs[d]);
        by_doc[d].resize(docs[d].tables.size());
        for (auto& item : by_doc[d]) item.doc = d;
        for (const auto& m : mentions) {
            auto& item = by_doc[d][m.table_index];
            item.features.push_back(mention_features(docs[d].tables[m.table_index], m, features));
            auto it = label_of.find(m.mention_id);
            item.labels.push_back(it == label_of.end() ? -1 : it->second);
        }
    }

    TrainResult result;
    result.weights = std::move(init);
    ProjectionMatrix& w = result.weights;
    Rng rng(cfg.seed);
    LossParams lp = cfg.loss;
    if (cfg.kind == LossKind::decoupled_without_isolated) lp.alpha2 = 0.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(docs.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(std::span(order));
        std::vector<const TableItem*> stream;
        for (std::size_t d : order)
            for (const auto& item : by_doc[d])
                if (!item.features.empty()) stream.push_back(&item);

        double epoch_total = 0.0;
        int steps = 0;
        for (std::size_t start = 0; start < stream.size(); start += static_cast<std::size_t>(cfg.tables_per_step)) {
            const std::size_t stop = std::min(stream.size(), start + static_cast<std::size_t>(cfg.tables_per_step));
            std::vector<const SparseFeatures*> feats;
            std::vector<std::int64_t> labels;
            for (std::size_t t = start; t < stop; ++t) {
                const auto* item = stream[t];
                for (std::size_t k = 0; k < item->features.size(); ++k) {
                    feats.push_back(&item->features[k]);
                    // labels are made batch-unique by folding in the document index
                    labels.push_back(item->labels[k] < 0 ? -1
                                                         : static_cast<std::int64_t>(item->doc) * 1'000'000 + item->labels[k]);
                }
            }
            if (feats.size() < 2) continue;
            std::vector<double> rows;
            rows.reserve(feats.size() * w.out_dim);
            for (const auto* f : feats) {
                const auto z = project(*f, w);
                rows.insert(rows.end(), z.begin(), z.end());
            }
            const Batch batch = Batch::from_labels(w.out_dim, std::move(rows), labels);
            const LossGradient lg = cfg.kind == LossKind::standard ? standard_infonce_gradient(batch, lp)
                                                                    : combined_loss_gradient(batch, lp);
            for (std::size_t k = 0; k < feats.size(); ++k) {
                const double* g = lg.grad.data() + k * w.out_dim;
                for (const auto& [i, x] : feats[k]->entries)
                    for (std::size_t r = 0; r < w.out_dim; ++r)
                        w.at(r, i) -= static_cast<float>(cfg.learning_rate * g[r] * x);
            }
            result.log.push_back(TrainLogRecord{epoch, steps, lg.loss_n, lg.loss_i, lg.loss});
            epoch_total += lg.loss;
            ++steps;
        }
        result.epoch_mean_loss.push_back(steps > 0 ? epoch_total / steps : 0.0);
    }
    return result;
}

}  // namespace tabcheck
