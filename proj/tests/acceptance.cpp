// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tabcheck/candidate_filter.hpp"
#include "tabcheck/cipe.hpp"
#include "tabcheck/cnap.hpp"
#include "tabcheck/contrastive.hpp"
#include "tabcheck/corpus_gen.hpp"
#include "tabcheck/crosscheck.hpp"
#include "tabcheck/pair_classifier.hpp"
#include "tabcheck/pipeline.hpp"
#include "tabcheck/projection.hpp"

using namespace tabcheck;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "failed: ";
            else detail << "; ";
            detail << what;
            pass = false;
        }
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void run(int id, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.require(false, std::string("exception: ") + e.what());
    }
    const double s = seconds_since(t0);
    if (!o.pass) ++failures;
    std::printf("%s criterion %d: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, o.detail.str().c_str(), s);
    std::fflush(stdout);
}

std::string words(const std::string& stem, int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += (i ? " " : "") + stem + std::to_string(i);
    return s;
}

bool same_row(const EmbeddingMatrix& a, MentionId ida, const EmbeddingMatrix& b, MentionId idb) {
    auto x = a.row(a.find(ida));
    auto y = b.row(b.find(idb));
    return std::equal(x.begin(), x.end(), y.begin(), y.end());
}

std::vector<MentionText> random_mentions(std::mt19937_64& rng) {
    std::vector<MentionText> ms;
    const int n = 2 + static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) ms.push_back({i, words("v" + std::to_string(rng() % 50) + "_", 1 + static_cast<int>(rng() % 4))});
    return ms;
}

// -- 1 ------------------------------------------------------------------------------

void mask_isolation(Outcome& o) {
    std::mt19937_64 rng(101);
    const auto w = ReferenceWeights::make(16, 9);
    std::size_t perturbations = 0, permutations = 0;
    for (int layout = 0; layout < 120; ++layout) {
        const std::string ctx = words("c", 1 + static_cast<int>(rng() % 40));
        const auto ms = random_mentions(rng);
        const auto base = reference_encode(build_layout(ctx, kDefaultEmbeddingPrompt, ms), w);
        for (std::size_t k = 0; k < ms.size(); ++k) {
            auto changed = ms;
            changed[k].text = words("x" + std::to_string(rng() % 9) + "_", 1 + static_cast<int>(rng() % 5));
            const auto p = reference_encode(build_layout(ctx, kDefaultEmbeddingPrompt, changed), w);
            for (std::size_t j = 0; j < ms.size(); ++j)
                if (j != k && !same_row(base, ms[j].mention_id, p, ms[j].mention_id)) {
                    o.require(false, "perturbing mention " + std::to_string(k) + " moved mention " + std::to_string(j));
                    return;
                }
            ++perturbations;
        }
        auto shuffled = ms;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto s = reference_encode(build_layout(ctx, kDefaultEmbeddingPrompt, shuffled), w);
        for (const auto& m : ms)
            if (!same_row(base, m.mention_id, s, m.mention_id)) {
                o.require(false, "permutation changed mention " + std::to_string(m.mention_id));
                return;
            }
        ++permutations;
    }
    o.detail << perturbations << " perturbations and " << permutations << " permutations over 120 layouts, bitwise equal";
}

// -- 2 ------------------------------------------------------------------------------

void position_law(Outcome& o) {
    std::mt19937_64 rng(202);
    const auto& tok = default_tokenizer();
    std::size_t checked = 0;
    for (int layout = 0; layout < 500; ++layout) {
        const std::string ctx = words("c", 1 + static_cast<int>(rng() % 60));
        const std::string prompt = rng() % 2 ? std::string(kDefaultEmbeddingPrompt) : words("p", 1 + static_cast<int>(rng() % 10));
        const auto ms = random_mentions(rng);
        const auto l = build_layout(ctx, prompt, ms);
        const std::size_t base = tok.count(ctx) + tok.count(prompt);
        o.require(l.base_len() == base, "base length differs from token count of context and prompt");
        for (std::size_t s = 0; s < l.segments.size(); ++s) {
            const auto& seg = l.segments[s];
            const std::size_t len = seg.end - seg.begin;
            o.require(len == tok.count(ms[s].text), "segment length differs from mention token count");
            for (std::size_t m = 1; m <= len; ++m) {
                o.require(l.positions[seg.begin + m - 1] == static_cast<std::int64_t>(base + m - 1),
                          "position law violated");
                ++checked;
            }
        }
        if (!o.pass) return;
    }
    o.detail << checked << " mention tokens over 500 layouts satisfy position = base_len + m - 1";
}

// -- 3, 4 ---------------------------------------------------------------------------

double cos_rows(const Batch& b, std::size_t i, std::size_t j) {
    double d = 0, ni = 0, nj = 0;
    for (std::size_t k = 0; k < b.dim; ++k) {
        d += b.rows[i * b.dim + k] * b.rows[j * b.dim + k];
        ni += b.rows[i * b.dim + k] * b.rows[i * b.dim + k];
        nj += b.rows[j * b.dim + k] * b.rows[j * b.dim + k];
    }
    return d / std::sqrt(ni * nj);
}

double naive_nonisolated(const Batch& b, double tau) {
    std::vector<std::size_t> nn;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (!b.positives[i].empty()) nn.push_back(i);
    double total = 0;
    for (auto i : nn) {
        double num = 0, den = 0;
        for (auto j : b.positives[i]) num += std::exp(cos_rows(b, i, j) / tau);
        for (auto k : nn) den += std::exp(cos_rows(b, i, k) / tau);
        total -= std::log(num / den);
    }
    return total / static_cast<double>(nn.size());
}

double naive_isolated(const Batch& b, double tau, double eps) {
    std::vector<std::size_t> iso;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b.positives[i].empty()) iso.push_back(i);
    double s = 0;
    for (auto t : iso)
        for (auto q : iso)
            if (t != q) s += std::exp(cos_rows(b, t, q) / tau);
    return -std::log(eps / (eps + s));
}

Batch random_batch(std::mt19937_64& rng, std::size_t n, std::size_t dim, int labels, int forced_isolated = -1) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> rows(n * dim);
    for (auto& x : rows) x = g(rng);
    std::vector<std::int64_t> lab(n);
    for (std::size_t i = 0; i < n; ++i) lab[i] = static_cast<std::int64_t>(rng() % labels) - 1;
    lab[0] = lab[1] = 0;
    if (forced_isolated >= 0) {
        // every row paired except `forced_isolated` of them
        for (std::size_t i = 0; i < n; ++i) lab[i] = static_cast<std::int64_t>(i / 2);
        if (n % 2) lab[n - 1] = lab[n - 2];
        for (int k = 0; k < forced_isolated; ++k) lab[n - 1 - k] = -1;
    }
    return Batch::from_labels(dim, std::move(rows), lab);
}

void loss_oracles(Outcome& o) {
    LossParams unit;
    unit.tau = 1.0;
    const double ln = loss_nonisolated(Batch::from_labels(2, {1, 0, 0, 1}, std::vector<std::int64_t>{0, 0}), unit);
    LossParams unit_eps = unit;
    unit_eps.epsilon = 1.0;
    const double li = loss_isolated(Batch::from_labels(2, {1, 0, 0, 1}, std::vector<std::int64_t>{-1, -1}), unit_eps);
    o.require(std::abs(ln - 1.313262) <= 1e-6, "non-isolated example gave " + std::to_string(ln));
    o.require(std::abs(li - 1.098612) <= 1e-6, "isolated example gave " + std::to_string(li));

    std::mt19937_64 rng(303);
    LossParams p;
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
        const Batch b = random_batch(rng, 4 + rng() % 13, 2 + rng() % 31, 4);
        worst = std::max(worst, std::abs(loss_nonisolated(b, p) - naive_nonisolated(b, p.tau)));
        worst = std::max(worst, std::abs(loss_isolated(b, p) - naive_isolated(b, p.tau, p.epsilon)));
    }
    o.require(worst <= 1e-9, "naive summation disagreement " + std::to_string(worst));

    int zero_cases = 0;
    for (int t = 0; t < 50; ++t) {
        const Batch b = random_batch(rng, 4 + rng() % 10, 3 + rng() % 8, 3, static_cast<int>(rng() % 2));
        if (b.isolated().size() > 1) continue;
        o.require(loss_isolated(b, p) == 0.0, "isolated loss nonzero with at most one isolated mention");
        ++zero_cases;
    }
    o.detail << "examples " << ln << ", " << li << "; naive max |diff| " << worst << " on 50 batches; "
             << zero_cases << " batches with <= 1 isolated give 0";
}

void gradient_check(Outcome& o) {
    std::mt19937_64 rng(404);
    LossParams p;
    const double h = 1e-5;
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
        Batch b = random_batch(rng, 4 + rng() % 13, 2 + rng() % 31, 4);
        const auto g = combined_loss_gradient(b, p);
        double diff = 0, norm = 0;
        for (std::size_t k = 0; k < b.rows.size(); ++k) {
            const double x = b.rows[k];
            b.rows[k] = x + h;
            const double up = combined_loss(b, p);
            b.rows[k] = x - h;
            const double down = combined_loss(b, p);
            b.rows[k] = x;
            const double fd = (up - down) / (2 * h);
            diff += (g.grad[k] - fd) * (g.grad[k] - fd);
            norm += fd * fd;
        }
        worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12));
    }
    o.require(worst <= 1e-4, "relative error " + std::to_string(worst));
    o.detail << "worst relative error " << worst << " over 50 batches (n <= 16, dim <= 32)";
}

// -- 5 ------------------------------------------------------------------------------

void filter_fidelity(Outcome& o) {
    const std::size_t n = 10000, dim = 32;
    const double t = 0.5;
    std::mt19937_64 rng(505);
    std::normal_distribution<float> g(0.0f, 1.0f);
    EmbeddingMatrix e(dim);
    std::vector<float> v(dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& x : v) x = g(rng);
        l2_normalize(v);
        e.add_row(static_cast<MentionId>(i), v);
    }
    std::set<PairKey> oracle;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0;
            const auto a = e.row(i), b = e.row(j);
            for (std::size_t k = 0; k < dim; ++k) s += double(a[k]) * double(b[k]);
            if (s > t) oracle.insert({e.id(i), e.id(j)});
        }
    const auto exact = exact_pairs(e, t).keys();
    o.require(exact == oracle, "exact_pairs differs from the double loop");

    FilterParams fp;
    fp.threshold = t;
    const auto approx = query_pairs(build_index(e, fp), fp, 4).keys();
    std::size_t inter = 0;
    for (const auto& k : approx) inter += oracle.count(k);
    const double jaccard = static_cast<double>(inter) / static_cast<double>(approx.size() + oracle.size() - inter);
    o.require(jaccard >= 0.99, "Jaccard " + std::to_string(jaccard));
    o.detail << "Jaccard " << jaccard << " (" << approx.size() << " approximate vs " << oracle.size()
             << " exact pairs, dim " << dim << "); exact_pairs identical to double loop";
}

// -- 6 ------------------------------------------------------------------------------

std::vector<ScoredDocument> score_corpus(const SyntheticCorpus& c, const MentionEmbedder& emb) {
    std::vector<ScoredDocument> out(c.documents.size());
    parallel_for(c.documents.size(), std::max(1u, std::thread::hardware_concurrency()), [&](std::size_t d) {
        const auto ms = extract_mentions(c.documents[d]);
        out[d] = score_document(c.documents[d].doc_id, embed_document(emb, c.documents[d], ms), c.gold[d]);
    });
    return out;
}

void sweep_analog(Outcome& o) {
    const auto eval = generate_corpus(GenConfig{});
    GenConfig tc;
    tc.rng_seed = 1007;
    const auto train = generate_corpus(tc);
    const auto init = ProjectionMatrix::random(64, FeatureConfig{}.feature_dim, 3);

    SweepPoint at[2];
    const LossKind kinds[2] = {LossKind::decoupled, LossKind::standard};
    for (int k = 0; k < 2; ++k) {
        TrainConfig cfg;
        cfg.kind = kinds[k];
        const auto r = train_embedder(train.documents, train.gold, cfg, init);
        at[k] = pairs_at_recall(score_corpus(eval, ProjectionEmbedder(r.weights)), 0.95);
    }
    const double frac = static_cast<double>(at[0].candidate_pairs) / static_cast<double>(at[0].all_pairs);
    o.require(at[0].recall >= 0.95, "recall 0.95 unreachable");
    o.require(frac <= 0.10, "candidate fraction " + std::to_string(frac));
    o.require(at[0].candidate_pairs <= at[1].candidate_pairs, "decoupled training admits more pairs than standard");
    o.detail << "decoupled: t=" << at[0].threshold << " recall " << at[0].recall << " with " << at[0].candidate_pairs
             << " pairs (" << 100 * frac << "% of " << at[0].all_pairs << "); standard: " << at[1].candidate_pairs
             << " pairs (" << 100.0 * at[1].candidate_pairs / at[1].all_pairs << "%) at recall " << at[1].recall;
}

// -- 7 ------------------------------------------------------------------------------

RelevanceGraph random_graph(std::mt19937_64& rng, std::size_t n, double density) {
    std::vector<std::string> nodes;
    for (std::size_t i = 0; i < n; ++i) nodes.push_back("t" + std::to_string(i));
    std::vector<RelevanceEdge> edges;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (u(rng) < density) edges.push_back({a, b, std::max(0.01, std::round(u(rng) * 50) / 100)});
    return RelevanceGraph::from_edges(nodes, edges);
}

bool is_permutation_of(const std::vector<std::size_t>& order, std::size_t n) {
    std::vector<std::size_t> o = order, all(n);
    std::sort(o.begin(), o.end());
    std::iota(all.begin(), all.end(), 0);
    return o == all;
}

void cnap_correctness(Outcome& o) {
    std::mt19937_64 rng(707);
    for (int t = 0; t < 1000; ++t) {
        const auto g = random_graph(rng, 1 + rng() % 25, 0.3);
        if (!is_permutation_of(greedy_max_path(g, t).order, g.size())) {
            o.require(false, "greedy path is not a permutation");
            return;
        }
    }
    int bounded = 0;
    for (int t = 0; t < 200; ++t) {
        const auto g = random_graph(rng, 1 + rng() % 8, 0.5);
        bounded += greedy_max_path(g, t).total_weight <= exact_max_path(g).total_weight + 1e-12;
    }
    o.require(bounded == 200, "greedy exceeded exact on " + std::to_string(200 - bounded) + " graphs");

    int wins = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        GenConfig cfg;
        cfg.n_docs = 1;
        cfg.rng_seed = 1000 + s;
        const auto d = generate_corpus(cfg).documents[0];
        const auto g = build_graph(d);
        wins += greedy_max_path(g, s).total_weight >= reading_order_path(g).total_weight;
    }
    o.require(wins >= 95, "greedy >= reading order on only " + std::to_string(wins) + "/100");

    const auto abc = RelevanceGraph::from_edges({"A", "B", "C"}, {{0, 1, 0.5}, {1, 2, 0.3}, {0, 2, 0.1}});
    const auto p = greedy_max_path(abc, 1);
    o.require(p.order == std::vector<std::size_t>{0, 1, 2} && p.total_weight == 0.8, "hand example differs");
    o.detail << "1000 permutations; greedy <= exact on " << bounded << "/200; greedy >= reading order on " << wins
             << "/100 documents; [A,B,C] weight " << p.total_weight;
}

// -- 8 ------------------------------------------------------------------------------

void metrics_oracle(Outcome& o) {
    std::mt19937_64 rng(808);
    int exact = 0;
    for (int t = 0; t < 1000; ++t) {
        const int docs = 1 + static_cast<int>(rng() % 5);
        std::vector<PredictedPairs> gold, pred;
        for (int d = 0; d < docs; ++d) {
            PredictedPairs g{"d" + std::to_string(d), {}}, p{"d" + std::to_string(d), {}};
            for (int k = static_cast<int>(rng() % 10); k > 0; --k) g.pairs.insert(PairKey::of(rng() % 7, 7 + rng() % 7));
            for (int k = static_cast<int>(rng() % 10); k > 0; --k) p.pairs.insert(PairKey::of(rng() % 7, 7 + rng() % 7));
            gold.push_back(std::move(g));
            pred.push_back(std::move(p));
        }
        const auto m = evaluate_sets(gold, pred);
        long inter = 0, np = 0, ng = 0;
        for (int d = 0; d < docs; ++d) {
            for (const auto& a : pred[d].pairs)
                for (const auto& b : gold[d].pairs) inter += (a.first == b.first && a.second == b.second);
            np += static_cast<long>(pred[d].pairs.size());
            ng += static_cast<long>(gold[d].pairs.size());
        }
        const double P = np == 0 ? 1.0 : double(inter) / double(np);
        const double R = ng == 0 ? 1.0 : double(inter) / double(ng);
        const double F = P + R > 0 ? 2 * P * R / (P + R) : 0.0;
        exact += m.micro.precision == P && m.micro.recall == R && m.micro.f1 == F;
    }
    o.require(exact == 1000, "brute force disagreed on " + std::to_string(1000 - exact) + " sets");

    const auto two = evaluate_sets(std::vector<PredictedPairs>{{"a", {{1, 2}}}, {"b", {{1, 2}, {3, 4}, {5, 6}}}},
                                   std::vector<PredictedPairs>{{"a", {{1, 2}, {7, 8}}}, {"b", {{1, 2}}}});
    o.require(std::abs(two.micro.precision - 2.0 / 3.0) <= 1e-6 && std::abs(two.micro.recall - 0.5) <= 1e-6 &&
                  std::abs(two.micro.f1 - 0.571429) <= 1e-6,
              "multi-document example differs");
    o.detail << exact << "/1000 exact; example P=" << two.micro.precision << " R=" << two.micro.recall
             << " F1=" << two.micro.f1;
}

// -- 9 ------------------------------------------------------------------------------

void end_to_end(Outcome& o) {
    GenConfig gc;
    gc.inconsistency_rate = 0.1;
    const auto corpus = generate_corpus(gc);
    PipelineConfig pc;
    pc.embedder = std::make_shared<FeatureEmbedder>();
    pc.backend = std::make_shared<OracleBackend>(label_set(corpus.gold));
    pc.filter.threshold = 0.3;
    pc.workers = std::max(1u, std::thread::hardware_concurrency());
    const auto t0 = Clock::now();
    const auto r = run_pipeline(corpus, pc);
    const double s = seconds_since(t0);
    const auto& m = r.summary.inconsistencies.micro;
    o.require(!corpus.planted_inconsistencies.empty(), "no inconsistencies planted");
    o.require(m.precision == 1.0 && m.recall == 1.0, "precision " + std::to_string(m.precision) + " recall " + std::to_string(m.recall));
    o.require(s < 300, "pipeline took " + std::to_string(s) + " s");
    o.detail << m.counts.intersection << "/" << m.counts.gold << " planted detected, " << m.counts.predicted
             << " reported; P=" << m.precision << " R=" << m.recall << " in " << s << " s";
}

// -- 10 -----------------------------------------------------------------------------

bool contains_run(const std::vector<Token>& hay, const std::vector<Token>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < needle.size() && ok; ++k) ok = hay[i + k].id == needle[k].id;
        if (ok) return true;
    }
    return false;
}

void masking_completeness(Outcome& o) {
    GenConfig gc;
    gc.n_docs = 20;
    gc.rng_seed = 1010;
    const auto corpus = generate_corpus(gc);
    const auto& tok = default_tokenizer();
    std::mt19937_64 rng(1010);
    std::size_t prompts = 0, leaks = 0, cells = 0;
    while (prompts < 1000) {
        const auto& d = corpus.documents[prompts % corpus.documents.size()];
        const auto ms = extract_mentions(d);
        const auto& a = ms[rng() % ms.size()];
        const auto& b = ms[rng() % ms.size()];
        if (a.mention_id == b.mention_id) continue;
        const auto p = build_prompt(d, a, b);
        const auto hay = tok.tokenize(p.context_block);
        std::set<std::size_t> tables{a.table_index, b.table_index};
        for (auto ti : tables)
            for (const auto& cell : d.tables[ti].cells) {
                if (cell.kind != CellKind::numeric) continue;
                ++cells;
                leaks += contains_run(hay, tok.tokenize(normalize_value(cell.raw_text).to_string()));
            }
        ++prompts;
    }
    o.require(leaks == 0, std::to_string(leaks) + " numeric values found in masked context");
    o.detail << prompts << " prompts, " << cells << " numeric cells checked, " << leaks << " occurrences";
}

}  // namespace

int main() {
    run(1, [](Outcome& o) {
        const auto t0 = Clock::now();
        mask_isolation(o);
        o.require(seconds_since(t0) < 10, "runtime over 10 s");
    });
    run(2, position_law);
    run(3, loss_oracles);
    run(4, [](Outcome& o) {
        const auto t0 = Clock::now();
        gradient_check(o);
        o.require(seconds_since(t0) < 30, "runtime over 30 s");
    });
    run(5, [](Outcome& o) {
        const auto t0 = Clock::now();
        filter_fidelity(o);
        o.require(seconds_since(t0) < 60, "runtime over 60 s");
    });
    run(6, [](Outcome& o) {
        const auto t0 = Clock::now();
        sweep_analog(o);
        o.require(seconds_since(t0) < 600, "runtime over 10 min");
    });
    run(7, cnap_correctness);
    run(8, metrics_oracle);
    run(9, end_to_end);
    run(10, masking_completeness);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
