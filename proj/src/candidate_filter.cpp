#include "tabcheck/candidate_filter.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <thread>

#include <json.hpp>

namespace tabcheck {

void FilterParams::validate() const {
    if (!(threshold > -1.0 && threshold < 1.0)) throw Error("threshold must lie in (-1, 1)");
    if (m_neighbors < 2 || ef_construction == 0 || ef_search == 0) throw Error("index parameters must be positive");
}

bool CandidatePairSet::contains(MentionId a, MentionId b) const {
    const PairKey k = PairKey::of(a, b);
    auto it = std::lower_bound(pairs.begin(), pairs.end(), k,
                               [](const CandidatePair& p, const PairKey& key) { return p.key() < key; });
    return it != pairs.end() && it->key() == k;
}

std::set<PairKey> CandidatePairSet::keys() const {
    std::set<PairKey> out;
    for (const auto& p : pairs) out.insert(p.key());
    return out;
}

SimilarityIndex build_index(const EmbeddingMatrix& e, const FilterParams& p) {
    p.validate();
    if (e.dim() == 0 || e.data().size() != e.size() * e.dim()) throw DimMismatch("embedding matrix has no usable dimension");
    SimilarityIndex index;
    index.embeddings_ = e;
    if (!p.exact_mode) {
        auto graph = std::make_shared<HnswIndex>(
            e.dim(), HnswParams{p.m_neighbors, 2 * p.m_neighbors, p.ef_construction, p.seed});
        for (std::size_t r = 0; r < e.size(); ++r) graph->add(e.row(r));
        index.hnsw_ = std::move(graph);
    }
    return index;
}

namespace {

void finalize(std::vector<CandidatePair>& pairs) {
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
    pairs.erase(std::unique(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.key() == b.key(); }),
                pairs.end());
}

CandidatePair make_pair(const EmbeddingMatrix& e, std::size_t a, std::size_t b) {
    CandidatePair p;
    const PairKey k = PairKey::of(e.id(a), e.id(b));
    p.first = k.first;
    p.second = k.second;
    p.similarity = dot(e.row(a), e.row(b));
    return p;
}

}  // namespace

CandidatePairSet query_pairs(const SimilarityIndex& index, const FilterParams& p, unsigned workers) {
    p.validate();
    const EmbeddingMatrix& e = index.embeddings();
    if (index.exact()) return exact_pairs(e, p.threshold);

    const HnswIndex& graph = *index.graph();
    const std::size_t n = e.size();
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n / 64, 1))));
    std::vector<std::vector<CandidatePair>> parts(workers);
    auto run = [&](unsigned w) {
        for (std::size_t r = w; r < n; r += workers) {
            for (const auto& [node, s] : graph.range(e.row(r), static_cast<float>(p.threshold), p.ef_search)) {
                if (node == r) continue;
                CandidatePair cp = make_pair(e, r, node);
                // the float score steered the search; the reported one is recomputed
                if (cp.similarity > p.threshold && cp.first != cp.second) parts[w].push_back(cp);
            }
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> threads;
        for (unsigned w = 0; w < workers; ++w) threads.emplace_back(run, w);
    }
    CandidatePairSet out;
    for (auto& part : parts) out.pairs.insert(out.pairs.end(), part.begin(), part.end());
    finalize(out.pairs);
    return out;
}

CandidatePairSet exact_pairs(const EmbeddingMatrix& e, double threshold) {
    CandidatePairSet out;
    for (std::size_t a = 0; a < e.size(); ++a)
        for (std::size_t b = a + 1; b < e.size(); ++b) {
            if (e.id(a) == e.id(b)) continue;
            CandidatePair cp = make_pair(e, a, b);
            if (cp.similarity > threshold) out.pairs.push_back(cp);
        }
    finalize(out.pairs);
    return out;
}

ScoredDocument score_document(const std::string& doc_id, const EmbeddingMatrix& e, const GoldAnnotation& gold) {
    ScoredDocument d;
    d.doc_id = doc_id;
    d.n_mentions = e.size();
    d.pair_sims.reserve(e.size() * (e.size() - (e.size() > 0)) / 2);
    for (std::size_t a = 0; a < e.size(); ++a)
        for (std::size_t b = a + 1; b < e.size(); ++b) d.pair_sims.push_back(dot(e.row(a), e.row(b)));
    for (const auto& key : gold.pairs()) {
        const std::size_t a = e.find(key.first);
        const std::size_t b = e.find(key.second);
        if (a == EmbeddingMatrix::npos || b == EmbeddingMatrix::npos)
            throw UnknownMention("gold pair references a mention without embedding in " + doc_id);
        d.gold_sims.push_back(dot(e.row(a), e.row(b)));
    }
    return d;
}

namespace {

std::size_t count_above(const std::vector<double>& sorted, double t) {
    return static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t));
}

struct SortedDocs {
    std::vector<std::vector<double>> pairs;
    std::vector<std::vector<double>> gold;
    std::size_t gold_total = 0;
    std::size_t all_pairs = 0;
};

SortedDocs sort_docs(std::span<const ScoredDocument> docs) {
    SortedDocs s;
    for (const auto& d : docs) {
        s.pairs.push_back(d.pair_sims);
        std::sort(s.pairs.back().begin(), s.pairs.back().end());
        s.gold.push_back(d.gold_sims);
        std::sort(s.gold.back().begin(), s.gold.back().end());
        s.gold_total += d.gold_sims.size();
        s.all_pairs += d.pair_sims.size();
    }
    return s;
}

SweepPoint point_at(const SortedDocs& s, std::size_t n_docs, double t) {
    SweepPoint pt;
    pt.threshold = t;
    pt.gold_total = s.gold_total;
    pt.all_pairs = s.all_pairs;
    for (std::size_t i = 0; i < n_docs; ++i) {
        pt.candidate_pairs += count_above(s.pairs[i], t);
        pt.gold_found += count_above(s.gold[i], t);
    }
    pt.recall = s.gold_total == 0 ? 1.0 : static_cast<double>(pt.gold_found) / static_cast<double>(s.gold_total);
    pt.pairs_per_doc = n_docs == 0 ? 0.0 : static_cast<double>(pt.candidate_pairs) / static_cast<double>(n_docs);
    return pt;
}

}  // namespace

std::vector<SweepPoint> sweep_thresholds(std::span<const ScoredDocument> docs, std::span<const double> thresholds) {
    const SortedDocs s = sort_docs(docs);
    std::vector<SweepPoint> out;
    for (double t : thresholds) out.push_back(point_at(s, docs.size(), t));
    return out;
}

std::vector<double> default_thresholds() { return parse_threshold_range("0.1:0.9:0.1"); }

std::vector<double> parse_threshold_range(const std::string& spec) {
    const auto c1 = spec.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : spec.find(':', c1 + 1);
    if (c2 == std::string::npos) throw Error("threshold range must be lo:hi:step, got '" + spec + "'");
    double lo, hi, step;
    try {
        lo = std::stod(spec.substr(0, c1));
        hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
        step = std::stod(spec.substr(c2 + 1));
    } catch (const std::exception&) {
        throw Error("threshold range must be lo:hi:step, got '" + spec + "'");
    }
    if (!(step > 0.0) || hi < lo) throw Error("threshold range needs step > 0 and hi >= lo");
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e9) / 1e9);
    return out;
}

SweepPoint pairs_at_recall(std::span<const ScoredDocument> docs, double target) {
    const SortedDocs s = sort_docs(docs);
    if (s.gold_total == 0) return point_at(s, docs.size(), std::nextafter(1.0, 2.0));
    std::vector<double> gold;
    for (const auto& g : s.gold) gold.insert(gold.end(), g.begin(), g.end());
    std::sort(gold.begin(), gold.end(), std::greater<>());
    auto need = static_cast<std::size_t>(std::ceil(target * static_cast<double>(s.gold_total) - 1e-9));
    need = std::clamp<std::size_t>(need, 1, gold.size());
    const double t = std::nextafter(gold[need - 1], -std::numeric_limits<double>::infinity());
    return point_at(s, docs.size(), t);
}

void write_candidates(std::ostream& out, const std::string& doc_id, const CandidatePairSet& pairs) {
    for (const auto& p : pairs.pairs) {
        nlohmann::json j{{"doc_id", doc_id}, {"mention_i", p.first}, {"mention_j", p.second}, {"similarity", p.similarity}};
        out << j.dump() << '\n';
    }
}

std::vector<std::pair<std::string, CandidatePair>> read_candidates(std::istream& in) {
    std::vector<std::pair<std::string, CandidatePair>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            CandidatePair p;
            const PairKey k = PairKey::of(j.at("mention_i").get<MentionId>(), j.at("mention_j").get<MentionId>());
            p.first = k.first;
            p.second = k.second;
            p.similarity = j.at("similarity").get<double>();
            out.emplace_back(j.at("doc_id").get<std::string>(), p);
        } catch (const nlohmann::json::exception& ex) {
            throw SchemaError(std::string("candidate record: ") + ex.what());
        }
    }
    return out;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepPoint> points) {
    out << "threshold,recall,pairs_per_doc\n";
    char buf[128];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf, "%.4g,%.6f,%.4f\n", p.threshold, p.recall, p.pairs_per_doc);
        out << buf;
    }
}

}  // namespace tabcheck
