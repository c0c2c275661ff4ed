#include "tabcheck/crosscheck.hpp"

#include <algorithm>
#include <unordered_map>

#include <json.hpp>

namespace tabcheck {

std::set<PairKey> MatchReport::predicted() const {
    std::set<PairKey> out;
    for (const auto& m : matches) out.insert({m.mention_i, m.mention_j});
    return out;
}

MatchReport detect_inconsistencies(const std::string& doc_id, std::span<const ClassifierVerdict> verdicts,
                                   std::span<const NumericalMention> mentions) {
    std::unordered_map<MentionId, const NumericalMention*> by_id;
    for (const auto& m : mentions) by_id[m.mention_id] = &m;
    auto lookup = [&](MentionId id) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw UnknownMention("mention " + std::to_string(id) + " in " + doc_id);
        return it->second;
    };

    MatchReport r;
    r.doc_id = doc_id;
    for (const auto& v : verdicts) {
        if (v.doc_id != doc_id) continue;
        if (v.decision == Decision::abstain) ++r.abstains;
        if (v.decision != Decision::equivalent) continue;
        const PairKey k = PairKey::of(v.mention_i, v.mention_j);
        const NumericalMention* a = lookup(k.first);
        const NumericalMention* b = lookup(k.second);
        MatchedPair mp{k.first, k.second, a->raw_text, b->raw_text, a->value, b->value,
                       numeric_equal(a->value, b->value), v.raw_response_digest};
        r.matches.push_back(std::move(mp));
    }
    auto by_key = [](const MatchedPair& x, const MatchedPair& y) {
        return std::pair(x.mention_i, x.mention_j) < std::pair(y.mention_i, y.mention_j);
    };
    std::sort(r.matches.begin(), r.matches.end(), by_key);
    r.matches.erase(std::unique(r.matches.begin(), r.matches.end(),
                                [](const auto& x, const auto& y) {
                                    return x.mention_i == y.mention_i && x.mention_j == y.mention_j;
                                }),
                    r.matches.end());
    for (const auto& m : r.matches)
        if (!m.equal) r.inconsistencies.push_back(m);
    return r;
}

Metrics Metrics::from_counts(const PairCounts& c) {
    Metrics m;
    m.counts = c;
    m.zero_gold = c.gold == 0;
    m.zero_predicted = c.predicted == 0;
    m.precision = c.predicted == 0 ? 1.0 : static_cast<double>(c.intersection) / static_cast<double>(c.predicted);
    m.recall = c.gold == 0 ? 1.0 : static_cast<double>(c.intersection) / static_cast<double>(c.gold);
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

MetricsResult evaluate_sets(std::span<const PredictedPairs> gold, std::span<const PredictedPairs> pred) {
    if (gold.size() != pred.size())
        throw DocMismatch(std::to_string(gold.size()) + " gold documents vs " + std::to_string(pred.size()) + " predicted");
    MetricsResult r;
    PairCounts total;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i].doc_id != pred[i].doc_id) throw DocMismatch(gold[i].doc_id + " vs " + pred[i].doc_id);
        PairCounts c;
        c.gold = gold[i].pairs.size();
        c.predicted = pred[i].pairs.size();
        for (const auto& k : pred[i].pairs) c.intersection += gold[i].pairs.count(k);
        total.gold += c.gold;
        total.predicted += c.predicted;
        total.intersection += c.intersection;
        r.per_doc.push_back({gold[i].doc_id, Metrics::from_counts(c)});
    }
    r.micro = Metrics::from_counts(total);
    return r;
}

MetricsResult evaluate(std::span<const GoldAnnotation> gold, std::span<const PredictedPairs> pred) {
    std::vector<PredictedPairs> g;
    g.reserve(gold.size());
    for (const auto& a : gold) g.push_back({a.doc_id, a.pairs()});
    return evaluate_sets(g, pred);
}

nlohmann::json to_json(const Metrics& m) {
    return {{"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"gold", m.counts.gold},
            {"predicted", m.counts.predicted},
            {"intersection", m.counts.intersection},
            {"zero_gold", m.zero_gold},
            {"zero_predicted", m.zero_predicted}};
}

nlohmann::json to_json(const MetricsResult& r) {
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& d : r.per_doc) {
        auto j = to_json(d.metrics);
        j["doc_id"] = d.doc_id;
        docs.push_back(std::move(j));
    }
    return {{"micro", to_json(r.micro)}, {"per_doc", std::move(docs)}};
}

namespace {

nlohmann::json pair_json(const MatchedPair& m) {
    return {{"mention_i", m.mention_i},     {"mention_j", m.mention_j},
            {"raw_i", m.raw_i},             {"raw_j", m.raw_j},
            {"value_i", m.value_i.to_string()}, {"value_j", m.value_j.to_string()},
            {"numeric_equal", m.equal},     {"verdict_digest", m.verdict_digest}};
}

}  // namespace

nlohmann::json to_json(const MatchReport& r) {
    nlohmann::json matches = nlohmann::json::array();
    nlohmann::json bad = nlohmann::json::array();
    for (const auto& m : r.matches) matches.push_back(pair_json(m));
    for (const auto& m : r.inconsistencies) bad.push_back(pair_json(m));
    return {{"doc_id", r.doc_id}, {"matches", std::move(matches)}, {"inconsistencies", std::move(bad)}, {"abstains", r.abstains}};
}

}  // namespace tabcheck
