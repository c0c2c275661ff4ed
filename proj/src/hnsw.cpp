#include "tabcheck/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <unordered_set>

#include "tabcheck/hashing.hpp"

namespace tabcheck {

namespace {

struct Closer {
    bool operator()(const HnswIndex::Hit& a, const HnswIndex::Hit& b) const {
        return a.second != b.second ? a.second < b.second : a.first > b.first;
    }
};

struct Farther {
    bool operator()(const HnswIndex::Hit& a, const HnswIndex::Hit& b) const {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    }
};

bool better(const HnswIndex::Hit& a, const HnswIndex::Hit& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
}

}  // namespace

HnswIndex::HnswIndex(std::size_t dim, HnswParams params)
    : dim_(dim), params_(params), level_mult_(1.0 / std::log(static_cast<double>(std::max<std::size_t>(params.m, 2)))),
      rng_state_(mix64(params.seed)) {
    if (dim == 0) throw std::invalid_argument("index dimension must be positive");
    if (params.m < 2 || params.m0 < params.m || params.ef_construction == 0)
        throw std::invalid_argument("invalid index parameters");
}

int HnswIndex::draw_level() {
    rng_state_ = mix64(rng_state_ + 0x9e3779b97f4a7c15ULL);
    double u = unit_double(rng_state_);
    if (u <= 0.0) u = 0x1.0p-53;
    return static_cast<int>(std::floor(-std::log(u) * level_mult_));
}

float HnswIndex::sim(std::span<const float> q, std::uint32_t node) const {
    const float* v = data_.data() + std::size_t{node} * dim_;
    float s = 0.0f;
    for (std::size_t i = 0; i < dim_; ++i) s += q[i] * v[i];
    return s;
}

std::vector<HnswIndex::Hit> HnswIndex::search_layer(std::span<const float> q, std::uint32_t entry, std::size_t ef,
                                                    int level) const {
    std::unordered_set<std::uint32_t> visited{entry};
    std::priority_queue<Hit, std::vector<Hit>, Closer> frontier;  // best on top
    std::priority_queue<Hit, std::vector<Hit>, Farther> found;    // worst on top
    const Hit start{entry, sim(q, entry)};
    frontier.push(start);
    found.push(start);
    while (!frontier.empty()) {
        const Hit cur = frontier.top();
        if (found.size() >= ef && cur.second < found.top().second) break;
        frontier.pop();
        for (std::uint32_t nb : links_[cur.first][level]) {
            if (!visited.insert(nb).second) continue;
            const Hit h{nb, sim(q, nb)};
            if (found.size() < ef || h.second > found.top().second) {
                frontier.push(h);
                found.push(h);
                if (found.size() > ef) found.pop();
            }
        }
    }
    std::vector<Hit> out;
    out.reserve(found.size());
    while (!found.empty()) {
        out.push_back(found.top());
        found.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

// Diversity heuristic: keep a candidate only if it is closer to the query
// than to every neighbor kept so far; backfill with the rest.
std::vector<std::uint32_t> HnswIndex::select_neighbors(std::span<const float>, std::vector<Hit> candidates,
                                                       std::size_t m) const {
    std::sort(candidates.begin(), candidates.end(), better);
    std::vector<std::uint32_t> kept;
    std::vector<std::uint32_t> skipped;
    for (const auto& [node, s] : candidates) {
        if (kept.size() >= m) break;
        bool diverse = true;
        for (std::uint32_t k : kept)
            if (sim(vector(node), k) > s) {
                diverse = false;
                break;
            }
        (diverse ? kept : skipped).push_back(node);
    }
    for (std::size_t i = 0; i < skipped.size() && kept.size() < m; ++i) kept.push_back(skipped[i]);
    return kept;
}

void HnswIndex::shrink(std::uint32_t node, int level) {
    auto& adj = links_[node][level];
    const std::size_t cap = level == 0 ? params_.m0 : params_.m;
    if (adj.size() <= cap) return;
    std::vector<Hit> cands;
    cands.reserve(adj.size());
    for (std::uint32_t nb : adj) cands.emplace_back(nb, sim(vector(node), nb));
    adj = select_neighbors(vector(node), std::move(cands), cap);
}

void HnswIndex::add(std::span<const float> v) {
    if (v.size() != dim_) throw std::invalid_argument("vector dimension does not match index");
    const auto node = static_cast<std::uint32_t>(levels_.size());
    const int level = draw_level();
    data_.insert(data_.end(), v.begin(), v.end());
    levels_.push_back(level);
    links_.emplace_back(static_cast<std::size_t>(level) + 1);
    if (max_level_ < 0) {
        entry_ = node;
        max_level_ = level;
        return;
    }
    const auto q = vector(node);
    std::uint32_t ep = entry_;
    for (int l = max_level_; l > level; --l) ep = search_layer(q, ep, 1, l).front().first;
    for (int l = std::min(level, max_level_); l >= 0; --l) {
        auto cands = search_layer(q, ep, params_.ef_construction, l);
        ep = cands.front().first;
        const std::size_t cap = l == 0 ? params_.m0 : params_.m;
        links_[node][l] = select_neighbors(q, std::move(cands), params_.m);
        for (std::uint32_t nb : links_[node][l]) {
            links_[nb][l].push_back(node);
            if (links_[nb][l].size() > cap) shrink(nb, l);
        }
    }
    if (level > max_level_) {
        max_level_ = level;
        entry_ = node;
    }
}

std::vector<HnswIndex::Hit> HnswIndex::search(std::span<const float> query, std::size_t k, std::size_t ef) const {
    if (query.size() != dim_) throw std::invalid_argument("query dimension does not match index");
    if (max_level_ < 0 || k == 0) return {};
    std::uint32_t ep = entry_;
    for (int l = max_level_; l > 0; --l) ep = search_layer(query, ep, 1, l).front().first;
    auto hits = search_layer(query, ep, std::max(ef, k), 0);
    if (hits.size() > k) hits.resize(k);
    return hits;
}

std::vector<HnswIndex::Hit> HnswIndex::range(std::span<const float> query, float threshold, std::size_t ef) const {
    std::size_t k = std::max<std::size_t>(ef, 1);
    for (;;) {
        auto hits = search(query, k, ef);
        const bool exhausted = hits.size() < k || hits.size() >= size();
        if (exhausted || hits.back().second <= threshold) {
            std::erase_if(hits, [&](const Hit& h) { return !(h.second > threshold); });
            return hits;
        }
        k *= 2;
    }
}

}  // namespace tabcheck
