#include "tabcheck/cnap.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "tabcheck/rng.hpp"

namespace tabcheck {

double relevance_score(std::span<const NumericValue> a, std::span<const NumericValue> b) {
    if (a.empty() || b.empty()) throw EmptyList();
    std::map<std::string, std::size_t> counts;
    for (const auto& v : a) ++counts[v.to_string()];
    std::size_t equal = 0;
    for (const auto& v : b) {
        auto it = counts.find(v.to_string());
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++equal;
        }
    }
    return static_cast<double>(equal) / static_cast<double>(a.size() + b.size());
}

double RelevanceGraph::weight(std::size_t a, std::size_t b) const {
    for (const auto& [n, w] : adjacency[a])
        if (n == b) return w;
    return 0.0;
}

RelevanceGraph RelevanceGraph::from_edges(std::vector<std::string> nodes, std::vector<RelevanceEdge> edges) {
    RelevanceGraph g;
    g.nodes = std::move(nodes);
    g.adjacency.resize(g.nodes.size());
    for (auto e : edges) {
        if (e.a > e.b) std::swap(e.a, e.b);
        if (e.a == e.b || e.b >= g.nodes.size()) throw Error("invalid relevance edge");
        if (!(e.weight > 0.0)) continue;
        g.edges.push_back(e);
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const auto& x, const auto& y) { return std::pair(x.a, x.b) < std::pair(y.a, y.b); });
    for (std::size_t i = 1; i < g.edges.size(); ++i)
        if (g.edges[i].a == g.edges[i - 1].a && g.edges[i].b == g.edges[i - 1].b) throw Error("duplicate relevance edge");
    for (const auto& e : g.edges) {
        g.adjacency[e.a].emplace_back(e.b, e.weight);
        g.adjacency[e.b].emplace_back(e.a, e.weight);
    }
    for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
    return g;
}

RelevanceGraph build_graph(const Document& d) {
    std::vector<std::vector<NumericValue>> values(d.tables.size());
    for (const auto& m : extract_mentions(d)) values[m.table_index].push_back(m.value);
    std::vector<std::string> nodes;
    for (const auto& t : d.tables) nodes.push_back(t.table_id);
    std::vector<RelevanceEdge> edges;
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i + 1; j < values.size(); ++j) {
            if (values[i].empty() || values[j].empty()) continue;
            const double w = relevance_score(values[i], values[j]);
            if (w > 0.0) edges.push_back({i, j, w});
        }
    return RelevanceGraph::from_edges(std::move(nodes), std::move(edges));
}

double path_weight(const RelevanceGraph& g, std::span<const std::size_t> order) {
    double w = 0.0;
    for (std::size_t i = 1; i < order.size(); ++i) w += g.weight(order[i - 1], order[i]);
    return w;
}

PretrainingPath greedy_max_path(const RelevanceGraph& g, std::uint64_t seed) {
    PretrainingPath p;
    const std::size_t n = g.size();
    if (n == 0) return p;
    Rng rng(seed);
    std::vector<bool> visited(n, false);

    auto min_degree_unvisited = [&] {
        std::size_t best = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> ties;
        for (std::size_t v = 0; v < n; ++v) {
            if (visited[v]) continue;
            if (g.degree(v) < best) {
                best = g.degree(v);
                ties.clear();
            }
            if (g.degree(v) == best) ties.push_back(v);
        }
        return ties;
    };

    std::size_t cur = min_degree_unvisited().front();
    for (;;) {
        visited[cur] = true;
        p.order.push_back(cur);
        if (p.order.size() == n) break;
        std::size_t next = n;
        double best = 0.0;
        for (const auto& [nb, w] : g.adjacency[cur])
            if (!visited[nb] && w > best) {
                best = w;
                next = nb;
            }
        if (next == n) {
            const auto ties = min_degree_unvisited();
            next = ties[rng.index(ties.size())];
            p.bridges.push_back(p.order.size());
        } else {
            p.total_weight += best;
        }
        cur = next;
    }
    return p;
}

PretrainingPath reading_order_path(const RelevanceGraph& g) {
    PretrainingPath p;
    p.order.resize(g.size());
    std::iota(p.order.begin(), p.order.end(), 0);
    for (std::size_t i = 1; i < p.order.size(); ++i) {
        const double w = g.weight(p.order[i - 1], p.order[i]);
        if (w > 0.0)
            p.total_weight += w;
        else
            p.bridges.push_back(i);
    }
    return p;
}

PretrainingPath exact_max_path(const RelevanceGraph& g) {
    const std::size_t n = g.size();
    if (n > kExactLimit) throw TooLarge(std::to_string(n) + " nodes exceed the exhaustive limit of " + std::to_string(kExactLimit));
    std::vector<double> w(n * n, 0.0);
    for (const auto& e : g.edges) w[e.a * n + e.b] = w[e.b * n + e.a] = e.weight;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best_perm = perm;
    double best = -1.0;
    do {
        double s = 0.0;
        for (std::size_t i = 1; i < n; ++i) s += w[perm[i - 1] * n + perm[i]];
        if (s > best) {
            best = s;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    PretrainingPath p;
    p.order = best_perm;
    for (std::size_t i = 1; i < n; ++i)
        if (w[p.order[i - 1] * n + p.order[i]] <= 0.0) p.bridges.push_back(i);
    p.total_weight = path_weight(g, p.order);
    return p;
}

std::string chunk_table_text(const Table& t) { return linearize_table(t); }

std::vector<PretrainingChunk> truncate_path(const Document& d, const PretrainingPath& p, std::size_t chunk_size,
                                            const Tokenizer& tokenizer) {
    if (chunk_size == 0) throw Error("chunk_size must be > 0");
    std::vector<PretrainingChunk> chunks;
    PretrainingChunk cur;
    auto flush = [&] {
        if (!cur.table_ids.empty()) chunks.push_back(std::move(cur));
        cur = PretrainingChunk{};
    };
    for (std::size_t node : p.order) {
        if (node >= d.tables.size()) throw Error("path node outside document");
        const Table& t = d.tables[node];
        std::string text = chunk_table_text(t);
        const auto tokens = tokenizer.tokenize(text);
        if (tokens.size() > chunk_size) {
            flush();
            const Token& last = tokens[chunk_size - 1];
            cur.text = text.substr(0, last.offset + last.length);
            cur.table_ids.push_back(t.table_id);
            cur.token_len = chunk_size;
            flush();
            continue;
        }
        if (cur.token_len + tokens.size() > chunk_size) flush();
        if (!cur.text.empty()) cur.text += "\n\n";
        cur.text += text;
        cur.table_ids.push_back(t.table_id);
        cur.token_len += tokens.size();
    }
    flush();
    return chunks;
}

void write_chunks(std::ostream& out, const std::string& doc_id, std::span<const PretrainingChunk> chunks,
                  const PretrainingPath& p) {
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        nlohmann::json j{{"doc_id", doc_id},
                         {"chunk_index", i},
                         {"text", chunks[i].text},
                         {"table_ids", chunks[i].table_ids},
                         {"bridge_count", p.bridges.size()},
                         {"path_weight", p.total_weight}};
        out << j.dump() << '\n';
    }
}

}  // namespace tabcheck
