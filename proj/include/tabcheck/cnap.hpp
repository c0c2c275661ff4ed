#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tabcheck/document.hpp"
#include "tabcheck/tokenizer.hpp"

namespace tabcheck {

/// Count of equal values (multiset intersection after normalization) over
/// |a| + |b|. Throws EmptyList if either list is empty.
double relevance_score(std::span<const NumericValue> a, std::span<const NumericValue> b);

struct RelevanceEdge {
    std::size_t a = 0;  // a < b
    std::size_t b = 0;
    double weight = 0.0;
};

/// Undirected graph over a document's tables (node index = table index).
struct RelevanceGraph {
    std::vector<std::string> nodes;  // table ids
    std::vector<RelevanceEdge> edges;
    std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;

    std::size_t size() const { return nodes.size(); }
    std::size_t degree(std::size_t node) const { return adjacency[node].size(); }
    double weight(std::size_t a, std::size_t b) const;  // 0 when absent

    static RelevanceGraph from_edges(std::vector<std::string> nodes, std::vector<RelevanceEdge> edges);
};

RelevanceGraph build_graph(const Document& d);

struct PretrainingPath {
    std::vector<std::size_t> order;          // node indices
    std::vector<std::size_t> bridges;        // positions i where order[i] was reached by a jump
    double total_weight = 0.0;
};

/// Sum of consecutive edge weights.
double path_weight(const RelevanceGraph& g, std::span<const std::size_t> order);

PretrainingPath greedy_max_path(const RelevanceGraph& g, std::uint64_t seed);
PretrainingPath reading_order_path(const RelevanceGraph& g);

/// Exhaustive search; throws TooLarge above kExactLimit nodes.
inline constexpr std::size_t kExactLimit = 10;
PretrainingPath exact_max_path(const RelevanceGraph& g);

struct PretrainingChunk {
    std::string text;
    std::vector<std::string> table_ids;
    std::size_t token_len = 0;
};

/// Packs linearized tables greedily in path order into chunks of at most
/// chunk_size tokens; a table longer than chunk_size becomes its own chunk,
/// cut at the chunk_size-th token.
std::vector<PretrainingChunk> truncate_path(const Document& d, const PretrainingPath& p, std::size_t chunk_size,
                                            const Tokenizer& tokenizer = default_tokenizer());

/// Text of one table as placed in a chunk.
std::string chunk_table_text(const Table& t);

void write_chunks(std::ostream& out, const std::string& doc_id, std::span<const PretrainingChunk> chunks,
                  const PretrainingPath& p);

}  // namespace tabcheck
