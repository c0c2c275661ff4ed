#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace tabcheck {

struct HnswParams {
    std::size_t m = 16;                 // links per node on upper layers
    std::size_t m0 = 32;                // links per node on layer 0
    std::size_t ef_construction = 200;
    std::uint64_t seed = 42;
};

/// Layered proximity graph over unit-norm float vectors, scored by inner
/// product. Built single-threaded; const searches are safe to run
/// concurrently.
class HnswIndex {
public:
    using Hit = std::pair<std::uint32_t, float>;  // (node, similarity)

    HnswIndex(std::size_t dim, HnswParams params = {});

    /// Adds vectors in order; node ids are consecutive from 0.
    void add(std::span<const float> vector);

    std::size_t size() const { return levels_.size(); }
    std::size_t dim() const { return dim_; }
    int max_level() const { return max_level_; }
    std::span<const float> vector(std::uint32_t node) const { return {data_.data() + std::size_t{node} * dim_, dim_}; }

    /// Up to k nearest nodes by similarity, best first, using a beam of
    /// max(ef, k) on the bottom layer.
    std::vector<Hit> search(std::span<const float> query, std::size_t k, std::size_t ef) const;

    /// Nodes with similarity > threshold, found by repeatedly doubling k
    /// until the k-th hit falls at or below the threshold.
    std::vector<Hit> range(std::span<const float> query, float threshold, std::size_t ef) const;

    /// Layer-0 adjacency, for structural tests.
    const std::vector<std::uint32_t>& links(std::uint32_t node, int level) const { return links_[node][level]; }

private:
    float sim(std::span<const float> q, std::uint32_t node) const;
    std::vector<Hit> search_layer(std::span<const float> q, std::uint32_t entry, std::size_t ef, int level) const;
    std::vector<std::uint32_t> select_neighbors(std::span<const float> q, std::vector<Hit> candidates,
                                                std::size_t m) const;
    void shrink(std::uint32_t node, int level);
    int draw_level();

    std::size_t dim_;
    HnswParams params_;
    double level_mult_;
    std::uint64_t rng_state_;
    std::vector<float> data_;
    std::vector<int> levels_;
    std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // [node][level]
    std::uint32_t entry_ = 0;
    int max_level_ = -1;
};

}  // namespace tabcheck
