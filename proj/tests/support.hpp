#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tabcheck/corpus_gen.hpp"

namespace testsupport {

inline tabcheck::GenConfig small_config(int docs = 3, std::uint64_t seed = 5) {
    tabcheck::GenConfig g;
    g.n_docs = docs;
    g.tables_per_doc = 6;
    g.mentions_per_doc_target = 60;
    g.rng_seed = seed;
    return g;
}

inline std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(dim);
    double s = 0.0;
    for (auto& x : v) {
        x = n(rng);
        s += x * x;
    }
    for (auto& x : v) x /= std::sqrt(s);
    return v;
}

}  // namespace testsupport
