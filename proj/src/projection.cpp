#include "tabcheck/projection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>

#include "tabcheck/hashing.hpp"
#include "tabcheck/rng.hpp"
#include "tabcheck/tokenizer.hpp"

namespace tabcheck {

namespace {

enum Field : std::uint32_t { kContext = 0, kRowHeader = 1, kColHeader = 2, kPosition = 3 };

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

void add_words(std::map<std::string, float>& bag, std::string_view text) {
    for (const auto& tok : default_tokenizer().tokenize(text)) {
        const auto c = static_cast<unsigned char>(tok.text.front());
        if (std::isalnum(c)) bag[lower(tok.text)] += 1.0f;
    }
}

void emit(std::map<std::uint32_t, float>& out, Field field, const std::map<std::string, float>& bag,
          const FeatureConfig& cfg) {
    if (bag.empty()) return;
    std::map<std::uint32_t, float> block;
    const std::uint64_t salt = mix64(0xfeed0000ULL + field);
    for (const auto& [word, count] : bag) {
        const std::uint64_t h = fnv1a64(word, salt);
        const auto bucket = static_cast<std::uint32_t>(h % cfg.block());
        const float sign = ((h >> 63) & 1) ? -1.0f : 1.0f;
        block[bucket] += sign * count;
    }
    double norm = 0.0;
    for (const auto& [_, v] : block) norm += static_cast<double>(v) * v;
    if (norm <= 0.0) return;
    const double inv = 1.0 / std::sqrt(norm);
    const auto offset = static_cast<std::uint32_t>(field * cfg.block());
    for (const auto& [b, v] : block)
        if (v != 0.0f) out[offset + b] = static_cast<float>(v * inv);
}

}  // namespace

SparseFeatures mention_features(const Table& table, const NumericalMention& m, const FeatureConfig& cfg) {
    std::map<std::string, float> context, row_header, col_header, position;
    add_words(context, table.chapter_title);
    for (std::size_t c = 0; c < table.n_cols; ++c)
        if (table.at(0, c).kind != CellKind::numeric) add_words(context, table.at(0, c).raw_text);
    if (m.col != 0 && table.at(m.row, 0).kind != CellKind::numeric) add_words(row_header, table.at(m.row, 0).raw_text);
    if (m.row != 0 && table.at(0, m.col).kind != CellKind::numeric) add_words(col_header, table.at(0, m.col).raw_text);
    position["row=" + std::to_string(m.row)] = 1.0f;
    position["col=" + std::to_string(m.col)] = 1.0f;

    std::map<std::uint32_t, float> merged;
    emit(merged, kContext, context, cfg);
    emit(merged, kRowHeader, row_header, cfg);
    emit(merged, kColHeader, col_header, cfg);
    emit(merged, kPosition, position, cfg);
    SparseFeatures f;
    f.entries.assign(merged.begin(), merged.end());
    return f;
}

std::vector<float> baseline_embed(const Table& table, const NumericalMention& mention, const FeatureConfig& cfg) {
    std::vector<float> v(cfg.feature_dim, 0.0f);
    for (const auto& [i, x] : mention_features(table, mention, cfg).entries) v[i] = x;
    l2_normalize(v);
    return v;
}

ProjectionMatrix ProjectionMatrix::identity(std::size_t n) {
    ProjectionMatrix p{n, n, std::vector<float>(n * n, 0.0f)};
    for (std::size_t i = 0; i < n; ++i) p.at(i, i) = 1.0f;
    return p;
}

ProjectionMatrix ProjectionMatrix::random(std::size_t out_dim, std::size_t in_dim, std::uint64_t seed) {
    ProjectionMatrix p{out_dim, in_dim, std::vector<float>(out_dim * in_dim)};
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(out_dim));
    for (auto& x : p.w) x = static_cast<float>(rng.normal() * scale);
    return p;
}

EmbeddingMatrix ProjectionMatrix::to_matrix() const {
    EmbeddingMatrix m(in_dim);
    for (std::size_t r = 0; r < out_dim; ++r)
        m.add_row(static_cast<MentionId>(r), std::span<const float>(w.data() + r * in_dim, in_dim));
    return m;
}

ProjectionMatrix ProjectionMatrix::from_matrix(const EmbeddingMatrix& m) {
    ProjectionMatrix p{m.size(), m.dim(), m.data()};
    return p;
}

std::vector<double> project(const SparseFeatures& f, const ProjectionMatrix& w) {
    std::vector<double> z(w.out_dim, 0.0);
    for (const auto& [i, x] : f.entries) {
        if (i >= w.in_dim) throw DimMismatch("feature index beyond projection input");
        for (std::size_t r = 0; r < w.out_dim; ++r) z[r] += static_cast<double>(w.at(r, i)) * x;
    }
    return z;
}

std::vector<float> projection_embed(const SparseFeatures& f, const ProjectionMatrix& w) {
    const auto z = project(f, w);
    std::vector<float> e(z.begin(), z.end());
    l2_normalize(e);
    return e;
}

EmbeddingMatrix FeatureEmbedder::embed_table(const Table& table, std::span<const NumericalMention> mentions) const {
    EmbeddingMatrix out(dim());
    for (const auto& m : mentions) out.add_row(m.mention_id, baseline_embed(table, m, cfg_));
    return out;
}

EmbeddingMatrix ProjectionEmbedder::embed_table(const Table& table, std::span<const NumericalMention> mentions) const {
    EmbeddingMatrix out(dim());
    for (const auto& m : mentions) out.add_row(m.mention_id, projection_embed(mention_features(table, m, cfg_), w_));
    return out;
}

}  // namespace tabcheck
