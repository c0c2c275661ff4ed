#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "tabcheck/document.hpp"

namespace tabcheck {

/// Row-per-mention float matrix. Rows produced by an embedder are unit-norm,
/// so cosine similarity is the dot product.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    explicit EmbeddingMatrix(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }

    const std::vector<MentionId>& ids() const { return ids_; }
    MentionId id(std::size_t row) const { return ids_[row]; }

    std::span<const float> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
    std::span<float> row(std::size_t r) { return {data_.data() + r * dim_, dim_}; }

    void add_row(MentionId id, std::span<const float> values);
    void append(const EmbeddingMatrix& other);

    /// Row index of a mention id, or npos.
    std::size_t find(MentionId id) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    const std::vector<float>& data() const { return data_; }

    friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<MentionId> ids_;
    std::vector<float> data_;
};

/// In-place L2 normalization; zero vectors are left unchanged.
void l2_normalize(std::span<float> v);
double dot(std::span<const float> a, std::span<const float> b);

// Binary format, little-endian:
//   magic "TCEM" | u32 version=1 | u32 dim | u32 count | count x i64 id | count*dim x f32
void write_matrix(std::ostream& out, const EmbeddingMatrix& m);
EmbeddingMatrix read_matrix(std::istream& in);
void write_matrix(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix read_matrix(const std::filesystem::path& path);

/// Embedder contract: one unit-norm row per mention of a table, in input order.
class MentionEmbedder {
public:
    virtual ~MentionEmbedder() = default;
    virtual std::size_t dim() const = 0;
    virtual EmbeddingMatrix embed_table(const Table& table,
                                        std::span<const NumericalMention> mentions) const = 0;
};

/// Embeds every mention of a document, table by table.
EmbeddingMatrix embed_document(const MentionEmbedder& embedder, const Document& doc,
                               std::span<const NumericalMention> mentions);

}  // namespace tabcheck
