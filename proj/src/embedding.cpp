#include "tabcheck/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace tabcheck {

static_assert(std::endian::native == std::endian::little, "matrix I/O assumes a little-endian host");

void EmbeddingMatrix::add_row(MentionId id, std::span<const float> values) {
    if (values.size() != dim_)
        throw DimMismatch("row of size " + std::to_string(values.size()) + " into matrix of dim " +
                          std::to_string(dim_));
    ids_.push_back(id);
    data_.insert(data_.end(), values.begin(), values.end());
}

void EmbeddingMatrix::append(const EmbeddingMatrix& other) {
    if (other.empty()) return;
    if (empty() && dim_ == 0) dim_ = other.dim_;
    for (std::size_t r = 0; r < other.size(); ++r) add_row(other.id(r), other.row(r));
}

std::size_t EmbeddingMatrix::find(MentionId id) const {
    for (std::size_t r = 0; r < ids_.size(); ++r)
        if (ids_[r] == id) return r;
    return npos;
}

void l2_normalize(std::span<float> v) {
    double s = 0.0;
    for (float x : v) s += static_cast<double>(x) * x;
    if (s <= 0.0) return;
    const double inv = 1.0 / std::sqrt(s);
    for (float& x : v) x = static_cast<float>(x * inv);
}

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw SchemaError("truncated matrix file");
    return v;
}

}  // namespace

void write_matrix(std::ostream& out, const EmbeddingMatrix& m) {
    out.write("TCEM", 4);
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.size()));
    for (MentionId id : m.ids()) put<std::int64_t>(out, id);
    out.write(reinterpret_cast<const char*>(m.data().data()),
              static_cast<std::streamsize>(m.data().size() * sizeof(float)));
}

EmbeddingMatrix read_matrix(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TCEM", 4) != 0) throw SchemaError("not a matrix file");
    if (get<std::uint32_t>(in) != 1) throw SchemaError("unsupported matrix file version");
    const auto dim = get<std::uint32_t>(in);
    const auto count = get<std::uint32_t>(in);
    std::vector<MentionId> ids(count);
    for (auto& id : ids) id = get<std::int64_t>(in);
    EmbeddingMatrix m(dim);
    std::vector<float> row(dim);
    for (std::uint32_t r = 0; r < count; ++r) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(dim * sizeof(float)));
        if (!in) throw SchemaError("truncated matrix file");
        m.add_row(ids[r], row);
    }
    return m;
}

void write_matrix(const std::filesystem::path& path, const EmbeddingMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SchemaError("cannot write " + path.string());
    write_matrix(out, m);
}

EmbeddingMatrix read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot read " + path.string());
    return read_matrix(in);
}

EmbeddingMatrix embed_document(const MentionEmbedder& embedder, const Document& doc,
                               std::span<const NumericalMention> mentions) {
    EmbeddingMatrix out(embedder.dim());
    std::size_t begin = 0;
    while (begin < mentions.size()) {
        std::size_t end = begin;
        while (end < mentions.size() && mentions[end].table_index == mentions[begin].table_index) ++end;
        out.append(embedder.embed_table(doc.tables[mentions[begin].table_index], mentions.subspan(begin, end - begin)));
        begin = end;
    }
    return out;
}

}  // namespace tabcheck
