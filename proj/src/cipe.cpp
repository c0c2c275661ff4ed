#include "tabcheck/cipe.hpp"

#include <algorithm>
#include <cmath>

#include "tabcheck/hashing.hpp"

namespace tabcheck {

namespace {

void append_tokens(EncodingLayout& layout, const std::vector<Token>& tokens, std::int32_t owner,
                   std::int64_t first_position) {
    std::int64_t pos = first_position;
    for (const auto& t : tokens) {
        layout.token_ids.push_back(t.id);
        layout.positions.push_back(pos++);
        layout.owner.push_back(owner);
    }
}

}  // namespace

std::size_t EncodingLayout::mention_end_index(MentionId id) const {
    for (const auto& s : segments)
        if (s.mention_id == id) return s.last();
    throw UnknownMention("mention " + std::to_string(id) + " not in layout");
}

EncodingLayout build_layout(std::string_view context, std::string_view prompt,
                            std::span<const MentionText> mentions, const Tokenizer& tokenizer,
                            std::size_t max_len) {
    if (mentions.empty()) throw Error("build_layout needs at least one mention");
    const auto ctx = tokenizer.tokenize(context);
    const auto pr = tokenizer.tokenize(prompt);
    if (ctx.size() + pr.size() > max_len)
        throw ContextTooLong(std::to_string(ctx.size() + pr.size()) + " context+prompt tokens exceed " +
                             std::to_string(max_len));

    EncodingLayout layout;
    layout.kind = LayoutKind::parallel;
    layout.context_len = ctx.size();
    layout.prompt_len = pr.size();
    append_tokens(layout, ctx, -1, 0);
    append_tokens(layout, pr, -1, static_cast<std::int64_t>(ctx.size()));

    const auto base = static_cast<std::int64_t>(layout.base_len());
    bool overflowed = false;
    for (const auto& m : mentions) {
        const auto toks = tokenizer.tokenize(m.text);
        if (overflowed || toks.empty() || layout.size() + toks.size() > max_len) {
            overflowed = overflowed || !toks.empty();
            layout.dropped.push_back(m.mention_id);
            continue;
        }
        const std::size_t begin = layout.size();
        append_tokens(layout, toks, static_cast<std::int32_t>(layout.segments.size()), base);
        layout.segments.push_back(MentionSegment{m.mention_id, begin, layout.size()});
    }
    return layout;
}

EncodingLayout build_epe_layout(std::string_view context, std::span<const MentionText> mentions,
                                const Tokenizer& tokenizer, std::size_t max_len) {
    if (mentions.empty()) throw MentionNotLocated("empty mention list");
    auto ctx = tokenizer.tokenize(context);
    if (ctx.size() > max_len) throw ContextTooLong(std::to_string(ctx.size()) + " context tokens exceed " + std::to_string(max_len));

    EncodingLayout layout;
    layout.kind = LayoutKind::extractive;
    layout.context_len = ctx.size();
    append_tokens(layout, ctx, -1, 0);

    std::size_t cursor = 0;
    for (const auto& m : mentions) {
        const auto needle = tokenizer.tokenize(m.text);
        if (needle.empty()) throw MentionNotLocated("mention " + std::to_string(m.mention_id) + " has no tokens");
        bool found = false;
        for (std::size_t start = std::max<std::size_t>(cursor, 1); start + needle.size() < ctx.size(); ++start) {
            if (ctx[start - 1].text != "|" || ctx[start + needle.size()].text != "|") continue;
            bool match = true;
            for (std::size_t k = 0; k < needle.size() && match; ++k) match = ctx[start + k].id == needle[k].id;
            if (!match) continue;
            const std::size_t begin = start;
            const std::size_t end = start + needle.size();
            for (std::size_t s = begin; s < end; ++s) layout.owner[s] = static_cast<std::int32_t>(layout.segments.size());
            layout.segments.push_back(MentionSegment{m.mention_id, begin, end});
            cursor = end;
            found = true;
            break;
        }
        if (!found) throw MentionNotLocated("mention " + std::to_string(m.mention_id) + " ('" + m.text + "')");
    }
    return layout;
}

bool attention_allowed(const EncodingLayout& layout, std::size_t query_slot, std::size_t key_slot) {
    if (key_slot > query_slot) return false;
    if (layout.kind == LayoutKind::extractive) return true;
    const std::int32_t q_owner = layout.owner[query_slot];
    const std::int32_t k_owner = layout.owner[key_slot];
    if (k_owner < 0) return true;  // context / prompt slot at or before the query
    return k_owner == q_owner;
}

ReferenceWeights ReferenceWeights::make(std::size_t dim, std::uint64_t seed) {
    ReferenceWeights w;
    w.dim = dim;
    w.seed = seed;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    auto fill = [&](std::vector<double>& m, std::uint64_t tag) {
        m.resize(dim * dim);
        for (std::size_t i = 0; i < m.size(); ++i)
            m[i] = (2.0 * unit_double(mix64(seed ^ mix64(tag * 0x10000 + i))) - 1.0) * scale;
    };
    fill(w.wq, 1);
    fill(w.wk, 2);
    fill(w.wv, 3);
    return w;
}

std::vector<double> ReferenceWeights::input(std::uint64_t token_id, std::int64_t position) const {
    std::vector<double> x(dim);
    const std::uint64_t base = mix64(seed ^ token_id);
    for (std::size_t j = 0; j < dim; ++j) {
        const double tok = 2.0 * unit_double(mix64(base + j)) - 1.0;
        const double freq = std::pow(10000.0, -static_cast<double>(j / 2 * 2) / static_cast<double>(dim));
        const double angle = static_cast<double>(position) * freq;
        x[j] = tok + 0.5 * ((j % 2 == 0) ? std::sin(angle) : std::cos(angle));
    }
    return x;
}

namespace {

std::vector<double> matvec(const std::vector<double>& m, const std::vector<double>& x, std::size_t dim) {
    std::vector<double> y(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) s += m[i * dim + j] * x[j];
        y[i] = s;
    }
    return y;
}

}  // namespace

EmbeddingMatrix reference_encode(const EncodingLayout& layout, const ReferenceWeights& w) {
    const std::size_t dim = w.dim;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dim));
    EmbeddingMatrix out(dim);
    std::vector<float> row(dim);
    for (const auto& seg : layout.segments) {
        const std::size_t q_slot = seg.last();
        const auto xq = w.input(layout.token_ids[q_slot], layout.positions[q_slot]);
        const auto q = matvec(w.wq, xq, dim);

        std::vector<std::size_t> keys;
        for (std::size_t k = 0; k <= q_slot; ++k)
            if (attention_allowed(layout, q_slot, k)) keys.push_back(k);

        std::vector<double> scores(keys.size());
        std::vector<std::vector<double>> values(keys.size());
        double max_score = -INFINITY;
        for (std::size_t i = 0; i < keys.size(); ++i) {
            const auto xk = w.input(layout.token_ids[keys[i]], layout.positions[keys[i]]);
            const auto k = matvec(w.wk, xk, dim);
            double s = 0.0;
            for (std::size_t j = 0; j < dim; ++j) s += q[j] * k[j];
            scores[i] = s * inv_sqrt;
            max_score = std::max(max_score, scores[i]);
            values[i] = matvec(w.wv, xk, dim);
        }
        double z = 0.0;
        for (auto& s : scores) {
            s = std::exp(s - max_score);
            z += s;
        }
        std::vector<double> h = xq;
        for (std::size_t i = 0; i < keys.size(); ++i)
            for (std::size_t j = 0; j < dim; ++j) h[j] += scores[i] / z * values[i][j];
        for (std::size_t j = 0; j < dim; ++j) row[j] = static_cast<float>(h[j]);
        l2_normalize(row);
        out.add_row(seg.mention_id, row);
    }
    return out;
}

EmbeddingMatrix ReferenceEmbedder::embed_table(const Table& table, std::span<const NumericalMention> mentions) const {
    const std::string context = table_context_text(table);
    std::vector<MentionText> pending;
    for (const auto& m : mentions) pending.push_back(MentionText{m.mention_id, m.raw_text});

    EmbeddingMatrix result(dim());
    if (kind_ == LayoutKind::extractive) {
        result.append(reference_encode(build_epe_layout(context, pending, default_tokenizer(), max_len_), weights_));
        return result;
    }
    while (!pending.empty()) {
        const auto layout = build_layout(context, prompt_, pending, default_tokenizer(), max_len_);
        if (layout.segments.empty()) throw ContextTooLong("no mention fits after the prompt");
        result.append(reference_encode(layout, weights_));
        std::vector<MentionText> rest;
        for (const auto& m : pending)
            if (std::find(layout.dropped.begin(), layout.dropped.end(), m.mention_id) != layout.dropped.end())
                rest.push_back(m);
        pending = std::move(rest);
    }
    return result;
}

}  // namespace tabcheck
