#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabcheck/embedding.hpp"
#include "tabcheck/tokenizer.hpp"

namespace tabcheck {

inline constexpr std::string_view kDefaultEmbeddingPrompt =
    "Encode the semantics of each following numerical mention given the table context:";
inline constexpr std::size_t kDefaultMaxLen = 4096;

struct MentionText {
    MentionId mention_id = 0;
    std::string text;
};

enum class LayoutKind {
    parallel,    // context ⊕ prompt ⊕ v_1 ⊕ ... ⊕ v_n with isolated mention segments
    extractive,  // context only, read at each mention's last in-context token
};

struct MentionSegment {
    MentionId mention_id = 0;
    std::size_t begin = 0;  // first slot
    std::size_t end = 0;    // one past last slot
    std::size_t last() const { return end - 1; }
};

/// Token slots of one encoder pass plus the attention/position rules that
/// govern them.
struct EncodingLayout {
    LayoutKind kind = LayoutKind::parallel;
    std::vector<std::uint64_t> token_ids;   // per slot
    std::vector<std::int64_t> positions;    // per slot
    std::vector<std::int32_t> owner;        // per slot: index into segments, -1 for context/prompt
    std::size_t context_len = 0;
    std::size_t prompt_len = 0;
    std::vector<MentionSegment> segments;
    std::vector<MentionId> dropped;         // mentions that did not fit in max_len

    std::size_t size() const { return token_ids.size(); }
    std::size_t base_len() const { return context_len + prompt_len; }

    /// Slot whose hidden state represents the mention; throws UnknownMention.
    std::size_t mention_end_index(MentionId id) const;
};

/// Builds the parallel layout. Positions of mention tokens restart at
/// base_len for every mention. Trailing mentions that would overflow
/// max_len are dropped whole and listed in `dropped`.
EncodingLayout build_layout(std::string_view context, std::string_view prompt,
                            std::span<const MentionText> mentions,
                            const Tokenizer& tokenizer = default_tokenizer(),
                            std::size_t max_len = kDefaultMaxLen);

/// Extractive layout: the context alone under a plain causal mask; each
/// mention is located as a whole table cell (bounded by '|' tokens) scanning
/// forward in cell order.
EncodingLayout build_epe_layout(std::string_view context, std::span<const MentionText> mentions,
                                const Tokenizer& tokenizer = default_tokenizer(),
                                std::size_t max_len = kDefaultMaxLen);

/// Attention-mask predicate. Context and prompt slots attend causally among
/// themselves; a mention token sees all context/prompt slots and the tokens
/// of its own mention up to itself.
bool attention_allowed(const EncodingLayout& layout, std::size_t query_slot, std::size_t key_slot);

/// Fixed random weights of the single-layer reference encoder.
struct ReferenceWeights {
    std::size_t dim = 32;
    std::uint64_t seed = 1;
    std::vector<double> wq, wk, wv;  // dim x dim, row-major

    static ReferenceWeights make(std::size_t dim, std::uint64_t seed);
    /// Deterministic input vector for a token id at a position.
    std::vector<double> input(std::uint64_t token_id, std::int64_t position) const;
};

/// One attention layer honoring attention_allowed and positions; row i is
/// the residual hidden state at segment i's last slot, L2-normalized.
EmbeddingMatrix reference_encode(const EncodingLayout& layout, const ReferenceWeights& weights);

/// Reference encoder behind the embedder contract. Mentions are re-encoded
/// in further passes when a pass truncates.
class ReferenceEmbedder final : public MentionEmbedder {
public:
    ReferenceEmbedder(ReferenceWeights weights, LayoutKind kind = LayoutKind::parallel,
                      std::string prompt = std::string(kDefaultEmbeddingPrompt),
                      std::size_t max_len = kDefaultMaxLen)
        : weights_(std::move(weights)), kind_(kind), prompt_(std::move(prompt)), max_len_(max_len) {}

    std::size_t dim() const override { return weights_.dim; }
    EmbeddingMatrix embed_table(const Table& table, std::span<const NumericalMention> mentions) const override;

private:
    ReferenceWeights weights_;
    LayoutKind kind_;
    std::string prompt_;
    std::size_t max_len_;
};

}  // namespace tabcheck
