#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tabcheck/document.hpp"

namespace tabcheck {

inline constexpr std::string_view kNumPlaceholder = "[NUM]";

inline constexpr std::string_view kDefaultTaskDescription =
    "You are checking a financial document. Two numerical mentions are semantically equivalent when they "
    "express the same fact: the same entity, the same period and the same metric. Numerical values in the "
    "tables below are hidden as [NUM]; judge only from the surrounding text and headers.";

inline constexpr std::string_view kDefaultOutputInstruction =
    "Compare the value at row {row_i}, column {col_i} of table {table_i} with the value at row {row_j}, "
    "column {col_j} of table {table_j} (rows and columns count from 0, header row included). Are the two "
    "mentions semantically equivalent? Answer yes or no.";

struct PromptTemplates {
    std::string task_description{kDefaultTaskDescription};
    std::string output_instruction{kDefaultOutputInstruction};

    /// Throws Error unless the output instruction has {row_i}, {col_i}, {row_j}, {col_j}.
    void validate() const;
};

struct ClassificationPrompt {
    std::string doc_id;
    MentionId mention_i = 0;
    MentionId mention_j = 0;
    std::string task_description;
    std::string context_block;
    std::string output_instruction;

    std::string text() const;
};

/// Table context with every numeric cell replaced by the placeholder.
std::string masked_table_context(const Table& t, const ContextOptions& opts = {});

/// Throws PositionOutOfRange if a mention does not address a cell of its table.
ClassificationPrompt build_prompt(const Document& d, const NumericalMention& a, const NumericalMention& b,
                                  const PromptTemplates& templates = {});

enum class Decision { equivalent, not_equivalent, abstain };

std::string_view to_string(Decision d);
Decision decision_from_string(std::string_view s);

struct ClassifierVerdict {
    std::string doc_id;
    MentionId mention_i = 0;
    MentionId mention_j = 0;
    Decision decision = Decision::abstain;
    std::string raw_response;
    std::string raw_response_digest;  // SHA-256 of raw_response
};

struct ResponseMarkers {
    std::vector<std::string> negative{"not semantically equivalent", "not equivalent", "no"};
    std::vector<std::string> affirmative{"yes", "equivalent"};
};

/// Earliest word-bounded marker wins, case-insensitively; at one position a
/// negative marker beats an affirmative one. No marker gives abstain.
Decision parse_response(std::string_view raw, const ResponseMarkers& markers = {});

/// Raw response for one prompt. Implementations must tolerate concurrent
/// calls and throw BackendUnavailable on transport failure.
class ClassifierBackend {
public:
    virtual ~ClassifierBackend() = default;
    virtual std::string classify(const ClassificationPrompt& prompt) const = 0;
};

using LabelSet = std::set<std::pair<std::string, PairKey>>;

LabelSet label_set(std::span<const GoldAnnotation> gold);

inline constexpr std::string_view kAffirmativeReply = "Yes, they are semantically equivalent.";
inline constexpr std::string_view kNegativeReply = "No, they are not equivalent.";

/// Answers from gold labels carried alongside the prompts.
class OracleBackend final : public ClassifierBackend {
public:
    explicit OracleBackend(LabelSet equivalent) : equivalent_(std::move(equivalent)) {}
    std::string classify(const ClassificationPrompt& prompt) const override;

private:
    LabelSet equivalent_;
};

/// Oracle answers flipped for a seeded pseudo-random subset of pairs.
class NoisyBackend final : public ClassifierBackend {
public:
    NoisyBackend(LabelSet equivalent, double flip_rate, std::uint64_t seed);
    std::string classify(const ClassificationPrompt& prompt) const override;
    bool flips(const ClassificationPrompt& prompt) const;

private:
    LabelSet equivalent_;
    double flip_rate_;
    std::uint64_t seed_;
};

struct RemoteConfig {
    std::string url;  // e.g. https://host/v1/chat/completions
    std::string model = "default";
    std::string token_env = "TABCHECK_API_TOKEN";
    std::chrono::milliseconds timeout{60000};
};

/// Single-turn chat-completion request with temperature 0.
class RemoteBackend final : public ClassifierBackend {
public:
    explicit RemoteBackend(RemoteConfig cfg);
    std::string classify(const ClassificationPrompt& prompt) const override;

    static std::string request_body(const RemoteConfig& cfg, const ClassificationPrompt& prompt);
    static std::string response_text(const std::string& body);

private:
    RemoteConfig cfg_;
    std::string scheme_host_port_;
    std::string path_;
    std::string token_;
};

struct DispatchOptions {
    std::size_t max_in_flight = 4;
    int max_retries = 3;
    std::chrono::milliseconds backoff{200};
};

/// One verdict per prompt, in input order. A prompt that still fails after
/// the retries aborts the call with BackendUnavailable.
std::vector<ClassifierVerdict> classify_pairs(const ClassifierBackend& backend,
                                              std::span<const ClassificationPrompt> prompts,
                                              const DispatchOptions& opts = {});

std::size_t count_abstains(std::span<const ClassifierVerdict> verdicts);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

void write_verdicts(std::ostream& out, std::span<const ClassifierVerdict> verdicts);
/// Reads verdict records; raw responses are not persisted and come back empty.
/// Throws SchemaError on malformed lines.
std::vector<ClassifierVerdict> read_verdicts(std::istream& in);

}  // namespace tabcheck
