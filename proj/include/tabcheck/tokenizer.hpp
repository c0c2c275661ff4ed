#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace tabcheck {

struct Token {
    std::uint64_t id = 0;
    std::string text;
    std::size_t offset = 0;  // byte offset in the source string
    std::size_t length = 0;  // byte length in the source string
};

/// Tokenizer contract: a pure, deterministic function from text to tokens.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<Token> tokenize(std::string_view text) const = 0;

    std::size_t count(std::string_view text) const { return tokenize(text).size(); }
};

/// Splits on whitespace; ASCII alphanumeric runs are word tokens, each ASCII
/// punctuation character is its own token, and every non-ASCII byte falls
/// back to a single-byte token.
class DefaultTokenizer final : public Tokenizer {
public:
    std::vector<Token> tokenize(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

}  // namespace tabcheck
