#include "tabcheck/tokenizer.hpp"

#include <cstdio>

#include "tabcheck/hashing.hpp"

namespace tabcheck {

namespace {

bool is_word(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::vector<Token> DefaultTokenizer::tokenize(std::string_view text) const {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        std::string piece;
        if (is_word(c)) {
            while (j < text.size() && is_word(static_cast<unsigned char>(text[j]))) ++j;
            piece.assign(text.substr(i, j - i));
        } else if (c < 0x80) {
            piece.assign(1, static_cast<char>(c));
        } else {
            char buf[8];
            std::snprintf(buf, sizeof buf, "<0x%02X>", c);
            piece = buf;
        }
        const std::uint64_t id = fnv1a64(piece);
        out.push_back(Token{id, std::move(piece), i, j - i});
        i = j;
    }
    return out;
}

const Tokenizer& default_tokenizer() {
    static const DefaultTokenizer instance;
    return instance;
}

}  // namespace tabcheck
