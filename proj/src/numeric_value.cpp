#include "tabcheck/numeric_value.hpp"

#include <algorithm>
#include <array>

namespace tabcheck {

namespace {

constexpr std::array<std::string_view, 6> kCurrencyMarks = {"US$", "$", "\xE2\x82\xAC" /* € */,
                                                            "\xC2\xA3" /* £ */, "\xC2\xA5" /* ¥ */,
                                                            "\xEF\xBF\xA5" /* ￥ */};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\n' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

bool strip_currency(std::string_view& s) {
    for (auto mark : kCurrencyMarks) {
        if (s.starts_with(mark)) {
            s.remove_prefix(mark.size());
            s = trim(s);
            return true;
        }
    }
    return false;
}

// Core grammar after decorations are removed: digits with optional single
// '.', thousands separators allowed between digits.
bool parse_plain(std::string_view s, NumericValue::Mantissa& mantissa, std::uint32_t& scale) {
    std::string digits;
    bool seen_point = false;
    std::uint32_t frac = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c >= '0' && c <= '9') {
            digits.push_back(c);
            if (seen_point) ++frac;
        } else if (c == '.') {
            if (seen_point) return false;
            seen_point = true;
        } else if (c == ',' || c == ' ') {
            // separator must sit between digits of the integer part
            if (seen_point || digits.empty() || i + 1 >= s.size()) return false;
            const char next = s[i + 1];
            if (next < '0' || next > '9') return false;
        } else {
            return false;
        }
    }
    if (digits.empty()) return false;
    // a leading zero would make the string parse as octal
    const auto nz = digits.find_first_not_of('0');
    mantissa = nz == std::string::npos ? NumericValue::Mantissa(0) : NumericValue::Mantissa(digits.substr(nz));
    scale = frac;
    return true;
}

}  // namespace

NumericValue::NumericValue(Mantissa mantissa, std::uint32_t scale, bool is_percent)
    : mantissa_(std::move(mantissa)), scale_(scale), is_percent_(is_percent) {
    canonicalize();
}

void NumericValue::canonicalize() {
    if (mantissa_ == 0) {
        scale_ = 0;
        return;
    }
    while (scale_ > 0 && mantissa_ % 10 == 0) {
        mantissa_ /= 10;
        --scale_;
    }
}

std::string NumericValue::digits() const {
    std::string s = (mantissa_ < 0 ? Mantissa(-mantissa_) : mantissa_).str();
    if (scale_ >= s.size()) s.insert(0, scale_ - s.size() + 1, '0');
    return s;
}

std::string NumericValue::to_string() const {
    std::string body = digits();
    if (scale_ > 0) body.insert(body.size() - scale_, 1, '.');
    std::string out;
    if (mantissa_ < 0) out.push_back('-');
    out += body;
    if (is_percent_) out.push_back('%');
    return out;
}

NumericValue NumericValue::from_canonical(std::string_view text) {
    std::string_view s = text;
    bool pct = false;
    bool neg = false;
    if (s.ends_with('%')) {
        pct = true;
        s.remove_suffix(1);
    }
    if (s.starts_with('-')) {
        neg = true;
        s.remove_prefix(1);
    }
    Mantissa m;
    std::uint32_t scale = 0;
    if (s.find_first_of(", ") != std::string_view::npos || !parse_plain(s, m, scale))
        throw NotNumeric(std::string(text));
    return NumericValue(neg ? Mantissa(-m) : m, scale, pct);
}

NumericValue NumericValue::operator+(const NumericValue& other) const {
    const std::uint32_t scale = std::max(scale_, other.scale_);
    Mantissa a = mantissa_;
    Mantissa b = other.mantissa_;
    for (std::uint32_t s = scale_; s < scale; ++s) a *= 10;
    for (std::uint32_t s = other.scale_; s < scale; ++s) b *= 10;
    return NumericValue(a + b, scale, is_percent_);
}

bool try_normalize_value(std::string_view raw, NumericValue& out) {
    std::string_view s = trim(raw);
    bool neg = false;
    bool pct = false;

    auto take_percent = [&]() {
        if (s.ends_with('%')) {
            pct = true;
            s.remove_suffix(1);
            s = trim(s);
        }
    };

    take_percent();
    if (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
        neg = true;
        s = trim(s.substr(1, s.size() - 2));
        take_percent();
    }
    if (!neg && (s.starts_with('-') || s.starts_with('+'))) {
        neg = s.front() == '-';
        s = trim(s.substr(1));
    }
    strip_currency(s);
    if (!neg && (s.starts_with('-') || s.starts_with('+'))) {
        neg = s.front() == '-';
        s = trim(s.substr(1));
    }
    if (!pct) take_percent();

    NumericValue::Mantissa m;
    std::uint32_t scale = 0;
    if (!parse_plain(s, m, scale)) return false;
    out = NumericValue(neg ? NumericValue::Mantissa(-m) : m, scale, pct);
    return true;
}

NumericValue normalize_value(std::string_view raw) {
    NumericValue v;
    if (!try_normalize_value(raw, v)) throw NotNumeric(std::string(raw));
    return v;
}

}  // namespace tabcheck
