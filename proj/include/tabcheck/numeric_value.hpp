#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace tabcheck {

class NotNumeric : public std::runtime_error {
public:
    explicit NotNumeric(const std::string& raw)
        : std::runtime_error("not a numeric value: '" + raw + "'") {}
};

/// Exact decimal: value = mantissa * 10^(-scale), optionally a percentage.
/// Always held in canonical form (no trailing fractional zeros, zero has
/// scale 0), so structural equality is numeric equality.
class NumericValue {
public:
    using Mantissa = boost::multiprecision::cpp_int;

    NumericValue() = default;
    NumericValue(Mantissa mantissa, std::uint32_t scale, bool is_percent = false);

    /// Parses a canonical string as produced by to_string() ("-1234.5", "12.5%").
    static NumericValue from_canonical(std::string_view text);

    const Mantissa& mantissa() const { return mantissa_; }
    std::uint32_t scale() const { return scale_; }
    bool is_percent() const { return is_percent_; }
    bool is_negative() const { return mantissa_ < 0; }

    /// Canonical rendering: optional '-', integer digits, optional '.'
    /// fraction, optional '%'.
    std::string to_string() const;

    /// Digits only, sign/point/percent dropped ("-1234.5" -> "12345").
    std::string digits() const;

    NumericValue operator+(const NumericValue& other) const;

    friend bool operator==(const NumericValue&, const NumericValue&) = default;

private:
    void canonicalize();

    Mantissa mantissa_{0};
    std::uint32_t scale_ = 0;
    bool is_percent_ = false;
};

/// Normalizes a raw cell string. Strips thousands separators (',' and
/// spaces) and currency symbols, maps "(x)" to -x, a trailing '%' sets the
/// percent flag. Throws NotNumeric on any other residue.
NumericValue normalize_value(std::string_view raw);

/// Non-throwing variant of normalize_value.
bool try_normalize_value(std::string_view raw, NumericValue& out);

/// Exact equality with matching percent flag.
inline bool numeric_equal(const NumericValue& a, const NumericValue& b) { return a == b; }

}  // namespace tabcheck
