#pragma once

#include <cstdint>
#include <string>

namespace harness {

/// Exact rational number over int64, always normalized (gcd 1, den > 0).
/// Scores and score weights are kept rational end to end so that bucket
/// boundaries like 1/4 compare exactly, with no floating drift.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(std::int64_t num, std::int64_t den);
    static Rational from_int(std::int64_t v) { return Rational(v, 1); }

    /// Parses "3/4", "0.75", "1" or "-2.5e0"-free decimal forms exactly.
    static Rational parse(const std::string& text);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const;
    bool operator<=(const Rational& o) const { return *this < o || *this == o; }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return o <= *this; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// "num/den" exact form.
    std::string to_fraction_string() const;

    /// Fixed decimal with the given number of fractional digits,
    /// rounded half away from zero. Deterministic, locale-free.
    std::string to_decimal_string(int digits = 6) const;

private:
    std::int64_t num_;
    std::int64_t den_;
};

}  // namespace harness
