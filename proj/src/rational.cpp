#include "harness/rational.hpp"

#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace harness {

namespace {

using i128 = __int128;

std::int64_t checked_narrow(i128 v) {
    if (v > INT64_MAX || v < INT64_MIN) {
        throw std::overflow_error("rational overflow");
    }
    return static_cast<std::int64_t>(v);
}

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

Rational make_normalized(i128 num, i128 den) {
    if (den == 0) throw std::domain_error("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    return Rational(checked_narrow(num), checked_narrow(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw std::domain_error("rational with zero denominator");
    if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
    }
    std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
        num_ /= g;
        den_ /= g;
    }
}

Rational Rational::parse(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty rational literal");
    auto slash = text.find('/');
    if (slash != std::string::npos) {
        std::int64_t n = std::stoll(text.substr(0, slash));
        std::int64_t d = std::stoll(text.substr(slash + 1));
        return Rational(n, d);
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) {
        return Rational(std::stoll(text), 1);
    }
    bool neg = text[0] == '-';
    std::string digits = text;
    digits.erase(dot, 1);
    if (neg) digits.erase(0, 1);
    if (digits.find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("bad rational literal: " + text);
    }
    std::int64_t n = digits.empty() ? 0 : std::stoll(digits);
    std::int64_t d = 1;
    for (std::size_t i = dot + 1; i < text.size(); ++i) {
        if (d > INT64_MAX / 10) throw std::overflow_error("rational literal too precise");
        d *= 10;
    }
    return Rational(neg ? -n : n, d);
}

Rational Rational::operator+(const Rational& o) const {
    return make_normalized(i128(num_) * o.den_ + i128(o.num_) * den_, i128(den_) * o.den_);
}

Rational Rational::operator-(const Rational& o) const {
    return make_normalized(i128(num_) * o.den_ - i128(o.num_) * den_, i128(den_) * o.den_);
}

Rational Rational::operator*(const Rational& o) const {
    return make_normalized(i128(num_) * o.num_, i128(den_) * o.den_);
}

Rational Rational::operator/(const Rational& o) const {
    if (o.num_ == 0) throw std::domain_error("rational division by zero");
    return make_normalized(i128(num_) * o.den_, i128(den_) * o.num_);
}

bool Rational::operator<(const Rational& o) const {
    return i128(num_) * o.den_ < i128(o.num_) * den_;
}

std::string Rational::to_fraction_string() const {
    return std::to_string(num_) + "/" + std::to_string(den_);
}

std::string Rational::to_decimal_string(int digits) const {
    i128 scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    i128 n = i128(num_) * scale;
    bool neg = n < 0;
    if (neg) n = -n;
    // round half away from zero
    i128 q = (n + den_ / 2) / den_;
    i128 whole = q / scale;
    i128 frac = q % scale;
    std::string f;
    for (int i = 0; i < digits; ++i) {
        f.insert(f.begin(), static_cast<char>('0' + int(frac % 10)));
        frac /= 10;
    }
    std::string w = std::to_string(checked_narrow(whole));
    std::string out = (neg ? "-" : "") + w;
    if (digits > 0) out += "." + f;
    return out;
}

}  // namespace harness
