#pragma once

// Independent brute-force oracles. These deliberately re-derive every
// value from first principles (sorted-vector multisets, direct sums,
// quadrature) instead of calling the implementations they check.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace oracles {

// ---- character handling (independent of harness/text.hpp) ----

inline std::vector<char32_t> decode_utf8(const std::string& s) {
    std::vector<char32_t> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char b = s[i];
        if (b < 0x80) {
            out.push_back(b);
            i += 1;
        } else if ((b & 0xE0) == 0xC0) {
            out.push_back(((b & 0x1F) << 6) | (s[i + 1] & 0x3F));
            i += 2;
        } else if ((b & 0xF0) == 0xE0) {
            out.push_back(((b & 0x0F) << 12) | ((s[i + 1] & 0x3F) << 6) | (s[i + 2] & 0x3F));
            i += 3;
        } else {
            out.push_back(((b & 0x07) << 18) | ((s[i + 1] & 0x3F) << 12) |
                          ((s[i + 2] & 0x3F) << 6) | (s[i + 3] & 0x3F));
            i += 4;
        }
    }
    return out;
}

inline bool oracle_is_space(char32_t c) {
    static const char32_t spaces[] = {U'\t', U'\n', U'\v', U'\f', U'\r', U' ',  0x0085,
                                      0x00A0, 0x1680, 0x2028, 0x2029, 0x202F, 0x205F, 0x3000};
    for (char32_t s : spaces) {
        if (c == s) return true;
    }
    return c >= 0x2000 && c <= 0x200A;
}

// ---- chrF oracle: enumerate all n-grams, clip counts directly ----

inline double chrf_oracle(const std::string& hyp_raw, const std::string& ref_raw, int max_order,
                          double beta) {
    if (hyp_raw.empty()) return 0.0;
    std::vector<char32_t> hyp;
    for (char32_t c : decode_utf8(hyp_raw)) {
        if (!oracle_is_space(c)) hyp.push_back(c);
    }
    std::vector<char32_t> ref;
    for (char32_t c : decode_utf8(ref_raw)) {
        if (!oracle_is_space(c)) ref.push_back(c);
    }

    double p_sum = 0.0, r_sum = 0.0;
    int orders = 0;
    for (int n = 1; n <= max_order; ++n) {
        // sorted-vector multiset representation
        std::vector<std::vector<char32_t>> ref_grams, hyp_grams;
        for (std::size_t i = 0; n <= (int)ref.size() && i + n <= ref.size(); ++i) {
            ref_grams.emplace_back(ref.begin() + i, ref.begin() + i + n);
        }
        if (ref_grams.empty()) continue;
        for (std::size_t i = 0; n <= (int)hyp.size() && i + n <= hyp.size(); ++i) {
            hyp_grams.emplace_back(hyp.begin() + i, hyp.begin() + i + n);
        }
        std::sort(ref_grams.begin(), ref_grams.end());
        std::sort(hyp_grams.begin(), hyp_grams.end());
        // clipped matches via sorted-merge intersection with multiplicity
        std::size_t matches = 0, a = 0, b = 0;
        while (a < hyp_grams.size() && b < ref_grams.size()) {
            if (hyp_grams[a] == ref_grams[b]) {
                ++matches;
                ++a;
                ++b;
            } else if (hyp_grams[a] < ref_grams[b]) {
                ++a;
            } else {
                ++b;
            }
        }
        p_sum += hyp_grams.empty() ? 0.0 : double(matches) / hyp_grams.size();
        r_sum += double(matches) / ref_grams.size();
        ++orders;
    }
    if (orders == 0) return 0.0;
    const double p = p_sum / orders;
    const double r = r_sum / orders;
    if (p == 0.0 && r == 0.0) return 0.0;
    const double b2 = beta * beta;
    return 100.0 * (1.0 + b2) * p * r / (b2 * p + r);
}

// ---- ANOVA oracle: direct sums of squares ----

struct AnovaOracle {
    double f;
    double eta_p_squared;
};

inline AnovaOracle anova_oracle(const std::vector<std::vector<double>>& groups) {
    std::size_t n = 0;
    double total = 0.0;
    for (const auto& g : groups) {
        n += g.size();
        for (double v : g) total += v;
    }
    const double grand = total / double(n);
    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        double m = 0.0;
        for (double v : g) m += v;
        m /= double(g.size());
        ssb += double(g.size()) * (m - grand) * (m - grand);
        for (double v : g) ssw += (v - m) * (v - m);
    }
    const double k = double(groups.size());
    AnovaOracle out;
    out.eta_p_squared = (ssb + ssw) == 0.0 ? 0.0 : ssb / (ssb + ssw);
    out.f = ssw == 0.0 ? std::numeric_limits<double>::infinity()
                       : (ssb / (k - 1.0)) / (ssw / (double(n) - k));
    return out;
}

// ---- Spearman oracle: rank by sorting, then textbook Pearson ----

inline std::vector<double> rank_oracle(const std::vector<double>& v) {
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        // average rank = mean of the 1-based positions this value occupies
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++less;
            if (v[j] == v[i]) ++equal;
        }
        ranks[i] = double(less + 1 + less + equal) / 2.0;
    }
    return ranks;
}

inline double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    auto rx = rank_oracle(x);
    auto ry = rank_oracle(y);
    const std::size_t n = rx.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

// ---- regularized incomplete beta via adaptive Simpson quadrature ----

inline double beta_density_integral(double a, double b, double lo, double hi, int depth,
                                    double eps) {
    auto f = [a, b](double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t));
    };
    const double mid = (lo + hi) / 2.0;
    auto simpson = [&](double l, double h) {
        return (h - l) / 6.0 * (f(l) + 4.0 * f((l + h) / 2.0) + f(h));
    };
    const double whole = simpson(lo, hi);
    const double left = simpson(lo, mid);
    const double right = simpson(mid, hi);
    if (depth <= 0 || std::fabs(left + right - whole) < eps) {
        return left + right + (left + right - whole) / 15.0;
    }
    return beta_density_integral(a, b, lo, mid, depth - 1, eps / 2.0) +
           beta_density_integral(a, b, mid, hi, depth - 1, eps / 2.0);
}

inline double incomplete_beta_oracle(double a, double b, double x) {
    const double norm = std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
    return beta_density_integral(a, b, 0.0, x, 40, 1e-13) / norm;
}

}  // namespace oracles
