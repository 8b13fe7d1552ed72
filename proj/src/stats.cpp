#include "harness/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace harness {

namespace {

std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = (double(i + 1) + double(j + 1)) / 2.0;  // 1-based, ties averaged
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::invalid_argument("correlation undefined for constant input");
    }
    return sxy / std::sqrt(sxx * syy);
}

bool is_constant(const std::vector<double>& v) {
    for (double x : v) {
        if (x != v[0]) return false;
    }
    return true;
}

}  // namespace

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: size mismatch");
    if (x.size() < 3) throw std::invalid_argument("spearman: need at least 3 observations");
    if (is_constant(x) || is_constant(y)) {
        throw std::invalid_argument("correlation undefined for constant input");
    }
    return pearson(average_ranks(x), average_ranks(y));
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double coeff = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + coeff * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + coeff / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        coeff = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + coeff * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + coeff / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_distribution_sf(double f, double d1, double d2) {
    if (std::isinf(f)) return 0.0;
    if (f <= 0.0) return 1.0;
    return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

AnovaResult anova_one_way(const GroupedSample& sample) {
    const std::size_t k = sample.groups.size();
    if (k < 2) throw std::invalid_argument("anova: need at least 2 groups");
    std::size_t n = 0;
    double grand_sum = 0.0;
    for (const auto& [label, values] : sample.groups) {
        if (values.empty()) throw std::invalid_argument("anova: empty group \"" + label + "\"");
        n += values.size();
        for (double v : values) grand_sum += v;
    }
    if (n <= k) throw std::invalid_argument("anova: residual degrees of freedom must be positive");
    const double grand_mean = grand_sum / double(n);

    double ssb = 0.0;
    double ssw = 0.0;
    for (const auto& [label, values] : sample.groups) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= double(values.size());
        ssb += double(values.size()) * (mean - grand_mean) * (mean - grand_mean);
        for (double v : values) ssw += (v - mean) * (v - mean);
    }

    AnovaResult result;
    result.eta_p_squared = (ssb + ssw) == 0.0 ? 0.0 : ssb / (ssb + ssw);
    const double df1 = double(k - 1);
    const double df2 = double(n - k);
    if (ssw == 0.0) {
        if (ssb == 0.0) {
            result.f = 0.0;
            result.p_value = 1.0;
        } else {
            result.f = std::numeric_limits<double>::infinity();
            result.p_value = 0.0;
        }
        return result;
    }
    result.f = (ssb / df1) / (ssw / df2);
    result.p_value = f_distribution_sf(result.f, df1, df2);
    return result;
}

std::vector<DistributionSummary> score_distribution(
    const std::vector<std::pair<GradeReport, TypologyAnnotation>>& reports, DistributionKey key) {
    if (reports.empty()) throw std::invalid_argument("score_distribution: no reports");

    std::map<std::string, std::vector<std::pair<double, Bucket>>> groups;
    for (const auto& [report, annotation] : reports) {
        const auto entry = std::pair(report.final_score.to_double(), report.bucket);
        switch (key) {
            case DistributionKey::Family:
                groups[annotation.language_family].push_back(entry);
                break;
            case DistributionKey::Type:
                groups[to_string(annotation.type)].push_back(entry);
                break;
            case DistributionKey::Subject:
                for (Subject s : annotation.subjects) groups[to_string(s)].push_back(entry);
                break;
        }
    }

    std::vector<DistributionSummary> out;
    for (auto& [label, entries] : groups) {
        DistributionSummary summary;
        summary.key = label;
        summary.n = static_cast<int>(entries.size());
        std::vector<double> scores;
        scores.reserve(entries.size());
        for (const auto& [score, bucket] : entries) {
            scores.push_back(score);
            summary.bucket_counts[static_cast<int>(bucket)]++;
        }
        double sum = 0.0;
        for (double s : scores) sum += s;
        summary.mean = sum / double(scores.size());
        std::sort(scores.begin(), scores.end());
        summary.median = scores[(scores.size() - 1) / 2];
        double var = 0.0;
        for (double s : scores) var += (s - summary.mean) * (s - summary.mean);
        summary.stddev = std::sqrt(var / double(scores.size()));
        out.push_back(std::move(summary));
    }
    return out;
}

}  // namespace harness
