#pragma once

#include <map>
#include <string>
#include <vector>

#include "harness/grading.hpp"
#include "harness/problem.hpp"

namespace harness {

/// Spearman rank correlation with average ranks for ties.
/// Requires |x| == |y| >= 3 and neither side constant.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

struct GroupedSample {
    std::map<std::string, std::vector<double>> groups;
};

struct AnovaResult {
    double f = 0.0;
    double p_value = 1.0;
    double eta_p_squared = 0.0;
};

/// One-way ANOVA: F = (SSB/(k-1)) / (SSW/(n-k)), partial eta-squared
/// SSB/(SSB+SSW) with a 0/0 guard, p from the F survival function.
/// Requires >= 2 groups, each nonempty, and n - k > 0.
AnovaResult anova_one_way(const GroupedSample& sample);

/// Regularized incomplete beta function I_x(a, b), continued-fraction
/// evaluation. Exposed for the F-distribution tail and its tests.
double incomplete_beta(double a, double b, double x);

/// Survival function of the F distribution with (d1, d2) degrees of freedom.
double f_distribution_sf(double f, double d1, double d2);

enum class DistributionKey { Family, Subject, Type };

struct DistributionSummary {
    std::string key;
    int n = 0;
    double mean = 0.0;
    double median = 0.0;  // lower middle value for even n
    double stddev = 0.0;  // population standard deviation
    int bucket_counts[4] = {0, 0, 0, 0};
};

/// Final-score distributions grouped by a typology tag; reports with
/// several subjects contribute to each subject group. Sorted by key.
std::vector<DistributionSummary> score_distribution(
    const std::vector<std::pair<GradeReport, TypologyAnnotation>>& reports, DistributionKey key);

}  // namespace harness
