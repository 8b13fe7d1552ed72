#include <doctest.h>

#include <cmath>
#include <random>

#include "harness/stats.hpp"
#include "oracles.hpp"

using namespace harness;

TEST_CASE("spearman basics") {
    CHECK(spearman_rho({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
    CHECK(spearman_rho({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(spearman_rho({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(spearman_rho({1, 2}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(spearman_rho({1, 2, 3}, {1, 2}), std::invalid_argument);
}

TEST_CASE("tied fixture matches the hand-computed value") {
    // ranks x: 1, 2.5, 2.5, 4; ranks y: 1, 3, 2, 4; rho = sqrt(0.9)
    const double expected = 0.9486832980505138;
    CHECK(spearman_rho({1, 2, 2, 3}, {1, 3, 2, 4}) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(oracles::spearman_oracle({1, 2, 2, 3}, {1, 3, 2, 4}) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("spearman oracle equivalence and invariances") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> val(-5.0, 5.0);
    std::uniform_int_distribution<int> size(3, 25);
    std::uniform_int_distribution<int> tie(0, 3);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = size(rng);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = tie(rng) == 0 && i > 0 ? x[i - 1] : val(rng);
            y[i] = tie(rng) == 0 && i > 0 ? y[i - 1] : val(rng);
        }
        bool x_const = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
        bool y_const = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
        if (x_const || y_const) continue;
        const double got = spearman_rho(x, y);
        CHECK(got == doctest::Approx(oracles::spearman_oracle(x, y)).epsilon(1e-12));
        CHECK(got >= -1.0 - 1e-12);
        CHECK(got <= 1.0 + 1e-12);

        // invariant under a strictly increasing transform of x
        std::vector<double> x2(n);
        for (int i = 0; i < n; ++i) x2[i] = std::exp(x[i] / 3.0) + 2.0 * x[i];
        CHECK(spearman_rho(x2, y) == doctest::Approx(got).epsilon(1e-12));
    }
    SUBCASE("reversing a tie-free y flips the sign") {
        std::vector<double> x = {1, 2, 3, 4, 5};
        std::vector<double> y = {0.3, 2.0, 1.1, 4.2, 3.3};
        std::vector<double> y_rev(y.rbegin(), y.rend());
        CHECK(spearman_rho(x, y_rev) == doctest::Approx(-spearman_rho(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("anova forced cases") {
    SUBCASE("zero within-group variance") {
        GroupedSample s;
        s.groups["A"] = {1, 1};
        s.groups["B"] = {2, 2};
        auto r = anova_one_way(s);
        CHECK(r.eta_p_squared == doctest::Approx(1.0));
        CHECK(std::isinf(r.f));
        CHECK(r.p_value == doctest::Approx(0.0));
    }
    SUBCASE("all groups constant and equal: 0/0 guard") {
        GroupedSample s;
        s.groups["A"] = {3, 3};
        s.groups["B"] = {3, 3};
        auto r = anova_one_way(s);
        CHECK(r.eta_p_squared == 0.0);
        CHECK(r.p_value == doctest::Approx(1.0));
    }
    SUBCASE("degrees-of-freedom guard") {
        GroupedSample s;
        s.groups["A"] = {1};
        s.groups["B"] = {2};
        CHECK_THROWS_AS(anova_one_way(s), std::invalid_argument);
        GroupedSample one;
        one.groups["A"] = {1, 2};
        CHECK_THROWS_AS(anova_one_way(one), std::invalid_argument);
    }
}

TEST_CASE("anova oracle equivalence and eta invariances") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> k_dist(2, 5);
    std::uniform_int_distribution<int> n_dist(2, 12);
    std::uniform_real_distribution<double> val(-10.0, 10.0);
    std::uniform_real_distribution<double> shift(-50.0, 50.0);
    std::uniform_real_distribution<double> scale(0.1, 20.0);
    for (int trial = 0; trial < 120; ++trial) {
        GroupedSample s;
        std::vector<std::vector<double>> raw;
        const int k = k_dist(rng);
        for (int g = 0; g < k; ++g) {
            std::vector<double> group;
            for (int i = n_dist(rng); i > 0; --i) group.push_back(val(rng));
            raw.push_back(group);
            s.groups["g" + std::to_string(g)] = group;
        }
        std::size_t n = 0;
        for (const auto& g : raw) n += g.size();
        if (n <= static_cast<std::size_t>(k)) continue;

        const auto got = anova_one_way(s);
        const auto want = oracles::anova_oracle(raw);
        if (std::isinf(want.f)) {
            CHECK(std::isinf(got.f));
        } else {
            CHECK(got.f == doctest::Approx(want.f).epsilon(1e-9));
        }
        CHECK(got.eta_p_squared == doctest::Approx(want.eta_p_squared).epsilon(1e-9));
        CHECK(got.eta_p_squared >= 0.0);
        CHECK(got.eta_p_squared <= 1.0 + 1e-12);
        CHECK(got.p_value >= 0.0);
        CHECK(got.p_value <= 1.0 + 1e-12);

        // eta_p^2 is invariant under affine shifts and nonzero scaling
        const double a = shift(rng);
        const double b = scale(rng);
        GroupedSample transformed;
        for (const auto& [label, values] : s.groups) {
            for (double v : values) transformed.groups[label].push_back(b * v + a);
        }
        const auto got2 = anova_one_way(transformed);
        CHECK(got2.eta_p_squared == doctest::Approx(got.eta_p_squared).epsilon(1e-9));
    }
}

TEST_CASE("equal group means give zero effect size") {
    GroupedSample s;
    s.groups["A"] = {1.0, 3.0};   // mean 2
    s.groups["B"] = {0.0, 4.0};   // mean 2
    s.groups["C"] = {2.0, 2.0};   // mean 2
    auto r = anova_one_way(s);
    CHECK(r.eta_p_squared == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("f distribution tail matches quadrature oracle") {
    struct Case {
        double f, d1, d2;
    };
    for (const Case& c : {Case{1.0, 2, 10}, Case{3.5, 4, 20}, Case{0.2, 1, 5}, Case{7.7, 3, 12},
                          Case{2.25, 6, 30}}) {
        const double x = c.d2 / (c.d2 + c.d1 * c.f);
        const double want = oracles::incomplete_beta_oracle(c.d2 / 2.0, c.d1 / 2.0, x);
        CHECK(f_distribution_sf(c.f, c.d1, c.d2) == doctest::Approx(want).epsilon(1e-8));
    }
    CHECK(f_distribution_sf(0.0, 3, 9) == doctest::Approx(1.0));
    CHECK(f_distribution_sf(std::numeric_limits<double>::infinity(), 3, 9) == 0.0);
}

namespace {

GradeReport report_with_score(const Rational& score) {
    GradeReport r;
    r.final_score = score;
    r.answer_score = score;
    r.explanation_score = score;
    r.bucket = bucket_for(score);
    return r;
}

TypologyAnnotation annotation(const std::string& family, std::set<Subject> subjects,
                              ProblemType type) {
    TypologyAnnotation a;
    a.language_family = family;
    a.subjects = std::move(subjects);
    a.type = type;
    a.glottocode = "abcd1234";
    a.language = "L";
    return a;
}

}  // namespace

TEST_CASE("score distributions") {
    SUBCASE("singleton family") {
        std::vector<std::pair<GradeReport, TypologyAnnotation>> rows = {
            {report_with_score(Rational(19, 25)),
             annotation("Turkic", {Subject::Morphology}, ProblemType::Rosetta)}};
        auto out = score_distribution(rows, DistributionKey::Family);
        REQUIRE(out.size() == 1);
        CHECK(out[0].key == "Turkic");
        CHECK(out[0].n == 1);
        CHECK(out[0].mean == doctest::Approx(0.76));
    }
    SUBCASE("multi-subject reports appear in every subject group") {
        std::vector<std::pair<GradeReport, TypologyAnnotation>> rows = {
            {report_with_score(Rational(1, 2)),
             annotation("F", {Subject::Morphology, Subject::Syntax}, ProblemType::Rosetta)}};
        auto out = score_distribution(rows, DistributionKey::Subject);
        REQUIRE(out.size() == 2);
        CHECK(out[0].key == "Morphology");
        CHECK(out[1].key == "Syntax");
        CHECK(out[0].n == 1);
        CHECK(out[1].n == 1);
    }
    SUBCASE("hand-computed ten-report fixture") {
        std::vector<std::pair<GradeReport, TypologyAnnotation>> rows;
        const std::vector<double> scores_a = {0.0, 0.25, 0.5, 0.75, 1.0, 0.1};
        const std::vector<double> scores_b = {0.2, 0.4, 0.6, 0.8};
        for (double s : scores_a) {
            rows.push_back({report_with_score(Rational::parse(std::to_string(s))),
                            annotation("A", {Subject::Syntax}, ProblemType::Rosetta)});
        }
        for (double s : scores_b) {
            rows.push_back({report_with_score(Rational::parse(std::to_string(s))),
                            annotation("B", {Subject::Syntax}, ProblemType::Pattern)});
        }
        auto out = score_distribution(rows, DistributionKey::Family);
        REQUIRE(out.size() == 2);
        // group A: mean 2.6/6, median lower-middle of {0,.1,.25,.5,.75,1} = .25
        CHECK(out[0].key == "A");
        CHECK(out[0].n == 6);
        CHECK(out[0].mean == doctest::Approx(2.6 / 6.0));
        CHECK(out[0].median == doctest::Approx(0.25));
        double var_a = 0.0;
        for (double s : scores_a) var_a += (s - 2.6 / 6.0) * (s - 2.6 / 6.0);
        CHECK(out[0].stddev == doctest::Approx(std::sqrt(var_a / 6.0)));
        CHECK(out[0].bucket_counts[0] == 2);  // 0, .1
        CHECK(out[0].bucket_counts[1] == 1);  // .25
        CHECK(out[0].bucket_counts[2] == 1);  // .5
        CHECK(out[0].bucket_counts[3] == 2);  // .75, 1.0
        // group B: mean .5, median lower-middle of {.2,.4,.6,.8} = .4
        CHECK(out[1].key == "B");
        CHECK(out[1].median == doctest::Approx(0.4));

        SUBCASE("bucket counts sum to n") {
            for (const auto& summary : out) {
                int total = 0;
                for (int b : summary.bucket_counts) total += b;
                CHECK(total == summary.n);
            }
        }
        SUBCASE("concatenation adds groupwise") {
            auto doubled = rows;
            doubled.insert(doubled.end(), rows.begin(), rows.end());
            auto out2 = score_distribution(doubled, DistributionKey::Family);
            REQUIRE(out2.size() == 2);
            CHECK(out2[0].n == 2 * out[0].n);
            CHECK(out2[1].n == 2 * out[1].n);
        }
    }
    SUBCASE("type grouping uses the type label") {
        std::vector<std::pair<GradeReport, TypologyAnnotation>> rows = {
            {report_with_score(Rational(1, 4)),
             annotation("F", {Subject::Numbers}, ProblemType::Computational)}};
        auto out = score_distribution(rows, DistributionKey::Type);
        REQUIRE(out.size() == 1);
        CHECK(out[0].key == "Computational");
        CHECK(out[0].bucket_counts[1] == 1);
    }
}
