#include <doctest.h>

#include <random>

#include "harness/chrf.hpp"
#include "harness/text.hpp"
#include "oracles.hpp"

using namespace harness;

TEST_CASE("chrf identity and disjoint extremes are exact") {
    ChrfParams p;
    CHECK(chrf("abc", "abc", p) == 100.0);
    CHECK(chrf("a", "a", p) == 100.0);
    CHECK(chrf("cat sat", "cat sat", p) == 100.0);
    CHECK(chrf("abc", "xyz", p) == 0.0);
    CHECK(chrf("aa", "zz", p) == 0.0);
}

TEST_CASE("chrf edge handling") {
    ChrfParams p;
    CHECK_THROWS_AS(chrf("x", "", p), std::invalid_argument);
    CHECK(chrf("", "abc", p) == 0.0);
    CHECK(chrf("   ", "abc", p) == 0.0);  // whitespace-only hypothesis has no n-grams
}

TEST_CASE("frozen hand fixture: cat sat vs cat mat") {
    // computed by enumerating every n-gram by hand before the build:
    // P = R = (5/6 + 3/5 + 1/4)/6 = 101/360; F = P; score = 10100/360
    ChrfParams p;
    const double expected = 10100.0 / 360.0;
    CHECK(chrf("cat sat", "cat mat", p) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(oracles::chrf_oracle("cat sat", "cat mat", 6, 2.0) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("whitespace stripping invariance") {
    ChrfParams p;
    const double a = chrf("cat mat", "cat hat", p);
    CHECK(chrf("  cat mat ", "cat\that\n", p) == doctest::Approx(a).epsilon(1e-12));
    CHECK(chrf("c a t m a t", "cathat", p) == doctest::Approx(a).epsilon(1e-12));
}

namespace {

std::string random_string(std::mt19937& rng, int max_len) {
    // mixes ascii, spaces, a combining mark and some multibyte letters
    static const std::vector<std::string> alphabet = {
        "a", "b", "c", "d", " ", "é", "é", "中", "ш", " ", "t"};
    std::uniform_int_distribution<int> len(0, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    std::string out;
    for (int i = len(rng); i > 0; --i) out += alphabet[pick(rng)];
    return out;
}

}  // namespace

TEST_CASE("oracle equivalence on random unicode pairs") {
    ChrfParams p;
    std::mt19937 rng(42);
    int compared = 0;
    while (compared < 60) {
        std::string hyp = random_string(rng, 40);
        std::string ref = random_string(rng, 40);
        if (ref.empty()) continue;
        const double got = chrf(hyp, ref, p);
        const double want = oracles::chrf_oracle(hyp, ref, p.char_order, p.beta);
        CHECK_MESSAGE(got == doctest::Approx(want).epsilon(1e-9),
                      "hyp=" << hyp << " ref=" << ref);
        CHECK(got >= 0.0);
        CHECK(got <= 100.0 + 1e-9);
        ++compared;
    }
}

TEST_CASE("corpus mean with missing-output accounting") {
    ChrfParams p;
    SUBCASE("identical pairs mean 100") {
        auto r = corpus_chrf({{"abc", "abc"}, {"xy", "xy"}}, p, true);
        CHECK(r.mean_score == doctest::Approx(100.0));
        CHECK(r.n_missing == 0);
        CHECK(r.n_scored == 2);
    }
    SUBCASE("one empty hypothesis is excluded when skip_empty") {
        auto r = corpus_chrf({{"abc", "abc"}, {"", "abc"}, {"xy", "xy"}}, p, true);
        CHECK(r.mean_score == doctest::Approx(100.0));
        CHECK(r.n_missing == 1);
        CHECK(r.n_scored == 2);
    }
    SUBCASE("empty hypotheses pull the mean down when not skipped") {
        auto r = corpus_chrf({{"abc", "abc"}, {"", "abc"}}, p, false);
        CHECK(r.mean_score == doctest::Approx(50.0));
        CHECK(r.n_missing == 1);
        CHECK(r.n_scored == 2);
    }
    SUBCASE("ten-pair fixture equals the averaged oracle") {
        std::mt19937 rng(7);
        std::vector<std::pair<std::string, std::string>> pairs;
        double oracle_sum = 0.0;
        for (int i = 0; i < 10; ++i) {
            std::string hyp = random_string(rng, 25);
            std::string ref;
            while (ref.empty()) ref = random_string(rng, 25);
            pairs.emplace_back(hyp, ref);
        }
        int scored = 0;
        for (auto& [hyp, ref] : pairs) {
            if (!harness::trim(hyp).empty()) {
                oracle_sum += oracles::chrf_oracle(hyp, ref, p.char_order, p.beta);
                ++scored;
            }
        }
        auto r = corpus_chrf(pairs, p, true);
        CHECK(r.n_scored == scored);
        CHECK(r.mean_score == doctest::Approx(oracle_sum / scored).epsilon(1e-9));
    }
}
