#include <doctest.h>

#include <nlohmann/json.hpp>

#include "harness/cotjudge.hpp"
#include "harness/fsutil.hpp"
#include "support.hpp"

using namespace harness;

TEST_CASE("judge prompt instantiates the template sections in order") {
    const std::string rubric = read_file(testsupport::assets_dir() / "cot_rubric.md");
    const std::string prompt = build_judge_prompt(rubric, "golden steps", "model steps");

    const auto metrics_pos = prompt.find("evaluation rules and metrics (5-score):");
    const auto scoring_pos = prompt.find("scoring_:");
    const auto grr_pos = prompt.find("golden reasoning reference:");
    const auto target_pos = prompt.find("target model reasoning:");
    REQUIRE(metrics_pos != std::string::npos);
    REQUIRE(scoring_pos != std::string::npos);
    REQUIRE(grr_pos != std::string::npos);
    REQUIRE(target_pos != std::string::npos);
    CHECK(metrics_pos < scoring_pos);
    CHECK(scoring_pos < grr_pos);
    CHECK(grr_pos < target_pos);
    CHECK(prompt.rfind("Given the evaluation rules and metrics", 0) == 0);
    // the JSON answer instruction names all 11 codes
    for (MetricCode code : kAllMetricCodes) {
        CHECK(prompt.find(to_string(code)) != std::string::npos);
    }
}

TEST_CASE("judge prompt is input-agnostic and literal") {
    SUBCASE("self-evaluation: grr == target") {
        auto p = build_judge_prompt("rubric", "same text", "same text");
        CHECK(p.find("golden reasoning reference:\nsame text") != std::string::npos);
        CHECK(p.find("target model reasoning:\nsame text") != std::string::npos);
    }
    SUBCASE("braces pass through verbatim") {
        auto p = build_judge_prompt("rubric with {curly} and {{double}}", "g", "t");
        CHECK(p.find("rubric with {curly} and {{double}}") != std::string::npos);
    }
    SUBCASE("empty inputs are rejected") {
        CHECK_THROWS_AS(build_judge_prompt("", "g", "t"), std::invalid_argument);
        CHECK_THROWS_AS(build_judge_prompt("r", "", "t"), std::invalid_argument);
        CHECK_THROWS_AS(build_judge_prompt("r", "g", ""), std::invalid_argument);
    }
}

namespace {

// The published example scorecard (score column of the worked example).
const char* kExampleScorecardJson = R"({
  "SLVS_i": 2, "ISC": 2, "HGA": 1, "RIC": 1, "IJC": 2,
  "CCS": 2, "SCR": 1, "SLVS_iv": 1, "ACR": 1, "CDA": 1, "ETS": 1
})";

}  // namespace

TEST_CASE("parsing the example scorecard") {
    auto card = parse_judge_scores(kExampleScorecardJson);
    CHECK(card.scores.at(MetricCode::SLVS_i) == 2);
    CHECK(card.scores.at(MetricCode::ISC) == 2);
    CHECK(card.scores.at(MetricCode::HGA) == 1);
    CHECK(card.scores.at(MetricCode::RIC) == 1);
    CHECK(card.scores.at(MetricCode::IJC) == 2);
    CHECK(card.scores.at(MetricCode::CCS) == 2);
    CHECK(card.scores.at(MetricCode::SCR) == 1);
    CHECK(card.scores.at(MetricCode::SLVS_iv) == 1);
    CHECK(card.scores.at(MetricCode::ACR) == 1);
    CHECK(card.scores.at(MetricCode::CDA) == 1);
    CHECK(card.scores.at(MetricCode::ETS) == 1);
}

TEST_CASE("scorecard validation") {
    SUBCASE("score object form with justifications") {
        auto card = parse_judge_scores(
            R"({"SLVS_i": {"score": 3, "justification": "ok"}, "ISC": 3, "HGA": 3, "RIC": 3,
                "IJC": 3, "CCS": 3, "SCR": 3, "SLVS_iv": 3, "ACR": 3, "CDA": 3, "ETS": 3})");
        CHECK(card.scores.at(MetricCode::SLVS_i) == 3);
        CHECK(card.justifications.at(MetricCode::SLVS_i) == "ok");
    }
    SUBCASE("out-of-range score is rejected") {
        CHECK_THROWS_AS(parse_judge_scores(
                            R"({"SLVS_i": 6, "ISC": 2, "HGA": 1, "RIC": 1, "IJC": 2, "CCS": 2,
                                "SCR": 1, "SLVS_iv": 1, "ACR": 1, "CDA": 1, "ETS": 1})"),
                        ScorecardError);
        CHECK_THROWS_AS(parse_judge_scores(
                            R"({"SLVS_i": 0, "ISC": 2, "HGA": 1, "RIC": 1, "IJC": 2, "CCS": 2,
                                "SCR": 1, "SLVS_iv": 1, "ACR": 1, "CDA": 1, "ETS": 1})"),
                        ScorecardError);
    }
    SUBCASE("a missing metric is named in the error") {
        try {
            parse_judge_scores(R"({"SLVS_i": 2, "ISC": 2, "HGA": 1, "RIC": 1, "IJC": 2, "CCS": 2,
                                   "SCR": 1, "SLVS_iv": 1, "ACR": 1, "CDA": 1})");
            FAIL("expected ScorecardError");
        } catch (const ScorecardError& e) {
            CHECK(std::string(e.what()).find("ETS") != std::string::npos);
        }
    }
    SUBCASE("non-json judge output is rejected") {
        CHECK_THROWS_AS(parse_judge_scores("the reasoning was poor overall"), ScorecardError);
    }
}

TEST_CASE("aggregation") {
    auto full_card = [](int score) {
        JudgeScorecard card;
        for (MetricCode code : kAllMetricCodes) card.scores[code] = score;
        return card;
    };
    SUBCASE("single all-fives card") {
        auto agg = aggregate_scorecards({full_card(5)});
        for (const auto& [code, mean] : agg.metric_means) CHECK(mean == doctest::Approx(5.0));
        for (const auto& [dim, mean] : agg.dimension_means) CHECK(mean == doctest::Approx(5.0));
        CHECK(agg.overall_mean == doctest::Approx(5.0));
    }
    SUBCASE("two cards of 1 and 5 average to 3") {
        auto agg = aggregate_scorecards({full_card(1), full_card(5)});
        CHECK(agg.overall_mean == doctest::Approx(3.0));
        CHECK(agg.dimension_means.at(ReasoningDimension::Completeness) == doctest::Approx(3.0));
    }
    SUBCASE("example card dimension means") {
        auto card = parse_judge_scores(kExampleScorecardJson);
        auto agg = aggregate_scorecards({card});
        CHECK(agg.dimension_means.at(ReasoningDimension::ExtractStructure) ==
              doctest::Approx(2.0).epsilon(1e-12));
        CHECK(agg.dimension_means.at(ReasoningDimension::HypothesisRule) ==
              doctest::Approx(4.0 / 3.0).epsilon(1e-12));
        CHECK(agg.dimension_means.at(ReasoningDimension::Completeness) ==
              doctest::Approx(1.5).epsilon(1e-12));
        CHECK(agg.dimension_means.at(ReasoningDimension::InternalLogic) ==
              doctest::Approx(1.0).epsilon(1e-12));
        CHECK(agg.dimension_means.at(ReasoningDimension::Contradiction) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("permutation invariance") {
        auto a = parse_judge_scores(kExampleScorecardJson);
        auto b = full_card(4);
        auto c = full_card(2);
        auto agg1 = aggregate_scorecards({a, b, c});
        auto agg2 = aggregate_scorecards({c, a, b});
        CHECK(agg1.overall_mean == doctest::Approx(agg2.overall_mean).epsilon(1e-12));
        for (MetricCode code : kAllMetricCodes) {
            CHECK(agg1.metric_means.at(code) ==
                  doctest::Approx(agg2.metric_means.at(code)).epsilon(1e-12));
        }
    }
    SUBCASE("empty input is rejected") {
        CHECK_THROWS_AS(aggregate_scorecards({}), std::invalid_argument);
    }
}

TEST_CASE("scorecard serialization round trip") {
    auto card = parse_judge_scores(kExampleScorecardJson);
    card.judge_model = "stub:judge";
    card.year = 2004;
    card.number = 2;
    auto j = scorecard_to_json(card);
    auto parsed = scorecard_from_json(j);
    CHECK(scorecard_to_json(parsed) == j);
    CHECK(parsed.scores == card.scores);
    CHECK(parsed.year == 2004);
}

TEST_CASE("dual slvs instances stay distinct") {
    CHECK(dimension_of(MetricCode::SLVS_i) == ReasoningDimension::ExtractStructure);
    CHECK(dimension_of(MetricCode::SLVS_iv) == ReasoningDimension::InternalLogic);
    CHECK(to_string(MetricCode::SLVS_i) != to_string(MetricCode::SLVS_iv));
    CHECK(kAllMetricCodes.size() == 11);
}
