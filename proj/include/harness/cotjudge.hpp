#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace harness {

/// The eleven reasoning metrics; SLVS appears twice, once aligned against
/// the gold reasoning reference (dimension I) and once model-internal
/// (dimension IV).
enum class MetricCode {
    SLVS_i,
    ISC,
    HGA,
    RIC,
    IJC,
    CCS,
    SCR,
    SLVS_iv,
    ACR,
    CDA,
    ETS,
};

enum class ReasoningDimension {
    ExtractStructure,   // (i)
    HypothesisRule,     // (ii)
    Completeness,       // (iii)
    InternalLogic,      // (iv)
    Contradiction,      // (v)
};

inline constexpr std::array<MetricCode, 11> kAllMetricCodes = {
    MetricCode::SLVS_i, MetricCode::ISC, MetricCode::HGA,     MetricCode::RIC,
    MetricCode::IJC,    MetricCode::CCS, MetricCode::SCR,     MetricCode::SLVS_iv,
    MetricCode::ACR,    MetricCode::CDA, MetricCode::ETS};

std::string to_string(MetricCode code);
MetricCode metric_code_from_string(const std::string& s);
ReasoningDimension dimension_of(MetricCode code);
std::string to_string(ReasoningDimension d);

struct JudgeScorecard {
    std::map<MetricCode, int> scores;          // all 11 present, each in [1,5]
    std::map<MetricCode, std::string> justifications;
    std::string judge_model;
    int year = 0;
    int number = 0;
};

class ScorecardError : public std::runtime_error {
public:
    explicit ScorecardError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Instantiates the reasoning-evaluation template: rubric (metric list and
/// scoring table), golden reasoning reference, target reasoning, then an
/// instruction to answer as a JSON object keyed by the 11 metric codes.
/// Inputs are substituted literally. Empty inputs are rejected.
std::string build_judge_prompt(const std::string& rubric, const std::string& gold_reasoning,
                               const std::string& target_reasoning);

/// Parses a judge response into a scorecard; missing metrics or scores
/// outside [1,5] raise ScorecardError (the caller may re-prompt once).
JudgeScorecard parse_judge_scores(const std::string& text);

struct ScorecardAggregate {
    std::map<MetricCode, double> metric_means;
    std::map<ReasoningDimension, double> dimension_means;
    double overall_mean = 0.0;  // unweighted mean of the five dimensions
};

ScorecardAggregate aggregate_scorecards(const std::vector<JudgeScorecard>& cards);

nlohmann::json scorecard_to_json(const JudgeScorecard& card);
JudgeScorecard scorecard_from_json(const nlohmann::json& j);

}  // namespace harness
