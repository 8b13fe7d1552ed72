#include "harness/cotjudge.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "harness/structured.hpp"

namespace harness {

using nlohmann::json;

std::string to_string(MetricCode code) {
    switch (code) {
        case MetricCode::SLVS_i: return "SLVS_i";
        case MetricCode::ISC: return "ISC";
        case MetricCode::HGA: return "HGA";
        case MetricCode::RIC: return "RIC";
        case MetricCode::IJC: return "IJC";
        case MetricCode::CCS: return "CCS";
        case MetricCode::SCR: return "SCR";
        case MetricCode::SLVS_iv: return "SLVS_iv";
        case MetricCode::ACR: return "ACR";
        case MetricCode::CDA: return "CDA";
        case MetricCode::ETS: return "ETS";
    }
    return "?";
}

MetricCode metric_code_from_string(const std::string& s) {
    for (MetricCode code : kAllMetricCodes) {
        if (to_string(code) == s) return code;
    }
    throw ScorecardError("unknown metric code: " + s);
}

ReasoningDimension dimension_of(MetricCode code) {
    switch (code) {
        case MetricCode::SLVS_i:
        case MetricCode::ISC:
            return ReasoningDimension::ExtractStructure;
        case MetricCode::HGA:
        case MetricCode::RIC:
        case MetricCode::IJC:
            return ReasoningDimension::HypothesisRule;
        case MetricCode::CCS:
        case MetricCode::SCR:
            return ReasoningDimension::Completeness;
        case MetricCode::SLVS_iv:
        case MetricCode::ACR:
            return ReasoningDimension::InternalLogic;
        case MetricCode::CDA:
        case MetricCode::ETS:
            return ReasoningDimension::Contradiction;
    }
    throw std::logic_error("unreachable metric code");
}

std::string to_string(ReasoningDimension d) {
    switch (d) {
        case ReasoningDimension::ExtractStructure: return "(i) Information Extraction & Structuring";
        case ReasoningDimension::HypothesisRule: return "(ii) Hypothesis Generation & Rule Induction";
        case ReasoningDimension::Completeness: return "(iii) Completeness & Coverage";
        case ReasoningDimension::InternalLogic: return "(iv) Logical Deduction & Rule Application";
        case ReasoningDimension::Contradiction: return "(v) Contradiction Handling & Self-Revision";
    }
    return "?";
}

std::string build_judge_prompt(const std::string& rubric, const std::string& gold_reasoning,
                               const std::string& target_reasoning) {
    if (rubric.empty()) throw std::invalid_argument("judge prompt: empty rubric");
    if (gold_reasoning.empty()) throw std::invalid_argument("judge prompt: empty gold reasoning");
    if (target_reasoning.empty()) throw std::invalid_argument("judge prompt: empty target reasoning");

    std::string prompt =
        "Given the evaluation rules and metrics for model reasoning of IOL problems, consider the "
        "golden reasoning reference, and evaluate the target model reasoning with the metrics of "
        "five dimensions. \n"
        "evaluation rules and metrics (5-score):\n";
    prompt += rubric;
    prompt += "\n\ngolden reasoning reference:\n";
    prompt += gold_reasoning;
    prompt += "\n\ntarget model reasoning:\n";
    prompt += target_reasoning;
    prompt +=
        "\n\nRespond with a single JSON object keyed by the metric codes "
        "SLVS_i, ISC, HGA, RIC, IJC, CCS, SCR, SLVS_iv, ACR, CDA, ETS. Each value must be an "
        "object of the form {\"score\": <integer 1-5>, \"justification\": \"<one line>\"}.";
    return prompt;
}

JudgeScorecard parse_judge_scores(const std::string& text) {
    auto outcome = parse_structured_output(text, "scorecard object");
    if (!outcome.ok || !outcome.value.is_object()) {
        throw ScorecardError("judge response is not a JSON object: " + outcome.error);
    }
    JudgeScorecard card;
    for (MetricCode code : kAllMetricCodes) {
        const std::string key = to_string(code);
        if (!outcome.value.contains(key)) {
            throw ScorecardError("scorecard is missing metric " + key);
        }
        const json& v = outcome.value.at(key);
        int score = 0;
        std::string justification;
        if (v.is_number_integer()) {
            score = v.get<int>();
        } else if (v.is_object() && v.contains("score") && v.at("score").is_number_integer()) {
            score = v.at("score").get<int>();
            justification = v.value("justification", std::string());
        } else {
            throw ScorecardError("metric " + key + " is neither an integer nor a score object");
        }
        if (score < 1 || score > 5) {
            throw ScorecardError("metric " + key + " score " + std::to_string(score) +
                                 " outside [1,5]");
        }
        card.scores[code] = score;
        card.justifications[code] = justification;
    }
    return card;
}

ScorecardAggregate aggregate_scorecards(const std::vector<JudgeScorecard>& cards) {
    if (cards.empty()) throw std::invalid_argument("aggregate_scorecards: no scorecards");
    ScorecardAggregate agg;
    for (MetricCode code : kAllMetricCodes) {
        double sum = 0.0;
        for (const auto& card : cards) sum += card.scores.at(code);
        agg.metric_means[code] = sum / double(cards.size());
    }
    std::map<ReasoningDimension, std::pair<double, int>> acc;
    for (MetricCode code : kAllMetricCodes) {
        auto& slot = acc[dimension_of(code)];
        slot.first += agg.metric_means[code];
        slot.second += 1;
    }
    double overall = 0.0;
    for (const auto& [dim, slot] : acc) {
        const double mean = slot.first / slot.second;
        agg.dimension_means[dim] = mean;
        overall += mean;
    }
    agg.overall_mean = overall / double(acc.size());
    return agg;
}

json scorecard_to_json(const JudgeScorecard& card) {
    json scores = json::object();
    json justifications = json::object();
    for (const auto& [code, score] : card.scores) scores[to_string(code)] = score;
    for (const auto& [code, text] : card.justifications) justifications[to_string(code)] = text;
    return json{{"year", card.year},
                {"number", card.number},
                {"judge_model", card.judge_model},
                {"scores", scores},
                {"justifications", justifications}};
}

JudgeScorecard scorecard_from_json(const json& j) {
    JudgeScorecard card;
    card.year = j.at("year").get<int>();
    card.number = j.at("number").get<int>();
    card.judge_model = j.at("judge_model").get<std::string>();
    for (MetricCode code : kAllMetricCodes) {
        const std::string key = to_string(code);
        if (!j.at("scores").contains(key)) throw ScorecardError("scorecard missing metric " + key);
        const int score = j.at("scores").at(key).get<int>();
        if (score < 1 || score > 5) {
            throw ScorecardError("metric " + key + " score outside [1,5]");
        }
        card.scores[code] = score;
        if (j.contains("justifications") && j.at("justifications").contains(key)) {
            card.justifications[code] = j.at("justifications").at(key).get<std::string>();
        }
    }
    return card;
}

}  // namespace harness
