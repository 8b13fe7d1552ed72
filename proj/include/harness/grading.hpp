#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "harness/problem.hpp"
#include "harness/rational.hpp"
#include "harness/text.hpp"

namespace harness {

/// One blocking round trip to a judge model; implementations throw on
/// transport failure. Kept as a function so tests can inject transcripts.
using JudgeFn = std::function<std::string(const std::string& prompt)>;

/// Embeds one text into a unit vector (fuzzy EmbeddingThreshold backend).
using EmbedFn = std::function<std::vector<float>(const std::string& text)>;

enum class FuzzyBackend { JudgeLLM, EmbeddingThreshold, AlwaysZero };

struct GradingConfig {
    Rational w_answer{1, 2};
    Rational w_explanation{1, 2};
    NormalizationFlags normalization;
    FuzzyBackend fuzzy_backend = FuzzyBackend::JudgeLLM;
    double embedding_threshold = 0.85;

    void validate() const;  // w_answer + w_explanation must equal 1
};

struct SolutionAttempt {
    int year = 0;
    int number = 0;
    std::map<std::string, std::vector<std::string>> sub_answers;
    std::string explanation;
    std::string raw_output;
    bool format_ok = true;
};

enum class Bucket { B1, B2, B3, B4 };

/// Half-open score buckets [0,.25) [.25,.5) [.5,.75) and closed [.75,1].
Bucket bucket_for(const Rational& final_score);
std::string to_string(Bucket b);
Bucket bucket_from_string(const std::string& s);

struct SubVerdict {
    std::string key;  // sub-problem id, or "<id>/<slot>" for multi-answer sub-problems
    AnswerMode mode = AnswerMode::Exact;
    Rational credit;
    bool cardinality_violation = false;
    bool judge_failed = false;
};

struct ChecklistResult {
    int matched = 0;
    int total = 0;
    std::vector<bool> per_rule;
    bool judge_failed = false;
};

struct GradeReport {
    Rational answer_score;
    Rational explanation_score;
    Rational final_score;
    std::vector<SubVerdict> per_sub;
    int rules_matched = 0;
    int rules_total = 0;
    std::vector<bool> rules_per_rule;
    bool checklist_judge_failed = false;
    Bucket bucket = Bucket::B1;
};

/// Exact match against any reference; outputs must be a single string,
/// anything else scores 0 with the violation flag set.
Rational grade_exact(const std::vector<std::string>& outputs, const AnswerSpec& spec,
                     const GradingConfig& cfg, bool& cardinality_violation);

struct SelectResult {
    Rational credit;
    bool cardinality_violation = false;
};

/// Jaccard overlap of the normalized, deduplicated output and reference
/// sets. A cardinality violation is flagged from the raw output count but
/// does not zero the credit.
SelectResult grade_select(const std::vector<std::string>& outputs, const AnswerSpec& spec,
                          const GradingConfig& cfg);

struct FuzzyResult {
    Rational credit;
    bool judge_failed = false;
};

/// Meaning-based grading with a verbatim short-circuit. judge/embed may be
/// null for backends that do not need them; a judge failure scores 0 and
/// is recorded.
FuzzyResult grade_fuzzy(const std::string& output, const AnswerSpec& spec,
                        const GradingConfig& cfg, const JudgeFn* judge, const EmbedFn* embed);

extern const char* const kFuzzyJudgePromptPrefix;

std::string fuzzy_judge_prompt(const std::string& reference, const std::string& candidate);
std::string checklist_judge_prompt(const std::string& explanation,
                                   const std::vector<std::string>& checklist);

/// One judge call returning a boolean per rule; empty explanations
/// short-circuit to zero matches without calling the judge. An
/// unparseable response is retried once with a format reminder; a second
/// failure yields zero matches with judge_failed set.
ChecklistResult grade_rule_checklist(const std::string& explanation,
                                     const std::vector<std::string>& checklist,
                                     const JudgeFn& judge);

/// final = w_answer * mean(credits) + w_explanation * matched/total, all
/// in exact rational arithmetic.
GradeReport compose_final_score(const std::vector<SubVerdict>& verdicts,
                                const ChecklistResult& checklist, const GradingConfig& cfg);

/// Grades a format-conforming attempt end to end.
GradeReport grade_attempt(const SolutionAttempt& attempt, const Problem& problem,
                          const GradingConfig& cfg, const JudgeFn* judge, const EmbedFn* embed);

nlohmann::json grade_report_to_json(const GradeReport& report);
GradeReport grade_report_from_json(const nlohmann::json& j);

}  // namespace harness
