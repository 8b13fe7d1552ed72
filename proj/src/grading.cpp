#include "harness/grading.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "harness/structured.hpp"

namespace harness {

using nlohmann::json;

void GradingConfig::validate() const {
    if (w_answer + w_explanation != Rational(1, 1)) {
        throw std::invalid_argument("grading weights must sum to 1, got " +
                                    w_answer.to_fraction_string() + " + " +
                                    w_explanation.to_fraction_string());
    }
}

Bucket bucket_for(const Rational& s) {
    if (s < Rational(1, 4)) return Bucket::B1;
    if (s < Rational(1, 2)) return Bucket::B2;
    if (s < Rational(3, 4)) return Bucket::B3;
    return Bucket::B4;
}

std::string to_string(Bucket b) {
    switch (b) {
        case Bucket::B1: return "B1";
        case Bucket::B2: return "B2";
        case Bucket::B3: return "B3";
        case Bucket::B4: return "B4";
    }
    return "?";
}

Bucket bucket_from_string(const std::string& s) {
    if (s == "B1") return Bucket::B1;
    if (s == "B2") return Bucket::B2;
    if (s == "B3") return Bucket::B3;
    if (s == "B4") return Bucket::B4;
    throw std::invalid_argument("unknown bucket: " + s);
}

Rational grade_exact(const std::vector<std::string>& outputs, const AnswerSpec& spec,
                     const GradingConfig& cfg, bool& cardinality_violation) {
    cardinality_violation = outputs.size() != 1;
    if (cardinality_violation) return Rational(0, 1);
    const std::string got = normalize_text(outputs[0], cfg.normalization);
    for (const auto& ref : spec.references) {
        if (got == normalize_text(ref, cfg.normalization)) return Rational(1, 1);
    }
    return Rational(0, 1);
}

SelectResult grade_select(const std::vector<std::string>& outputs, const AnswerSpec& spec,
                          const GradingConfig& cfg) {
    SelectResult result;
    std::set<std::string> got;
    for (const auto& o : outputs) got.insert(normalize_text(o, cfg.normalization));
    std::set<std::string> want;
    for (const auto& r : spec.references) want.insert(normalize_text(r, cfg.normalization));

    std::int64_t inter = 0;
    for (const auto& g : got) {
        if (want.count(g)) ++inter;
    }
    std::int64_t uni = static_cast<std::int64_t>(got.size() + want.size()) - inter;
    result.credit = uni == 0 ? Rational(0, 1) : Rational(inter, uni);

    auto n = static_cast<std::int64_t>(outputs.size());
    bool above_min = AnswerSpec::bound_leq(spec.select_min, n);
    bool below_max = AnswerSpec::bound_leq(n, spec.select_max);
    result.cardinality_violation = !(above_min && below_max);
    return result;
}

const char* const kFuzzyJudgePromptPrefix = "You are grading a linguistics answer by meaning.";

std::string fuzzy_judge_prompt(const std::string& reference, const std::string& candidate) {
    return std::string(kFuzzyJudgePromptPrefix) + " Reference: " + reference +
           "\nCandidate: " + candidate + "\nAnswer exactly YES or NO.";
}

namespace {

// YES/NO extraction: first token of the trimmed response, case-insensitive.
std::optional<bool> parse_yes_no(const std::string& text) {
    std::string t = trim(text);
    std::string head;
    for (char c : t) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            head.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        } else {
            break;
        }
    }
    if (head == "YES") return true;
    if (head == "NO") return false;
    return std::nullopt;
}

float dot(const std::vector<float>& a, const std::vector<float>& b) {
    float s = 0.f;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

FuzzyResult grade_fuzzy(const std::string& output, const AnswerSpec& spec,
                        const GradingConfig& cfg, const JudgeFn* judge, const EmbedFn* embed) {
    FuzzyResult result;
    result.credit = Rational(0, 1);

    // Semantic identity is a superset of string identity.
    const std::string got = normalize_text(output, cfg.normalization);
    for (const auto& ref : spec.references) {
        if (got == normalize_text(ref, cfg.normalization)) {
            result.credit = Rational(1, 1);
            return result;
        }
    }

    switch (cfg.fuzzy_backend) {
        case FuzzyBackend::AlwaysZero:
            return result;
        case FuzzyBackend::JudgeLLM: {
            if (!judge) {
                result.judge_failed = true;
                return result;
            }
            for (const auto& ref : spec.references) {
                std::string reply;
                try {
                    reply = (*judge)(fuzzy_judge_prompt(ref, output));
                } catch (const std::exception&) {
                    result.judge_failed = true;
                    return result;
                }
                auto verdict = parse_yes_no(reply);
                if (!verdict) {
                    result.judge_failed = true;
                    return result;
                }
                if (*verdict) {
                    result.credit = Rational(1, 1);
                    return result;
                }
            }
            return result;
        }
        case FuzzyBackend::EmbeddingThreshold: {
            if (!embed) {
                result.judge_failed = true;
                return result;
            }
            try {
                auto got_vec = (*embed)(output);
                for (const auto& ref : spec.references) {
                    if (dot(got_vec, (*embed)(ref)) >= cfg.embedding_threshold) {
                        result.credit = Rational(1, 1);
                        return result;
                    }
                }
            } catch (const std::exception&) {
                result.judge_failed = true;
            }
            return result;
        }
    }
    return result;
}

std::string checklist_judge_prompt(const std::string& explanation,
                                   const std::vector<std::string>& checklist) {
    std::string prompt =
        "You are comparing a model's generated explanation against our rule checklist. "
        "For each rule, decide whether the explanation correctly describes it.\nRules:\n";
    for (std::size_t i = 0; i < checklist.size(); ++i) {
        prompt += std::to_string(i + 1) + ". " + checklist[i] + "\n";
    }
    prompt += "Explanation:\n" + explanation +
              "\nRespond with a JSON array of booleans, one per rule, in order.";
    return prompt;
}

namespace {

std::optional<std::vector<bool>> parse_bool_vector(const std::string& text, std::size_t expected) {
    auto outcome = parse_structured_output(text, "JSON array of booleans");
    if (!outcome.ok || !outcome.value.is_array()) return std::nullopt;
    std::vector<bool> out;
    for (const auto& v : outcome.value) {
        if (v.is_boolean()) {
            out.push_back(v.get<bool>());
        } else if (v.is_number_integer()) {
            auto n = v.get<std::int64_t>();
            if (n != 0 && n != 1) return std::nullopt;
            out.push_back(n == 1);
        } else {
            return std::nullopt;
        }
    }
    if (out.size() != expected) return std::nullopt;
    return out;
}

}  // namespace

ChecklistResult grade_rule_checklist(const std::string& explanation,
                                     const std::vector<std::string>& checklist,
                                     const JudgeFn& judge) {
    ChecklistResult result;
    result.total = static_cast<int>(checklist.size());
    result.per_rule.assign(checklist.size(), false);
    if (checklist.empty()) return result;
    if (trim(explanation).empty()) return result;  // nothing to match, no judge call

    const std::string prompt = checklist_judge_prompt(explanation, checklist);
    const std::string reminder =
        "\n\nReminder: respond with only a JSON array of " + std::to_string(checklist.size()) +
        " booleans, one per rule, in order.";
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string reply;
        try {
            reply = judge(attempt == 0 ? prompt : prompt + reminder);
        } catch (const std::exception&) {
            result.judge_failed = true;
            return result;
        }
        if (auto per_rule = parse_bool_vector(reply, checklist.size())) {
            result.per_rule = *per_rule;
            result.matched = static_cast<int>(std::count(per_rule->begin(), per_rule->end(), true));
            return result;
        }
    }
    result.judge_failed = true;
    return result;
}

GradeReport compose_final_score(const std::vector<SubVerdict>& verdicts,
                                const ChecklistResult& checklist, const GradingConfig& cfg) {
    cfg.validate();
    if (verdicts.empty()) throw std::invalid_argument("no graded sub-answers");

    GradeReport report;
    report.per_sub = verdicts;
    Rational sum(0, 1);
    for (const auto& v : verdicts) sum = sum + v.credit;
    report.answer_score = sum / Rational::from_int(static_cast<std::int64_t>(verdicts.size()));

    report.rules_matched = checklist.matched;
    report.rules_total = checklist.total;
    report.rules_per_rule = checklist.per_rule;
    report.checklist_judge_failed = checklist.judge_failed;
    report.explanation_score =
        checklist.total > 0 ? Rational(checklist.matched, checklist.total) : Rational(0, 1);

    report.final_score =
        cfg.w_answer * report.answer_score + cfg.w_explanation * report.explanation_score;
    report.bucket = bucket_for(report.final_score);
    return report;
}

GradeReport grade_attempt(const SolutionAttempt& attempt, const Problem& problem,
                          const GradingConfig& cfg, const JudgeFn* judge, const EmbedFn* embed) {
    if (!attempt.format_ok) {
        throw std::invalid_argument("format-noncompliant attempt cannot be graded");
    }
    std::vector<SubVerdict> verdicts;
    static const std::vector<std::string> kNoOutputs;
    for (const auto& sub : problem.sub_problems) {
        auto it = attempt.sub_answers.find(sub.id);
        const std::vector<std::string>& outputs = it == attempt.sub_answers.end() ? kNoOutputs
                                                                                  : it->second;
        const bool single_spec = sub.answer_specs.size() == 1;
        for (std::size_t slot = 0; slot < sub.answer_specs.size(); ++slot) {
            const AnswerSpec& spec = sub.answer_specs[slot];
            // Single-spec sub-problems consume the whole output list;
            // multi-spec sub-problems pair outputs to specs by position.
            std::vector<std::string> slot_outputs;
            if (single_spec) {
                slot_outputs = outputs;
            } else if (slot < outputs.size()) {
                slot_outputs = {outputs[slot]};
            }
            SubVerdict verdict;
            verdict.key = single_spec ? sub.id : sub.id + "/" + std::to_string(slot + 1);
            verdict.mode = spec.mode;
            switch (spec.mode) {
                case AnswerMode::Exact:
                    verdict.credit =
                        grade_exact(slot_outputs, spec, cfg, verdict.cardinality_violation);
                    break;
                case AnswerMode::Select: {
                    auto r = grade_select(slot_outputs, spec, cfg);
                    verdict.credit = r.credit;
                    verdict.cardinality_violation = r.cardinality_violation;
                    break;
                }
                case AnswerMode::Fuzzy: {
                    if (slot_outputs.size() != 1) {
                        verdict.credit = Rational(0, 1);
                        verdict.cardinality_violation = true;
                        break;
                    }
                    auto r = grade_fuzzy(slot_outputs[0], spec, cfg, judge, embed);
                    verdict.credit = r.credit;
                    verdict.judge_failed = r.judge_failed;
                    break;
                }
            }
            verdicts.push_back(std::move(verdict));
        }
    }

    ChecklistResult checklist;
    if (judge) {
        checklist = grade_rule_checklist(attempt.explanation, problem.rule_checklist, *judge);
    } else {
        checklist.total = static_cast<int>(problem.rule_checklist.size());
        checklist.per_rule.assign(problem.rule_checklist.size(), false);
        if (checklist.total > 0 && !trim(attempt.explanation).empty()) {
            checklist.judge_failed = true;  // grading requested without a judge
        }
    }
    return compose_final_score(verdicts, checklist, cfg);
}

namespace {

json rational_json(const Rational& r) {
    return json{{"num", r.num()}, {"den", r.den()}, {"decimal", r.to_decimal_string(6)}};
}

Rational rational_from_json(const json& j) {
    return Rational(j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>());
}

std::string mode_name(AnswerMode m) {
    switch (m) {
        case AnswerMode::Exact: return "exact";
        case AnswerMode::Fuzzy: return "fuzzy";
        case AnswerMode::Select: return "select";
    }
    return "?";
}

AnswerMode mode_from_name(const std::string& s) {
    if (s == "exact") return AnswerMode::Exact;
    if (s == "fuzzy") return AnswerMode::Fuzzy;
    if (s == "select") return AnswerMode::Select;
    throw std::invalid_argument("unknown answer mode: " + s);
}

}  // namespace

json grade_report_to_json(const GradeReport& report) {
    json per_sub = json::object();
    json order = json::array();
    for (const auto& v : report.per_sub) {
        per_sub[v.key] = json{{"mode", mode_name(v.mode)},
                              {"credit", rational_json(v.credit)},
                              {"cardinality_violation", v.cardinality_violation},
                              {"judge_failed", v.judge_failed}};
        order.push_back(v.key);
    }
    return json{{"answer_score", rational_json(report.answer_score)},
                {"explanation_score", rational_json(report.explanation_score)},
                {"final_score", rational_json(report.final_score)},
                {"per_sub", per_sub},
                {"per_sub_order", order},
                {"rules_matched", report.rules_matched},
                {"rules_total", report.rules_total},
                {"rules_per_rule", report.rules_per_rule},
                {"checklist_judge_failed", report.checklist_judge_failed},
                {"bucket", to_string(report.bucket)}};
}

GradeReport grade_report_from_json(const json& j) {
    GradeReport report;
    report.answer_score = rational_from_json(j.at("answer_score"));
    report.explanation_score = rational_from_json(j.at("explanation_score"));
    report.final_score = rational_from_json(j.at("final_score"));
    for (const auto& key : j.at("per_sub_order")) {
        const auto& vj = j.at("per_sub").at(key.get<std::string>());
        SubVerdict v;
        v.key = key.get<std::string>();
        v.mode = mode_from_name(vj.at("mode").get<std::string>());
        v.credit = rational_from_json(vj.at("credit"));
        v.cardinality_violation = vj.at("cardinality_violation").get<bool>();
        v.judge_failed = vj.at("judge_failed").get<bool>();
        report.per_sub.push_back(std::move(v));
    }
    report.rules_matched = j.at("rules_matched").get<int>();
    report.rules_total = j.at("rules_total").get<int>();
    report.rules_per_rule = j.at("rules_per_rule").get<std::vector<bool>>();
    report.checklist_judge_failed = j.at("checklist_judge_failed").get<bool>();
    report.bucket = bucket_from_string(j.at("bucket").get<std::string>());
    return report;
}

}  // namespace harness
