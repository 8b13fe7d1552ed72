#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace harness {

/// Raised on any benchmark-file schema or invariant violation; the message
/// names the file, the problem and the offending field.
class LoadError : public std::runtime_error {
public:
    explicit LoadError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Subject {
    Compounding,
    Morphology,
    Numbers,
    PhonologyPhonetics,
    Semantics,
    Syntax,
    WritingSystem,
    Others,
};

enum class ProblemType { Rosetta, MatchUp, Monolingual, Pattern, Computational, Text };

enum class Theme {
    Classical,
    Comparative,
    Encrypted,
    Kinship,
    Maps,
    Mystery,
    MFL,
    SensesAndFeelings,
    Stories,
    Poetry,
    NoTheme,
};

std::string to_string(Subject s);
std::string to_string(ProblemType t);
std::string to_string(Theme t);
Subject subject_from_string(const std::string& s);
ProblemType problem_type_from_string(const std::string& s);
Theme theme_from_string(const std::string& s);

bool is_valid_glottocode(const std::string& code);

struct TypologyAnnotation {
    std::set<Subject> subjects;
    ProblemType type = ProblemType::Rosetta;
    std::set<Theme> themes;
    std::string language;
    std::string language_family;
    std::string glottocode;
    std::int64_t speakers = 0;
};

enum class AnswerMode { Exact, Fuzzy, Select };

/// Sentinel for an unbounded select cardinality ("inf" in the tag).
inline constexpr std::int64_t kUnbounded = -1;

struct AnswerSpec {
    AnswerMode mode = AnswerMode::Exact;
    std::vector<std::string> references;
    // Select only.
    std::int64_t select_len = 0;
    std::int64_t select_min = 0;
    std::int64_t select_max = 0;

    static bool bound_leq(std::int64_t a, std::int64_t b) {
        if (b == kUnbounded) return true;
        if (a == kUnbounded) return false;
        return a <= b;
    }
};

struct SubProblem {
    std::string id;
    std::string task_text;
    std::vector<AnswerSpec> answer_specs;
};

struct Problem {
    int year = 0;
    int number = 0;
    std::string statement;
    std::vector<SubProblem> sub_problems;
    std::vector<std::string> rule_checklist;
    std::string gold_reasoning;
    std::optional<std::string> official_solution;
    TypologyAnnotation annotation;

    std::string ref() const { return std::to_string(year) + "-" + std::to_string(number); }
};

/// Parses a grading tag: absent -> Exact, "<fuzzy>" -> Fuzzy,
/// "<selectN, MIN, MAX>" -> Select (whitespace after commas optional,
/// "inf" for an unbounded side). Throws LoadError on anything else.
AnswerSpec parse_answer_tag(const std::optional<std::string>& raw_tag);

nlohmann::json problem_to_json(const Problem& p);
Problem problem_from_json(const nlohmann::json& j, const std::string& origin);

/// Loads a problem-set directory (one JSON file per problem) or a single
/// file; validates every invariant; result sorted by (year, number).
std::vector<Problem> parse_problem_set(const std::filesystem::path& path);

struct GlottologMapping {
    struct Entry {
        std::string glottocode;
        std::optional<int> resource_class;  // 0..5
    };
    std::map<std::string, Entry> by_iso;

    static GlottologMapping load_csv(const std::filesystem::path& path);
};

/// Resource class 0..5 for an ISO 639-3 code, or absent when the language
/// is missing from the table or carries no class (reported as "---").
std::optional<int> resolve_resource_class(const std::string& iso639_3,
                                          const GlottologMapping& mapping);

}  // namespace harness
