#include "harness/problem.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <nlohmann/json.hpp>

#include "harness/csv.hpp"
#include "harness/fsutil.hpp"

namespace harness {

using nlohmann::json;

std::string to_string(Subject s) {
    switch (s) {
        case Subject::Compounding: return "Compounding";
        case Subject::Morphology: return "Morphology";
        case Subject::Numbers: return "Numbers";
        case Subject::PhonologyPhonetics: return "Phonology and Phonetics";
        case Subject::Semantics: return "Semantics";
        case Subject::Syntax: return "Syntax";
        case Subject::WritingSystem: return "Writing System";
        case Subject::Others: return "Others";
    }
    return "?";
}

std::string to_string(ProblemType t) {
    switch (t) {
        case ProblemType::Rosetta: return "Rosetta";
        case ProblemType::MatchUp: return "Match-up";
        case ProblemType::Monolingual: return "Monolingual";
        case ProblemType::Pattern: return "Pattern";
        case ProblemType::Computational: return "Computational";
        case ProblemType::Text: return "Text";
    }
    return "?";
}

std::string to_string(Theme t) {
    switch (t) {
        case Theme::Classical: return "Classical";
        case Theme::Comparative: return "Comparative";
        case Theme::Encrypted: return "Encrypted";
        case Theme::Kinship: return "Kinship";
        case Theme::Maps: return "Maps";
        case Theme::Mystery: return "Mystery";
        case Theme::MFL: return "MFL";
        case Theme::SensesAndFeelings: return "Senses and Feelings";
        case Theme::Stories: return "Stories";
        case Theme::Poetry: return "Poetry";
        case Theme::NoTheme: return "No Theme";
    }
    return "?";
}

namespace {

template <typename Enum>
Enum from_string_impl(const std::string& s, std::initializer_list<Enum> all, const char* what) {
    for (Enum e : all) {
        if (to_string(e) == s) return e;
    }
    throw LoadError(std::string("unknown ") + what + ": \"" + s + "\"");
}

}  // namespace

Subject subject_from_string(const std::string& s) {
    return from_string_impl<Subject>(
        s,
        {Subject::Compounding, Subject::Morphology, Subject::Numbers, Subject::PhonologyPhonetics,
         Subject::Semantics, Subject::Syntax, Subject::WritingSystem, Subject::Others},
        "subject");
}

ProblemType problem_type_from_string(const std::string& s) {
    return from_string_impl<ProblemType>(
        s,
        {ProblemType::Rosetta, ProblemType::MatchUp, ProblemType::Monolingual, ProblemType::Pattern,
         ProblemType::Computational, ProblemType::Text},
        "problem type");
}

Theme theme_from_string(const std::string& s) {
    return from_string_impl<Theme>(
        s,
        {Theme::Classical, Theme::Comparative, Theme::Encrypted, Theme::Kinship, Theme::Maps,
         Theme::Mystery, Theme::MFL, Theme::SensesAndFeelings, Theme::Stories, Theme::Poetry,
         Theme::NoTheme},
        "theme");
}

bool is_valid_glottocode(const std::string& code) {
    if (code.size() != 8) return false;
    for (int i = 0; i < 4; ++i) {
        if (code[i] < 'a' || code[i] > 'z') return false;
    }
    for (int i = 4; i < 8; ++i) {
        if (code[i] < '0' || code[i] > '9') return false;
    }
    return true;
}

namespace {

// Accepts an integer or "inf"; whitespace already stripped by caller.
std::optional<std::int64_t> parse_bound(const std::string& tok) {
    if (tok == "inf") return kUnbounded;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
    return v;
}

std::string strip_ascii_space(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void bad_tag(const std::string& raw) {
    throw LoadError("malformed answer tag: \"" + raw + "\"");
}

}  // namespace

AnswerSpec parse_answer_tag(const std::optional<std::string>& raw_tag) {
    AnswerSpec spec;
    if (!raw_tag.has_value()) {
        spec.mode = AnswerMode::Exact;
        return spec;
    }
    const std::string raw = strip_ascii_space(*raw_tag);
    if (raw == "<fuzzy>") {
        spec.mode = AnswerMode::Fuzzy;
        return spec;
    }
    const std::string prefix = "<select";
    if (raw.size() < prefix.size() + 2 || raw.compare(0, prefix.size(), prefix) != 0 ||
        raw.back() != '>') {
        bad_tag(raw);
    }
    std::string body = raw.substr(prefix.size(), raw.size() - prefix.size() - 1);
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto comma = body.find(',', start);
        if (comma == std::string::npos) {
            parts.push_back(body.substr(start));
            break;
        }
        parts.push_back(body.substr(start, comma - start));
        start = comma + 1;
        // optional whitespace after commas only
        while (start < body.size() && (body[start] == ' ' || body[start] == '\t')) ++start;
    }
    if (parts.size() != 3) bad_tag(raw);
    auto len = parse_bound(parts[0]);
    auto lo = parse_bound(parts[1]);
    auto hi = parse_bound(parts[2]);
    if (!len || !lo || !hi) bad_tag(raw);
    if (*len == kUnbounded || *len <= 0) bad_tag(raw);
    if (*lo != kUnbounded && *lo <= 0) bad_tag(raw);
    if (*hi != kUnbounded && *hi <= 0) bad_tag(raw);
    if (!AnswerSpec::bound_leq(*lo, *hi)) {
        throw LoadError("answer tag min exceeds max: \"" + raw + "\"");
    }
    spec.mode = AnswerMode::Select;
    spec.select_len = *len;
    spec.select_min = *lo;
    spec.select_max = *hi;
    return spec;
}

namespace {

std::string tag_for_spec(const AnswerSpec& spec) {
    if (spec.mode == AnswerMode::Fuzzy) return "<fuzzy>";
    auto bound = [](std::int64_t v) {
        return v == kUnbounded ? std::string("inf") : std::to_string(v);
    };
    return "<select" + std::to_string(spec.select_len) + ", " + bound(spec.select_min) + ", " +
           bound(spec.select_max) + ">";
}

[[noreturn]] void field_error(const std::string& origin, const std::string& problem_id,
                              const std::string& field, const std::string& why) {
    throw LoadError(origin + ": problem " + (problem_id.empty() ? "?" : problem_id) + ": field '" +
                    field + "': " + why);
}

void validate_problem(const Problem& p, const std::string& origin) {
    const std::string pid = p.ref();
    if (!is_valid_glottocode(p.annotation.glottocode)) {
        field_error(origin, pid, "annotation.glottocode",
                    "\"" + p.annotation.glottocode + "\" does not match [a-z]{4}[0-9]{4}");
    }
    if (p.annotation.subjects.empty()) {
        field_error(origin, pid, "annotation.subjects", "must be nonempty");
    }
    if (p.annotation.speakers < 0) {
        field_error(origin, pid, "annotation.speakers", "must be nonnegative");
    }
    if (p.sub_problems.empty()) {
        field_error(origin, pid, "sub_problems", "must be nonempty");
    }
    std::set<std::string> ids;
    for (const auto& sub : p.sub_problems) {
        if (sub.id.empty()) field_error(origin, pid, "sub_problems.id", "must be nonempty");
        if (!ids.insert(sub.id).second) {
            field_error(origin, pid, "sub_problems.id", "duplicate id \"" + sub.id + "\"");
        }
        if (sub.answer_specs.empty()) {
            field_error(origin, pid, "sub_problems[" + sub.id + "].answers", "must be nonempty");
        }
        for (const auto& spec : sub.answer_specs) {
            if (spec.references.empty()) {
                field_error(origin, pid, "sub_problems[" + sub.id + "].answers.references",
                            "must be nonempty");
            }
            if (spec.mode == AnswerMode::Select &&
                spec.select_len != static_cast<std::int64_t>(spec.references.size())) {
                field_error(origin, pid, "sub_problems[" + sub.id + "].answers",
                            "select length " + std::to_string(spec.select_len) +
                                " does not match reference count " +
                                std::to_string(spec.references.size()));
            }
        }
    }
}

}  // namespace

json problem_to_json(const Problem& p) {
    json subs = json::array();
    for (const auto& sub : p.sub_problems) {
        json answers = json::array();
        for (const auto& spec : sub.answer_specs) {
            json a;
            if (spec.mode == AnswerMode::Exact) {
                a["tag"] = nullptr;
            } else {
                a["tag"] = tag_for_spec(spec);
            }
            a["references"] = spec.references;
            answers.push_back(a);
        }
        subs.push_back({{"id", sub.id}, {"task_text", sub.task_text}, {"answers", answers}});
    }
    json subjects = json::array();
    for (Subject s : p.annotation.subjects) subjects.push_back(to_string(s));
    json themes = json::array();
    for (Theme t : p.annotation.themes) themes.push_back(to_string(t));
    json j{{"year", p.year},
           {"number", p.number},
           {"statement", p.statement},
           {"sub_problems", subs},
           {"rule_checklist", p.rule_checklist},
           {"gold_reasoning", p.gold_reasoning},
           {"annotation",
            {{"subjects", subjects},
             {"type", to_string(p.annotation.type)},
             {"themes", themes},
             {"language", p.annotation.language},
             {"family", p.annotation.language_family},
             {"glottocode", p.annotation.glottocode},
             {"speakers", p.annotation.speakers}}}};
    if (p.official_solution) j["official_solution"] = *p.official_solution;
    return j;
}

Problem problem_from_json(const json& j, const std::string& origin) {
    Problem p;
    try {
        p.year = j.at("year").get<int>();
        p.number = j.at("number").get<int>();
        p.statement = j.at("statement").get<std::string>();
        for (const auto& sj : j.at("sub_problems")) {
            SubProblem sub;
            sub.id = sj.at("id").get<std::string>();
            sub.task_text = sj.value("task_text", std::string());
            for (const auto& aj : sj.at("answers")) {
                std::optional<std::string> tag;
                if (aj.contains("tag") && !aj.at("tag").is_null()) {
                    tag = aj.at("tag").get<std::string>();
                }
                AnswerSpec spec = parse_answer_tag(tag);
                spec.references = aj.at("references").get<std::vector<std::string>>();
                sub.answer_specs.push_back(std::move(spec));
            }
            p.sub_problems.push_back(std::move(sub));
        }
        p.rule_checklist = j.value("rule_checklist", std::vector<std::string>{});
        p.gold_reasoning = j.value("gold_reasoning", std::string());
        if (j.contains("official_solution") && !j.at("official_solution").is_null()) {
            p.official_solution = j.at("official_solution").get<std::string>();
        }
        const auto& an = j.at("annotation");
        for (const auto& s : an.at("subjects")) {
            p.annotation.subjects.insert(subject_from_string(s.get<std::string>()));
        }
        p.annotation.type = problem_type_from_string(an.at("type").get<std::string>());
        if (an.contains("themes")) {
            for (const auto& t : an.at("themes")) {
                p.annotation.themes.insert(theme_from_string(t.get<std::string>()));
            }
        }
        p.annotation.language = an.at("language").get<std::string>();
        p.annotation.language_family = an.at("family").get<std::string>();
        p.annotation.glottocode = an.at("glottocode").get<std::string>();
        p.annotation.speakers = an.value("speakers", std::int64_t(0));
    } catch (const json::exception& e) {
        throw LoadError(origin + ": problem " + p.ref() + ": " + e.what());
    }
    validate_problem(p, origin);
    return p;
}

std::vector<Problem> parse_problem_set(const std::filesystem::path& path) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(path)) {
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else if (std::filesystem::exists(path)) {
        files.push_back(path);
    } else {
        throw LoadError("problem set path does not exist: " + path.string());
    }

    std::vector<Problem> problems;
    std::set<std::pair<int, int>> seen;
    for (const auto& file : files) {
        json j;
        try {
            j = json::parse(read_file(file));
        } catch (const json::exception& e) {
            throw LoadError(file.string() + ": invalid JSON: " + e.what());
        }
        Problem p = problem_from_json(j, file.string());
        if (!seen.insert({p.year, p.number}).second) {
            throw LoadError(file.string() + ": duplicate problem (year, number) " + p.ref());
        }
        problems.push_back(std::move(p));
    }
    std::sort(problems.begin(), problems.end(), [](const Problem& a, const Problem& b) {
        return std::pair(a.year, a.number) < std::pair(b.year, b.number);
    });
    return problems;
}

GlottologMapping GlottologMapping::load_csv(const std::filesystem::path& path) {
    GlottologMapping mapping;
    auto rows = parse_csv(read_file(path));
    if (rows.empty()) throw LoadError(path.string() + ": empty mapping file");
    const auto& header = rows[0];
    if (header.size() < 3 || header[0] != "iso639_3" || header[1] != "glottocode" ||
        header[2] != "resource_class") {
        throw LoadError(path.string() + ": expected header iso639_3,glottocode,resource_class");
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() < 3) {
            throw LoadError(path.string() + ": row " + std::to_string(i + 1) + ": expected 3 fields");
        }
        Entry entry;
        entry.glottocode = row[1];
        if (!row[2].empty()) {
            int cls = 0;
            auto [ptr, ec] = std::from_chars(row[2].data(), row[2].data() + row[2].size(), cls);
            if (ec != std::errc() || ptr != row[2].data() + row[2].size() || cls < 0 || cls > 5) {
                throw LoadError(path.string() + ": row " + std::to_string(i + 1) +
                                ": resource_class must be 0..5 or empty");
            }
            entry.resource_class = cls;
        }
        if (!mapping.by_iso.emplace(row[0], entry).second) {
            throw LoadError(path.string() + ": duplicate iso639_3 code \"" + row[0] + "\"");
        }
    }
    return mapping;
}

std::optional<int> resolve_resource_class(const std::string& iso639_3,
                                          const GlottologMapping& mapping) {
    auto it = mapping.by_iso.find(iso639_3);
    if (it == mapping.by_iso.end()) return std::nullopt;
    return it->second.resource_class;
}

}  // namespace harness
