#include <doctest.h>

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "harness/fsutil.hpp"
#include "harness/problem.hpp"
#include "support.hpp"

using namespace harness;

TEST_CASE("answer tag grammar") {
    SUBCASE("absent means exact") {
        auto spec = parse_answer_tag(std::nullopt);
        CHECK(spec.mode == AnswerMode::Exact);
    }
    SUBCASE("fuzzy") {
        CHECK(parse_answer_tag(std::string("<fuzzy>")).mode == AnswerMode::Fuzzy);
    }
    SUBCASE("select with inf upper bound") {
        auto spec = parse_answer_tag(std::string("<select2, 1, inf>"));
        CHECK(spec.mode == AnswerMode::Select);
        CHECK(spec.select_len == 2);
        CHECK(spec.select_min == 1);
        CHECK(spec.select_max == kUnbounded);
    }
    SUBCASE("whitespace after commas is optional") {
        auto spec = parse_answer_tag(std::string("<select3,2,5>"));
        CHECK(spec.select_len == 3);
        CHECK(spec.select_min == 2);
        CHECK(spec.select_max == 5);
    }
    SUBCASE("min above max is rejected") {
        CHECK_THROWS_AS(parse_answer_tag(std::string("<select3, 4, 2>")), LoadError);
    }
    SUBCASE("malformed tags echo the raw tag") {
        for (const char* bad : {"<select>", "<selectx, 1, 2>", "select2, 1, inf", "<fuzzy",
                                "<select2, 1>", "<select2, 1, 2, 3>", "<select0, 1, 2>",
                                "<select2, inf, 2>"}) {
            CHECK_THROWS_AS(parse_answer_tag(std::string(bad)), LoadError);
        }
        try {
            parse_answer_tag(std::string("<selectx, 1, 2>"));
        } catch (const LoadError& e) {
            CHECK(std::string(e.what()).find("<selectx, 1, 2>") != std::string::npos);
        }
    }
    SUBCASE("fuzz: random strings error but never crash") {
        std::mt19937 rng(7);
        std::uniform_int_distribution<int> len(0, 24);
        std::uniform_int_distribution<int> ch(32, 126);
        for (int i = 0; i < 2000; ++i) {
            std::string s;
            for (int j = len(rng); j > 0; --j) s.push_back(static_cast<char>(ch(rng)));
            try {
                (void)parse_answer_tag(s);
            } catch (const LoadError&) {
            }
        }
    }
}

TEST_CASE("fixture problem set loads and validates") {
    auto problems = parse_problem_set(testsupport::fixtures_dir() / "problems");
    REQUIRE(problems.size() == 3);
    CHECK(problems[0].ref() == "2021-1");
    CHECK(problems[1].ref() == "2022-3");
    CHECK(problems[2].ref() == "2023-5");
    CHECK(problems[0].sub_problems.size() == 2);
    CHECK(problems[0].sub_problems[1].answer_specs[0].mode == AnswerMode::Select);
    CHECK(problems[0].annotation.subjects.count(Subject::Morphology) == 1);
    CHECK(problems[1].annotation.type == ProblemType::Pattern);
    CHECK(problems[0].official_solution.has_value());
    CHECK_FALSE(problems[2].official_solution.has_value());
}

TEST_CASE("problem round trip preserves structure") {
    auto problems = parse_problem_set(testsupport::fixtures_dir() / "problems");
    for (const auto& p : problems) {
        Problem q = problem_from_json(problem_to_json(p), "roundtrip");
        CHECK(problem_to_json(q) == problem_to_json(p));
    }
}

namespace {

nlohmann::json minimal_problem_json(int year, int number, int subs) {
    nlohmann::json sub_list = nlohmann::json::array();
    for (int s = 0; s < subs; ++s) {
        sub_list.push_back({{"id", "p" + std::to_string(s + 1)},
                            {"task_text", "t"},
                            {"answers", {{{"tag", nullptr}, {"references", {"x"}}}}}});
    }
    return nlohmann::json{
        {"year", year},
        {"number", number},
        {"statement", "data"},
        {"sub_problems", sub_list},
        {"rule_checklist", {"rule one"}},
        {"gold_reasoning", "steps"},
        {"annotation",
         {{"subjects", {"Syntax"}},
          {"type", "Rosetta"},
          {"themes", {"No Theme"}},
          {"language", "L"},
          {"family", "F"},
          {"glottocode", "abcd1234"},
          {"speakers", 10}}}};
}

}  // namespace

TEST_CASE("benchmark-scale set: 96 problems, 225 sub-problems") {
    testsupport::TempDir dir("probset");
    // 33 problems with 3 sub-problems + 63 with 2 -> 225 total
    for (int i = 0; i < 96; ++i) {
        auto j = minimal_problem_json(2003 + i / 5, i % 5 + 1, i < 33 ? 3 : 2);
        char name[32];
        std::snprintf(name, sizeof name, "p%03d.json", i);
        atomic_write_file(dir.path() / name, j.dump());
    }
    auto problems = parse_problem_set(dir.path());
    CHECK(problems.size() == 96);
    std::size_t subs = 0;
    for (const auto& p : problems) subs += p.sub_problems.size();
    CHECK(subs == 225);
    // ascending (year, number)
    for (std::size_t i = 1; i < problems.size(); ++i) {
        CHECK(std::pair(problems[i - 1].year, problems[i - 1].number) <
              std::pair(problems[i].year, problems[i].number));
    }
}

TEST_CASE("empty directory loads an empty set") {
    testsupport::TempDir dir("empty");
    CHECK(parse_problem_set(dir.path()).empty());
}

TEST_CASE("a single file loads as a one-problem set") {
    auto problems =
        parse_problem_set(testsupport::fixtures_dir() / "problems" / "2022-3.json");
    REQUIRE(problems.size() == 1);
    CHECK(problems[0].ref() == "2022-3");
}

TEST_CASE("uppercase glottocode is rejected and names the field") {
    testsupport::TempDir dir("badglotto");
    auto j = minimal_problem_json(2020, 1, 1);
    j["annotation"]["glottocode"] = "EGYP1253";
    atomic_write_file(dir.path() / "p.json", j.dump());
    try {
        parse_problem_set(dir.path());
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("glottocode") != std::string::npos);
        CHECK(msg.find("2020-1") != std::string::npos);
        CHECK(msg.find("p.json") != std::string::npos);
    }
}

TEST_CASE("duplicate (year, number) is rejected") {
    testsupport::TempDir dir("dup");
    atomic_write_file(dir.path() / "a.json", minimal_problem_json(2020, 1, 1).dump());
    atomic_write_file(dir.path() / "b.json", minimal_problem_json(2020, 1, 2).dump());
    CHECK_THROWS_AS(parse_problem_set(dir.path()), LoadError);
}

TEST_CASE("select length must match reference count") {
    testsupport::TempDir dir("sellen");
    auto j = minimal_problem_json(2020, 1, 1);
    j["sub_problems"][0]["answers"][0] = {{"tag", "<select3, 1, inf>"},
                                          {"references", {"a", "b"}}};
    atomic_write_file(dir.path() / "p.json", j.dump());
    CHECK_THROWS_AS(parse_problem_set(dir.path()), LoadError);
}

TEST_CASE("glottolog mapping and resource classes") {
    auto mapping = GlottologMapping::load_csv(testsupport::assets_dir() / "glottolog_mapping.csv");

    SUBCASE("manually resolved ambiguous iso codes are present") {
        for (const char* iso : {"srd", "est", "kon", "zho", "grn"}) {
            CHECK(mapping.by_iso.count(iso) == 1);
        }
        CHECK(mapping.by_iso.at("zho").glottocode == "mand1415");
        CHECK(mapping.by_iso.at("grn").glottocode == "east2555");
    }
    SUBCASE("zho resolves to the Mandarin class") {
        auto cls = resolve_resource_class("zho", mapping);
        REQUIRE(cls.has_value());
        CHECK(*cls == 5);
    }
    SUBCASE("tamasheq is class 0") {
        CHECK(mapping.by_iso.at("taq").glottocode == "tama1365");
        CHECK(resolve_resource_class("taq", mapping) == 0);
    }
    SUBCASE("unknown iso is absent") {
        CHECK_FALSE(resolve_resource_class("zzz", mapping).has_value());
    }
    SUBCASE("mapped language without a class is absent, not an error") {
        CHECK(mapping.by_iso.count("dik") == 1);
        CHECK_FALSE(resolve_resource_class("dik", mapping).has_value());
    }
}
