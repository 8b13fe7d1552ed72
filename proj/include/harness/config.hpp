#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "harness/grading.hpp"
#include "harness/http_transport.hpp"
#include "harness/pipeline.hpp"
#include "harness/rational.hpp"

namespace harness {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Minimal TOML reader covering what the config files use: [table] and
/// [dotted.table] headers, bare keys, strings with escapes, integers,
/// floats, booleans and single-line arrays of strings. Numeric tokens are
/// kept verbatim so rational weights parse exactly.
class TomlTable {
public:
    static TomlTable parse(const std::string& text, const std::string& origin = "<string>");
    static TomlTable parse_file(const std::filesystem::path& path);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string_or(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
    double get_double_or(const std::string& key, double fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
    Rational get_rational_or(const std::string& key, const Rational& fallback) const;
    std::vector<std::string> get_string_array(const std::string& key) const;

    /// Child table names directly under a prefix, e.g. names("provider")
    /// lists every [provider.<name>] block.
    std::vector<std::string> subtable_names(const std::string& prefix) const;

private:
    struct Value {
        enum class Kind { String, Scalar, Boolean, StringArray } kind = Kind::String;
        std::string text;  // string content, or the raw scalar token
        bool boolean = false;
        std::vector<std::string> array;
    };
    const Value* find(const std::string& key) const;

    std::string origin_;
    std::map<std::string, Value> values_;
};

struct ProbeConfig {
    std::filesystem::path corpus;
    std::filesystem::path languages;
    std::filesystem::path mapping;
    std::string direction = "both";  // "e2t" | "t2e" | "both"
    std::string model;
    double temperature = 0.1;
    std::int64_t thinking_budget = 0;
    int sentences_per_language = 10;
};

struct JudgeRunConfig {
    std::string model;
    std::filesystem::path rubric = "assets/cot_rubric.md";
};

struct RunConfig {
    PipelineConfig pipeline;
    ExperimentGradingSetup grading;
    std::filesystem::path problems_path;
    std::filesystem::path output_dir = "out";
    std::string run_id;  // defaults to a digest of the config snapshot
    std::filesystem::path cache_dir = "cache";
    int max_attempts = 3;
    std::vector<int> backoff_ms = {1000, 4000};
    std::map<std::string, ProviderConfig> providers;
    std::optional<std::filesystem::path> kb_index;  // grammar pipeline's index dir
    ProbeConfig probe;
    JudgeRunConfig judge;

    static RunConfig load(const std::filesystem::path& path);
    static RunConfig from_toml(const TomlTable& toml, const std::filesystem::path& base_dir);
};

}  // namespace harness
