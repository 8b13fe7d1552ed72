#include "harness/config.hpp"

#include <cctype>

#include "harness/fsutil.hpp"

namespace harness {

namespace {

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_basic_string(const std::string& line, std::size_t& pos,
                               const std::string& where) {
    // line[pos] == '"'
    ++pos;
    std::string out;
    while (pos < line.size()) {
        char c = line[pos];
        if (c == '"') {
            ++pos;
            return out;
        }
        if (c == '\\') {
            ++pos;
            if (pos >= line.size()) break;
            switch (line[pos]) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default:
                    throw ConfigError(where + ": unsupported escape \\" +
                                      std::string(1, line[pos]));
            }
            ++pos;
        } else {
            out.push_back(c);
            ++pos;
        }
    }
    throw ConfigError(where + ": unterminated string");
}

void skip_spaces(const std::string& line, std::size_t& pos) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
}

}  // namespace

TomlTable TomlTable::parse(const std::string& text, const std::string& origin) {
    TomlTable table;
    table.origin_ = origin;
    std::string prefix;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        const std::string where = origin + ":" + std::to_string(line_no);

        std::size_t i = 0;
        skip_spaces(line, i);
        if (i >= line.size() || line[i] == '#') {
            if (pos > text.size()) break;
            continue;
        }
        if (line[i] == '[') {
            auto close = line.find(']', i);
            if (close == std::string::npos) throw ConfigError(where + ": unterminated [table]");
            prefix = line.substr(i + 1, close - i - 1);
            if (prefix.empty()) throw ConfigError(where + ": empty table name");
            for (char c : prefix) {
                if (!is_bare_key_char(c) && c != '.') {
                    throw ConfigError(where + ": bad table name \"" + prefix + "\"");
                }
            }
            continue;
        }

        std::string key;
        while (i < line.size() && is_bare_key_char(line[i])) key.push_back(line[i++]);
        if (key.empty()) throw ConfigError(where + ": expected a key");
        skip_spaces(line, i);
        if (i >= line.size() || line[i] != '=') throw ConfigError(where + ": expected '='");
        ++i;
        skip_spaces(line, i);
        if (i >= line.size()) throw ConfigError(where + ": missing value");

        Value value;
        if (line[i] == '"') {
            value.kind = Value::Kind::String;
            value.text = parse_basic_string(line, i, where);
        } else if (line[i] == '[') {
            value.kind = Value::Kind::StringArray;
            ++i;
            while (true) {
                skip_spaces(line, i);
                if (i >= line.size()) throw ConfigError(where + ": unterminated array");
                if (line[i] == ']') {
                    ++i;
                    break;
                }
                if (line[i] == ',') {
                    ++i;
                    continue;
                }
                if (line[i] != '"') {
                    throw ConfigError(where + ": only string arrays are supported");
                }
                value.array.push_back(parse_basic_string(line, i, where));
            }
        } else {
            std::string token;
            while (i < line.size() && line[i] != '#' && line[i] != ' ' && line[i] != '\t') {
                token.push_back(line[i++]);
            }
            if (token == "true" || token == "false") {
                value.kind = Value::Kind::Boolean;
                value.boolean = token == "true";
            } else {
                value.kind = Value::Kind::Scalar;
                value.text = token;
            }
        }
        skip_spaces(line, i);
        if (i < line.size() && line[i] != '#') {
            throw ConfigError(where + ": trailing characters after value");
        }

        const std::string full_key = prefix.empty() ? key : prefix + "." + key;
        if (!table.values_.emplace(full_key, std::move(value)).second) {
            throw ConfigError(where + ": duplicate key \"" + full_key + "\"");
        }
        if (pos > text.size()) break;
    }
    return table;
}

TomlTable TomlTable::parse_file(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw ConfigError("config file does not exist: " + path.string());
    }
    return parse(read_file(path), path.string());
}

const TomlTable::Value* TomlTable::find(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

bool TomlTable::has(const std::string& key) const { return find(key) != nullptr; }

std::string TomlTable::get_string(const std::string& key) const {
    const Value* v = find(key);
    if (!v) throw ConfigError(origin_ + ": missing required key \"" + key + "\"");
    if (v->kind != Value::Kind::String && v->kind != Value::Kind::Scalar) {
        throw ConfigError(origin_ + ": key \"" + key + "\" is not a string");
    }
    return v->text;
}

std::string TomlTable::get_string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
}

std::int64_t TomlTable::get_int_or(const std::string& key, std::int64_t fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::Scalar) {
        throw ConfigError(origin_ + ": key \"" + key + "\" is not an integer");
    }
    try {
        return std::stoll(v->text);
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": key \"" + key + "\" is not an integer: " + v->text);
    }
}

double TomlTable::get_double_or(const std::string& key, double fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::Scalar) {
        throw ConfigError(origin_ + ": key \"" + key + "\" is not a number");
    }
    try {
        return std::stod(v->text);
    } catch (const std::exception&) {
        throw ConfigError(origin_ + ": key \"" + key + "\" is not a number: " + v->text);
    }
}

bool TomlTable::get_bool_or(const std::string& key, bool fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::Boolean) {
        throw ConfigError(origin_ + ": key \"" + key + "\" is not a boolean");
    }
    return v->boolean;
}

Rational TomlTable::get_rational_or(const std::string& key, const Rational& fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->kind == Value::Kind::Scalar || v->kind == Value::Kind::String) {
        try {
            return Rational::parse(v->text);
        } catch (const std::exception&) {
            throw ConfigError(origin_ + ": key \"" + key + "\" is not a rational: " + v->text);
        }
    }
    throw ConfigError(origin_ + ": key \"" + key + "\" is not a rational");
}

std::vector<std::string> TomlTable::get_string_array(const std::string& key) const {
    const Value* v = find(key);
    if (!v) return {};
    if (v->kind == Value::Kind::StringArray) return v->array;
    if (v->kind == Value::Kind::String) return {v->text};
    throw ConfigError(origin_ + ": key \"" + key + "\" is not a string array");
}

std::vector<std::string> TomlTable::subtable_names(const std::string& prefix) const {
    std::vector<std::string> names;
    const std::string want = prefix + ".";
    for (const auto& [key, value] : values_) {
        if (key.rfind(want, 0) != 0) continue;
        auto rest = key.substr(want.size());
        auto dot = rest.find('.');
        if (dot == std::string::npos) continue;
        const std::string name = rest.substr(0, dot);
        if (names.empty() || names.back() != name) names.push_back(name);
    }
    return names;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

RunConfig RunConfig::from_toml(const TomlTable& toml, const std::filesystem::path& base_dir) {
    RunConfig cfg;

    try {
        cfg.pipeline.kind = pipeline_kind_from_string(toml.get_string_or("pipeline.kind", "vanilla"));
    } catch (const PlanError& e) {
        throw ConfigError(e.what());
    }
    cfg.pipeline.solver_models = toml.get_string_array("pipeline.solver_models");
    cfg.pipeline.aggregator_model = toml.get_string_or("pipeline.aggregator_model", "");
    cfg.pipeline.n = static_cast<int>(toml.get_int_or("pipeline.N", 1));
    cfg.pipeline.m = static_cast<int>(toml.get_int_or("pipeline.M", 1));
    cfg.pipeline.r = static_cast<int>(toml.get_int_or("pipeline.R", 0));
    cfg.pipeline.rounds = static_cast<int>(toml.get_int_or("pipeline.rounds", 0));
    cfg.pipeline.temperature = toml.get_double_or("pipeline.temperature", 0.75);
    if (toml.has("pipeline.guide_path")) {
        cfg.pipeline.guide_path = resolve(base_dir, toml.get_string("pipeline.guide_path"));
    }
    cfg.pipeline.kb_top_k = static_cast<int>(toml.get_int_or("pipeline.kb_top_k", 5));
    cfg.pipeline.kb_embed_model =
        toml.get_string_or("pipeline.kb_embed_model", cfg.pipeline.kb_embed_model);
    cfg.pipeline.parallelism = static_cast<int>(toml.get_int_or("gateway.parallelism", 4));

    cfg.grading.grading.w_answer = toml.get_rational_or("grading.w_answer", Rational(1, 2));
    cfg.grading.grading.w_explanation =
        toml.get_rational_or("grading.w_explanation", Rational(1, 2));
    const std::string backend = toml.get_string_or("grading.fuzzy_backend", "judge_llm");
    if (backend == "judge_llm") {
        cfg.grading.grading.fuzzy_backend = FuzzyBackend::JudgeLLM;
    } else if (backend == "embedding_threshold") {
        cfg.grading.grading.fuzzy_backend = FuzzyBackend::EmbeddingThreshold;
    } else if (backend == "always_zero") {
        cfg.grading.grading.fuzzy_backend = FuzzyBackend::AlwaysZero;
    } else {
        throw ConfigError("grading.fuzzy_backend must be judge_llm, embedding_threshold or "
                          "always_zero, got \"" + backend + "\"");
    }
    cfg.grading.grading.embedding_threshold =
        toml.get_double_or("grading.embedding_threshold", 0.85);
    cfg.grading.grading.normalization.casefold = toml.get_bool_or("grading.casefold", false);
    cfg.grading.judge_model = toml.get_string_or("grading.judge_model", "");
    cfg.grading.embed_model = toml.get_string_or("grading.embed_model", "");
    try {
        cfg.grading.grading.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    if (toml.has("problems.path")) {
        cfg.problems_path = resolve(base_dir, toml.get_string("problems.path"));
    }
    cfg.output_dir = resolve(base_dir, toml.get_string_or("output.dir", "out"));
    cfg.run_id = toml.get_string_or("output.run_id", "");
    cfg.cache_dir = resolve(base_dir, toml.get_string_or("gateway.cache_dir", "cache"));
    cfg.max_attempts = static_cast<int>(toml.get_int_or("gateway.max_attempts", 3));

    for (const auto& name : toml.subtable_names("provider")) {
        ProviderConfig provider;
        provider.name = name;
        provider.base_url = toml.get_string("provider." + name + ".base_url");
        provider.auth_env = toml.get_string_or("provider." + name + ".auth_env", "");
        provider.kind = toml.get_string_or("provider." + name + ".kind", "chat");
        cfg.providers.emplace(name, std::move(provider));
    }

    if (toml.has("kb.index")) cfg.kb_index = resolve(base_dir, toml.get_string("kb.index"));

    if (toml.has("probe.corpus")) cfg.probe.corpus = resolve(base_dir, toml.get_string("probe.corpus"));
    if (toml.has("probe.languages")) {
        cfg.probe.languages = resolve(base_dir, toml.get_string("probe.languages"));
    }
    if (toml.has("probe.mapping")) {
        cfg.probe.mapping = resolve(base_dir, toml.get_string("probe.mapping"));
    }
    cfg.probe.direction = toml.get_string_or("probe.direction", "both");
    cfg.probe.model = toml.get_string_or("probe.model", "");
    cfg.probe.temperature = toml.get_double_or("probe.temperature", 0.1);
    cfg.probe.thinking_budget = toml.get_int_or("probe.thinking_budget", 0);
    cfg.probe.sentences_per_language = static_cast<int>(toml.get_int_or("probe.k", 10));

    cfg.judge.model = toml.get_string_or("judge.model", "");
    if (toml.has("judge.rubric")) {
        cfg.judge.rubric = resolve(base_dir, toml.get_string("judge.rubric"));
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    TomlTable toml = TomlTable::parse_file(path);
    return from_toml(toml, path.has_parent_path() ? path.parent_path() : ".");
}

}  // namespace harness
