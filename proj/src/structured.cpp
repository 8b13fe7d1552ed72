#include "harness/structured.hpp"

#include <vector>

namespace harness {

using nlohmann::json;

namespace {

bool try_parse(const std::string& s, json& out) {
    json v = json::parse(s, nullptr, false);
    if (v.is_discarded()) return false;
    out = std::move(v);
    return true;
}

// Substring spanning the first '{' or '[' through its matching close,
// skipping brackets inside JSON string literals.
bool balanced_slice(const std::string& text, std::string& out) {
    std::size_t start = text.find_first_of("{[");
    if (start == std::string::npos) return false;
    char open = text[start];
    char close = open == '{' ? '}' : ']';
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == open) {
            ++depth;
        } else if (c == close) {
            --depth;
            if (depth == 0) {
                out = text.substr(start, i - start + 1);
                return true;
            }
        }
    }
    return false;
}

// Contents of ``` fenced blocks, language tag line removed.
std::vector<std::string> fenced_blocks(const std::string& text) {
    std::vector<std::string> blocks;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = text.find("```", pos);
        if (open == std::string::npos) break;
        std::size_t body = text.find('\n', open);
        if (body == std::string::npos) break;
        std::size_t end = text.find("```", body);
        if (end == std::string::npos) break;
        blocks.push_back(text.substr(body + 1, end - body - 1));
        pos = end + 3;
    }
    return blocks;
}

}  // namespace

ParseOutcome parse_structured_output(const std::string& text, const std::string& schema_hint) {
    ParseOutcome outcome;
    std::vector<std::string> candidates;
    for (auto& block : fenced_blocks(text)) candidates.push_back(block);
    candidates.push_back(text);

    for (const auto& candidate : candidates) {
        if (try_parse(candidate, outcome.value)) {
            outcome.ok = true;
            return outcome;
        }
        std::string slice;
        if (balanced_slice(candidate, slice) && try_parse(slice, outcome.value)) {
            outcome.ok = true;
            return outcome;
        }
    }
    outcome.error = "no parseable JSON value found";
    if (!schema_hint.empty()) outcome.error += " (expected " + schema_hint + ")";
    return outcome;
}

}  // namespace harness
