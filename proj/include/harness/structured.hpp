#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace harness {

struct ParseOutcome {
    bool ok = false;
    nlohmann::json value;
    std::string error;  // set when !ok; the caller may re-prompt once
};

/// Extracts a JSON value from raw model text: tries fenced ```...```
/// blocks first, then trims prose before the first '{' or '[' and after
/// its matching close (string-aware), then parses. A failed parse is a
/// repair-needed outcome, not an exception.
ParseOutcome parse_structured_output(const std::string& text, const std::string& schema_hint = "");

}  // namespace harness
