#pragma once

#include <string>
#include <vector>

namespace harness {

/// RFC-4180 style parsing: quoted fields may contain commas, doubled
/// quotes and newlines. Returns one row per record, header included.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

std::string csv_escape(const std::string& field);

std::string csv_row(const std::vector<std::string>& fields);

}  // namespace harness
