#pragma once

#include <filesystem>
#include <string>

namespace harness {

std::string read_file(const std::filesystem::path& path);

/// Writes via a temp file in the same directory, then renames into place.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace harness
