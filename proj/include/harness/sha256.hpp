#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace harness {

/// SHA-256 digest of the input, returned as 64 lowercase hex characters.
/// Used for content-addressed cache keys; not a security boundary.
std::string sha256_hex(std::string_view data);

}  // namespace harness
