#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace harness {

/// Decodes UTF-8 into code points; invalid byte sequences become U+FFFD.
std::vector<char32_t> utf8_decode(const std::string& s);

std::string utf8_encode(const std::vector<char32_t>& cps);

/// Unicode whitespace, including NBSP, the U+2000 block and the
/// ideographic space U+3000.
bool is_unicode_space(char32_t cp);

/// Strips leading and trailing Unicode whitespace.
std::string trim(const std::string& s);

/// Canonical composition (NFC).
std::string nfc(const std::string& s);

/// Unicode default case folding.
std::string casefold(const std::string& s);

struct NormalizationFlags {
    bool nfc = true;
    bool trim = true;
    bool casefold = false;
};

/// Applies, in order: NFC, trim, optional case folding.
std::string normalize_text(const std::string& s, const NormalizationFlags& flags);

/// Lowercased word tokens: maximal runs of alphanumeric or non-ASCII bytes.
std::vector<std::string> word_tokens(const std::string& s);

}  // namespace harness
