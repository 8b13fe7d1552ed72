#include <doctest.h>

#include "harness/text.hpp"

using namespace harness;

TEST_CASE("utf8 round trip") {
    const std::string s = "aé中\U0001F600 b";
    CHECK(utf8_encode(utf8_decode(s)) == s);
    CHECK(utf8_decode("abc").size() == 3);
    CHECK(utf8_decode("é").size() == 1);
}

TEST_CASE("nfc composes combining sequences") {
    // "e" + COMBINING ACUTE ACCENT -> precomposed é
    const std::string decomposed = "e\xcc\x81";
    const std::string composed = "\xc3\xa9";
    CHECK(nfc(decomposed) == composed);
    CHECK(utf8_decode(nfc(decomposed)).size() == 1);
    CHECK(nfc(composed) == composed);
}

TEST_CASE("trim strips unicode whitespace including ideographic space") {
    CHECK(trim("  kasvosta ") == "kasvosta");
    CHECK(trim("　kasvosta　") == "kasvosta");
    CHECK(trim(" x ") == "x");
    CHECK(trim("") == "");
    CHECK(trim(" \t\n ") == "");
}

TEST_CASE("normalize_text applies nfc, trim, then optional casefold") {
    NormalizationFlags flags;
    CHECK(normalize_text("  e\xcc\x81  ", flags) == "\xc3\xa9");
    CHECK(normalize_text("KASVOSTA", flags) == "KASVOSTA");  // casefold off by default
    flags.casefold = true;
    CHECK(normalize_text("KASVOSTA", flags) == "kasvosta");
    CHECK(normalize_text("Straße", flags) == "strasse");
}

TEST_CASE("word tokens lowercases and splits on punctuation") {
    auto tokens = word_tokens("The rain, the RAIN!");
    REQUIRE(tokens.size() == 4);
    CHECK(tokens[0] == "the");
    CHECK(tokens[1] == "rain");
    CHECK(tokens[3] == "rain");
}
