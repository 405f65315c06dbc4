#include <doctest.h>

#include "stylemimic/text.hpp"

using namespace stylemimic;

TEST_CASE("tokenize_words splits on whitespace runs") {
  CHECK(tokenize_words("").empty());
  const auto hello = tokenize_words("Hello, world!");
  REQUIRE(hello.size() == 2);
  CHECK(hello[0] == "Hello,");
  CHECK(hello[1] == "world!");
  CHECK(count_words("a\n\nb c") == 3);
  CHECK(count_words("  \t\n ") == 0);
  CHECK(count_words("caf\xc3\xa9 na\xc3\xafve") == 2);
}

TEST_CASE("normalize_token lowercases and strips edge punctuation") {
  CHECK(normalize_token("\"Hello,") == "hello");
  CHECK(normalize_token("don't") == "don't");
  CHECK(normalize_token("...") == "");
  CHECK(normalize_token("caf\xc3\xa9!") == "caf\xc3\xa9");
  const auto words = normalized_words("The cat -- sat.");
  REQUIRE(words.size() == 3);
  CHECK(words[2] == "sat");
}

TEST_CASE("decode_utf8 replaces invalid bytes one at a time") {
  const auto cps = decode_utf8("a\xff\xc3\xa9");
  REQUIRE(cps.size() == 3);
  CHECK(cps[0] == U'a');
  CHECK(cps[1] == 0xFFFD);
  CHECK(cps[2] == 0xE9);
  CHECK(utf8_length("\xe2\x82\xac") == 1);
}

TEST_CASE("join_first_words normalizes spacing") {
  CHECK(join_first_words("a  b\n\nc d", 3) == "a b c");
  CHECK(join_first_words("a b", 10) == "a b");
  CHECK(is_blank(" \n"));
  CHECK_FALSE(is_blank(" x "));
}
