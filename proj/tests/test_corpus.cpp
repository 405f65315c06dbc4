#include <doctest.h>

#include <set>
#include <string>

#include "stylemimic/corpus.hpp"
#include "stylemimic/error.hpp"
#include "test_util.hpp"

using namespace stylemimic;
using stylemimic::testing::code_of;

namespace {

Corpus author_counts(const std::vector<std::pair<std::string, int>>& counts, int words = 120) {
  std::vector<WritingSample> samples;
  std::string text;
  for (int i = 0; i < words; ++i) text += "w ";
  for (const auto& [author, n] : counts) {
    for (int i = 0; i < n; ++i) samples.push_back(make_sample(author + "-" + std::to_string(i), author, text));
  }
  return Corpus(std::move(samples));
}

}  // namespace

TEST_CASE("ingest parses valid lines and builds the index") {
  const auto c = parse_jsonl(
      R"({"id":"1","author_id":"a","text":"one two three","genre":"blog","meta":{"subreddit":"x","n":3}})"
      "\n"
      R"({"id":"2","author_id":"b","text":"four","genre":"email"})"
      "\n");
  CHECK(c.size() == 2);
  CHECK(c.authors() == std::vector<std::string>{"a", "b"});
  CHECK(c.at("1").word_count == 3);
  CHECK(c.at("1").genre == Genre::kBlog);
  CHECK(c.at("1").meta.at("subreddit") == "x");
  CHECK(c.at("1").meta.at("n") == "3");
  CHECK(c.at("2").genre == Genre::kEmail);
}

TEST_CASE("ingest errors") {
  CHECK(code_of([] { parse_jsonl(R"({"id":"1","author_id":"a","genre":"blog"})"); }) == ErrorCode::kMissingField);
  CHECK(code_of([] {
          parse_jsonl(R"({"id":"1","author_id":"a","text":"x","genre":"blog"})"
                      "\n"
                      R"({"id":"1","author_id":"b","text":"y","genre":"blog"})");
        }) == ErrorCode::kDuplicateId);
  try {
    parse_jsonl("\n{not json}\n");
    FAIL("expected MalformedLine");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMalformedLine);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  CHECK(code_of([] { (void)Corpus().at("missing"); }) == ErrorCode::kMissingReference);
}

TEST_CASE("ingest skips blank texts and excluded patterns") {
  IngestOptions opts{{"^\\[deleted\\]"}};
  const auto c = parse_jsonl(R"({"id":"1","author_id":"a","text":"  ","genre":"blog"})"
                             "\n"
                             R"({"id":"2","author_id":"a","text":"[deleted] gone","genre":"blog"})"
                             "\n"
                             R"({"id":"3","author_id":"a","text":"kept text","genre":"forum"})",
                             opts);
  REQUIRE(c.size() == 1);
  CHECK(c.samples()[0].id == "3");
}

TEST_CASE("jsonl round trip preserves samples") {
  const auto c = parse_jsonl(
      R"({"id":"1","author_id":"a","text":"café \"quoted\"\nline","genre":"news","meta":{"k":"v"}})");
  const auto back = parse_jsonl(to_jsonl(c));
  REQUIRE(back.size() == 1);
  CHECK(back.samples()[0].text == c.samples()[0].text);
  CHECK(back.samples()[0].meta == c.samples()[0].meta);
  CHECK(back.samples()[0].genre == Genre::kNews);
}

TEST_CASE("filter_length keeps the inclusive range") {
  std::vector<WritingSample> samples;
  for (int n : {99, 100, 1500, 1501}) {
    std::string text;
    for (int i = 0; i < n; ++i) text += "x ";
    samples.push_back(make_sample("s" + std::to_string(n), "a", text));
  }
  const auto kept = filter_length(Corpus(samples), 100, 1500);
  CHECK(kept.size() == 2);
  CHECK(kept.contains("s100"));
  CHECK(kept.contains("s1500"));
}

TEST_CASE("top_authors ranks by count then id") {
  const auto c = author_counts({{"A", 5}, {"B", 3}, {"C", 1}});
  CHECK(top_authors(c, 2).authors() == std::vector<std::string>{"A", "B"});
  const auto tie = author_counts({{"B", 3}, {"A", 3}});
  CHECK(top_authors(tie, 1).authors() == std::vector<std::string>{"A"});
  CHECK(code_of([&] { top_authors(c, 4); }) == ErrorCode::kTooFewAuthors);
}

TEST_CASE("split follows the floor rule for every small n") {
  for (int n = 2; n <= 30; ++n) {
    const auto c = author_counts({{"a", n}});
    SplitConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(n);
    const auto s = split(c, cfg);
    CHECK(s.train.size() == static_cast<std::size_t>(n / 2));
    CHECK(s.test.size() == static_cast<std::size_t>(n - n / 2));
  }
  const auto c11 = author_counts({{"a", 11}});
  const auto s11 = split(c11, SplitConfig{});
  CHECK(s11.train.size() == 5);
  CHECK(s11.test.size() == 6);
}

TEST_CASE("split is deterministic, disjoint and covers every author") {
  const auto c = author_counts({{"a", 10}, {"b", 7}, {"c", 4}});
  SplitConfig cfg;
  cfg.seed = 42;
  const auto s1 = split(c, cfg);
  const auto s2 = split(c, cfg);
  CHECK(to_jsonl(s1.train) == to_jsonl(s2.train));
  CHECK(split_manifest_jsonl(s1) == split_manifest_jsonl(s2));
  std::set<std::string> train_ids;
  for (const auto& s : s1.train.samples()) train_ids.insert(s.id);
  for (const auto& s : s1.test.samples()) CHECK_FALSE(train_ids.contains(s.id));
  CHECK(s1.train.size() + s1.test.size() == c.size());
  CHECK(s1.train.authors() == s1.test.authors());

  cfg.seed = 43;
  CHECK(split_manifest_jsonl(split(c, cfg)) != split_manifest_jsonl(s1));
}

TEST_CASE("split per author does not depend on the other authors") {
  const auto both = author_counts({{"a", 10}, {"b", 8}});
  const auto alone = author_counts({{"a", 10}});
  SplitConfig cfg;
  cfg.seed = 9;
  const auto s_both = split(both, cfg);
  const auto s_alone = split(alone, cfg);
  std::set<std::string> a_both;
  for (const auto* s : s_both.train.samples_of("a")) a_both.insert(s->id);
  std::set<std::string> a_alone;
  for (const auto* s : s_alone.train.samples_of("a")) a_alone.insert(s->id);
  CHECK(a_both == a_alone);
}

TEST_CASE("stratified split applies the floor rule per stratum") {
  std::vector<WritingSample> samples;
  for (int i = 0; i < 6; ++i) samples.push_back(make_sample("x" + std::to_string(i), "a", "t", Genre::kForum, {{"sub", "x"}}));
  for (int i = 0; i < 5; ++i) samples.push_back(make_sample("y" + std::to_string(i), "a", "t", Genre::kForum, {{"sub", "y"}}));
  SplitConfig cfg;
  cfg.stratify_key = "sub";
  const auto s = split(Corpus(samples), cfg);
  int x_train = 0;
  int y_train = 0;
  for (const auto& w : s.train.samples()) (w.meta.at("sub") == "x" ? x_train : y_train)++;
  CHECK(x_train == 3);
  CHECK(y_train == 2);
}

TEST_CASE("split rejects authors that cannot fill both sides") {
  CHECK(code_of([] { split(author_counts({{"a", 1}}), SplitConfig{}); }) == ErrorCode::kAuthorTooSmall);
  SplitConfig cfg;
  cfg.train_fraction = 0.2;
  CHECK(code_of([&] { split(author_counts({{"a", 4}}), cfg); }) == ErrorCode::kAuthorTooSmall);
}

TEST_CASE("prepare_split chains filter, top-n and split") {
  auto big = author_counts({{"a", 6}, {"b", 4}, {"c", 2}});
  SplitConfig cfg;
  cfg.top_n_authors = 2;
  const auto s = prepare_split(big, cfg);
  CHECK(s.train.authors() == std::vector<std::string>{"a", "b"});
  cfg.min_words = 200;
  CHECK(code_of([&] { prepare_split(big, cfg); }) == ErrorCode::kTooFewAuthors);
}
