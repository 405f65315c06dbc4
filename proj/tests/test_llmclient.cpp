#include <doctest.h>

#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "stylemimic/error.hpp"
#include "stylemimic/llmclient.hpp"
#include "stylemimic/promptgen.hpp"
#include "test_util.hpp"

using namespace stylemimic;
using stylemimic::testing::code_of;
namespace fs = std::filesystem;

namespace {

GenerationRequest request_for(const std::string& summary, const std::string& reference = "reference text",
                              int max_tokens = 100) {
  GenerationRequest r;
  r.model_id = "m";
  r.prompt = render_zeroshot(summary, "blog post", 100);
  r.max_tokens = max_tokens;
  r.reference_text = reference;
  r.reference_id = "ref-1";
  r.condition = "zeroshot";
  return r;
}

class CountingProvider final : public ChatProvider {
 public:
  std::string complete_text(const GenerationRequest& request) override {
    ++calls;
    return "reply to " + request.prompt.digest.substr(0, 8);
  }
  int calls = 0;
};

class ScriptedTransport final : public HttpTransport {
 public:
  HttpResponse post_json(const std::string& url, const std::map<std::string, std::string>& headers,
                         const std::string& body, std::chrono::seconds) override {
    urls.push_back(url);
    seen_headers.push_back(headers);
    bodies.push_back(body);
    REQUIRE_FALSE(script.empty());
    auto r = script.front();
    script.pop_front();
    return r;
  }
  std::deque<HttpResponse> script;
  std::vector<std::string> urls;
  std::vector<std::map<std::string, std::string>> seen_headers;
  std::vector<std::string> bodies;
};

struct TempDir {
  TempDir() : path(fs::temp_directory_path() / ("stylemimic_llm_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path path;
};

}  // namespace

TEST_CASE("mock providers") {
  auto req = request_for("s", "abc");
  EchoReferenceProvider echo;
  CHECK(complete(req, echo).response_text == "abc");
  FixedTemplateProvider fixed("constant");
  CHECK(complete(req, fixed).response_text == "constant");
  CHECK(complete(request_for("other"), fixed).response_text == "constant");

  FirstSentenceProvider first;
  req.reference_text = "One thing. Two things!";
  CHECK(complete(req, first).response_text == "One thing.");
  CHECK(first_sentence("No terminator here") == "No terminator here");
  CHECK(first_sentence("Wait... what? Yes.") == "Wait...");
  CHECK(first_sentence("v1.2 is out. Next") == "v1.2 is out.");
}

TEST_CASE("records carry the request context") {
  auto req = request_for("s", "abc");
  req.exemplar_ids = {"e1", "e2"};
  req.summary_text = "s";
  EchoReferenceProvider echo;
  const auto rec = complete(req, echo);
  CHECK(rec.request_digest == request_digest(req));
  CHECK(rec.prompt_digest == req.prompt.digest);
  CHECK(rec.exemplar_ids == req.exemplar_ids);
  CHECK(rec.reference_id == "ref-1");
  CHECK(rec.condition == "zeroshot");
  CHECK_FALSE(rec.cached);
  CHECK(rec.latency_ms == 0);
  CHECK(rec.timestamp == "1970-01-01T00:00:00Z");
  const auto back = record_from_json(record_to_json(rec));
  CHECK(record_to_json(back) == record_to_json(rec));
  CHECK(code_of([] { record_from_json("{\"response_text\": 3}"); }) == ErrorCode::kMalformedLine);
}

TEST_CASE("request digest covers exactly the keyed fields") {
  auto a = request_for("s");
  auto b = a;
  b.condition = "other";
  b.reference_text = "different";
  CHECK(request_digest(a) == request_digest(b));
  b.max_tokens += 1;
  CHECK(request_digest(a) != request_digest(b));
  b = a;
  b.temperature = 0.7;
  CHECK(request_digest(a) != request_digest(b));
  b = a;
  b.model_id = "n";
  CHECK(request_digest(a) != request_digest(b));
  CHECK(request_digest(a) != request_digest(request_for("t")));
}

TEST_CASE("blank completions and bad limits are errors") {
  FixedTemplateProvider blank("  \n");
  CHECK(code_of([&] { complete(request_for("s"), blank); }) == ErrorCode::kEmptyCompletion);
  EchoReferenceProvider echo;
  CHECK(code_of([&] { complete(request_for("s", "x", 0), echo); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("cache hits skip the provider") {
  GenerationCache cache;
  CountingProvider provider;
  const auto req = request_for("s");
  const auto first = cached_complete(req, provider, cache);
  const auto second = cached_complete(req, provider, cache);
  CHECK(provider.calls == 1);
  CHECK_FALSE(first.cached);
  CHECK(second.cached);
  CHECK(second.response_text == first.response_text);

  auto changed = req;
  changed.max_tokens = 101;
  cached_complete(changed, provider, cache);
  CHECK(provider.calls == 2);
  CHECK(cache.size() == 2);

  auto other_context = req;
  other_context.reference_id = "ref-2";
  const auto hit = cached_complete(other_context, provider, cache);
  CHECK(hit.cached);
  CHECK(hit.reference_id == "ref-2");
  CHECK(provider.calls == 2);
}

TEST_CASE("cache file replay reproduces the in-memory state") {
  TempDir tmp;
  const auto path = tmp.path / "nested" / "cache.jsonl";
  CountingProvider provider;
  std::map<std::string, GenerationRecord> snapshot;
  {
    GenerationCache cache(path);
    for (int i = 0; i < 5; ++i) cached_complete(request_for("s" + std::to_string(i)), provider, cache);
    cached_complete(request_for("s0"), provider, cache);
    snapshot = cache.snapshot();
  }
  const GenerationCache replayed(path);
  const auto again = replayed.snapshot();
  REQUIRE(again.size() == snapshot.size());
  for (const auto& [key, rec] : snapshot) CHECK(record_to_json(again.at(key)) == record_to_json(rec));
  CHECK(provider.calls == 5);

  std::ifstream in(path);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 5);
}

TEST_CASE("corrupt cache lines report their line number") {
  TempDir tmp;
  const auto path = tmp.path / "cache.jsonl";
  GenerationRecord rec;
  rec.request_digest = "k";
  rec.response_text = "r";
  {
    std::ofstream out(path);
    out << record_to_json(rec) << "\n\n{broken\n";
  }
  try {
    GenerationCache cache(path);
    FAIL("expected CacheCorrupt");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCacheCorrupt);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("style mock is a pure function of the prompt") {
  StyleConditionedProvider provider({"alpha", "beta", "gamma"});
  const std::vector<std::string> samples = {"one two three four five six seven eight nine ten",
                                            "eleven twelve thirteen fourteen fifteen"};
  GenerationRequest req;
  req.model_id = "style";
  req.prompt = render_fewshot(samples, "summary", "blog post", 50);
  const auto a = provider.complete_text(req);
  CHECK(a == provider.complete_text(req));
  std::set<std::string> vocab;
  for (const auto& s : samples) {
    std::istringstream in(s);
    for (std::string w; in >> w;) vocab.insert(w);
  }
  std::istringstream out(a);
  int n = 0;
  for (std::string w; out >> w; ++n) CHECK(vocab.contains(w));
  CHECK(n == 50);

  req.prompt = render_zeroshot("summary", "blog post", 50);
  std::istringstream zero(provider.complete_text(req));
  for (std::string w; zero >> w;) CHECK((w == "alpha" || w == "beta" || w == "gamma"));
}

TEST_CASE("backoff and transient statuses") {
  const RetryPolicy policy;
  CHECK(backoff_delay(policy, 0).count() == 1000);
  CHECK(backoff_delay(policy, 1).count() == 4000);
  CHECK(backoff_delay(policy, 2).count() == 16000);
  for (int s : {408, 429, 500, 502, 503, 599}) CHECK(is_transient_status(s));
  for (int s : {200, 400, 401, 404}) CHECK_FALSE(is_transient_status(s));
}

TEST_CASE("retries then succeeds") {
  auto transport = std::make_shared<ScriptedTransport>();
  transport->script = {{503, "", HttpResponse::Failure::kNone},
                       {0, "", HttpResponse::Failure::kTimeout},
                       {429, "", HttpResponse::Failure::kNone},
                       {200, R"({"choices":[{"message":{"role":"assistant","content":"hi there"}}]})",
                        HttpResponse::Failure::kNone}};
  std::vector<long> delays;
  Sleeper sleeper = [&](std::chrono::milliseconds d) { delays.push_back(d.count()); };
  HttpEndpoint endpoint;
  endpoint.url = "http://example.invalid/v1/chat";
  endpoint.api_key_env = "STYLEMIMIC_TEST_UNSET_KEY";
  HttpChatProvider provider(endpoint, RetryPolicy{}, transport, sleeper);
  auto req = request_for("s");
  CHECK(complete(req, provider).response_text == "hi there");
  CHECK(delays == std::vector<long>{1000, 4000, 16000});
  CHECK(transport->bodies.size() == 4);
  CHECK_FALSE(transport->seen_headers[0].contains("Authorization"));

  const auto body = nlohmann::json::parse(transport->bodies[0]);
  CHECK(body["model"] == "m");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["max_tokens"] == 100);
  REQUIRE(body["messages"].size() == 1);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == req.prompt.text);
}

TEST_CASE("final failures map to errors") {
  Sleeper none = [](std::chrono::milliseconds) {};
  HttpEndpoint endpoint;
  endpoint.url = "http://example.invalid/x";
  endpoint.api_key_env = "STYLEMIMIC_TEST_UNSET_KEY";
  auto run = [&](std::deque<HttpResponse> script) {
    ScriptedTransport transport;
    transport.script = std::move(script);
    return code_of([&] { post_with_retries(transport, endpoint, "{}", RetryPolicy{}, none); });
  };
  using F = HttpResponse::Failure;
  CHECK(run({{429, "", F::kNone}, {429, "", F::kNone}, {429, "", F::kNone}, {429, "", F::kNone}}) ==
        ErrorCode::kRateLimited);
  CHECK(run({{500, "", F::kNone}, {502, "", F::kNone}, {503, "", F::kNone}, {504, "", F::kNone}}) ==
        ErrorCode::kHttpError);
  CHECK(run({{0, "", F::kTimeout}, {0, "", F::kTimeout}, {0, "", F::kTimeout}, {0, "", F::kTimeout}}) ==
        ErrorCode::kTimeout);
  CHECK(run({{0, "", F::kConnection}, {0, "", F::kConnection}, {0, "", F::kConnection}, {0, "", F::kConnection}}) ==
        ErrorCode::kHttpError);
  CHECK(run({{404, "", F::kNone}}) == ErrorCode::kHttpError);
}

TEST_CASE("auth header comes from the environment") {
  ::setenv("STYLEMIMIC_TEST_KEY", "sekret", 1);
  ScriptedTransport transport;
  transport.script = {{200, "ok", HttpResponse::Failure::kNone}, {200, "ok", HttpResponse::Failure::kNone}};
  HttpEndpoint endpoint;
  endpoint.url = "http://example.invalid/x";
  endpoint.api_key_env = "STYLEMIMIC_TEST_KEY";
  endpoint.auth_header = "X-Api-Key";
  endpoint.auth_prefix = "";
  Sleeper none = [](std::chrono::milliseconds) {};
  CHECK(post_with_retries(transport, endpoint, "{}", RetryPolicy{}, none) == "ok");
  CHECK(transport.seen_headers[0].at("X-Api-Key") == "sekret");
  ::setenv("STYLEMIMIC_TEST_KEY", "", 1);
  post_with_retries(transport, endpoint, "{}", RetryPolicy{}, none);
  CHECK_FALSE(transport.seen_headers[1].contains("X-Api-Key"));
  ::unsetenv("STYLEMIMIC_TEST_KEY");
}

TEST_CASE("http provider empty content") {
  auto transport = std::make_shared<ScriptedTransport>();
  transport->script = {{200, R"({"choices":[{"message":{"content":null}}]})", HttpResponse::Failure::kNone},
                       {200, R"({"choices":[{"message":{"content":""}}]})", HttpResponse::Failure::kNone},
                       {200, R"({"unexpected":true})", HttpResponse::Failure::kNone}};
  HttpEndpoint endpoint;
  endpoint.url = "http://example.invalid/x";
  HttpChatProvider provider(endpoint, RetryPolicy{}, transport, [](std::chrono::milliseconds) {});
  CHECK(code_of([&] { complete(request_for("s"), provider); }) == ErrorCode::kEmptyCompletion);
  CHECK(code_of([&] { complete(request_for("s"), provider); }) == ErrorCode::kEmptyCompletion);
  CHECK(code_of([&] { complete(request_for("s"), provider); }) == ErrorCode::kMalformedResponse);
}

TEST_CASE("detection verdicts") {
  OfflineStubDetector stub;
  const auto r = stub.detect("anything at all");
  CHECK(r.prob_human == 1.0);
  CHECK(r.verdict == Verdict::kHuman);
  CHECK(verdict_for(0.1, 0.5) == Verdict::kAi);
  CHECK(verdict_for(0.5, 0.5) == Verdict::kHuman);
  CHECK(verdict_for(0.45, 0.5, 0.1) == Verdict::kMixed);
  CHECK(verdict_for(0.45, 0.5) == Verdict::kAi);

  DetectorConfig cfg;
  const auto parsed = HttpDetector::parse_response(R"({"prob_human": 0.1})", cfg);
  CHECK(parsed.prob_human == 0.1);
  CHECK(parsed.verdict == Verdict::kAi);
  cfg.prob_human_pointer = "/documents/0/human";
  CHECK(HttpDetector::parse_response(R"({"documents":[{"human":0.9}]})", cfg).verdict == Verdict::kHuman);
  CHECK(code_of([&] { HttpDetector::parse_response("not json", cfg); }) == ErrorCode::kMalformedResponse);
  CHECK(code_of([&] { HttpDetector::parse_response(R"({"documents":[]})", cfg); }) == ErrorCode::kMalformedResponse);
  CHECK(code_of([&] { HttpDetector::parse_response(R"({"documents":[{"human":1.5}]})", cfg); }) ==
        ErrorCode::kMalformedResponse);
  CHECK(code_of([&] { HttpDetector::parse_response(R"({"documents":[{"human":"high"}]})", cfg); }) ==
        ErrorCode::kMalformedResponse);
}

TEST_CASE("percent human") {
  auto make = [](std::initializer_list<Verdict> vs) {
    std::vector<DetectionResult> out;
    for (auto v : vs) out.push_back({v == Verdict::kHuman ? 0.9 : 0.1, v});
    return out;
  };
  CHECK(percent_human(make({Verdict::kHuman, Verdict::kHuman})) == 100.0);
  CHECK(percent_human(make({Verdict::kHuman, Verdict::kAi, Verdict::kAi, Verdict::kMixed})) == 25.0);
  CHECK(code_of([] { percent_human(std::vector<DetectionResult>{}); }) == ErrorCode::kInvalidArgument);

  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<DetectionResult> results(1 + gen() % 40);
    int humans = 0;
    for (auto& r : results) {
      r.verdict = static_cast<Verdict>(gen() % 3);
      if (r.verdict == Verdict::kHuman) ++humans;
    }
    CHECK(percent_human(results) == doctest::Approx(100.0 * humans / static_cast<double>(results.size())));
  }

  OfflineStubDetector stub;
  const std::vector<std::string> texts = {"a", "b", "c"};
  CHECK(percent_human(texts, stub) == 100.0);
}

TEST_CASE("embedding response formats") {
  const auto bare = HttpEmbedder::parse_response("[[1,2],[3,4]]", 2);
  CHECK(bare == std::vector<std::vector<double>>{{1, 2}, {3, 4}});
  const auto wrapped = HttpEmbedder::parse_response(R"({"data":[{"embedding":[0.5]},{"embedding":[1.5]}]})", 2);
  CHECK(wrapped == std::vector<std::vector<double>>{{0.5}, {1.5}});
  CHECK(code_of([] { HttpEmbedder::parse_response("[[1,2]]", 2); }) == ErrorCode::kMalformedResponse);
  CHECK(code_of([] { HttpEmbedder::parse_response(R"({"data":"x"})", 1); }) == ErrorCode::kMalformedResponse);
}
