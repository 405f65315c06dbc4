#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylemimic/metrics.hpp"
#include "stylemimic/promptgen.hpp"

namespace stylemimic {

// ---------------------------------------------------------------------------
// Requests and records

struct GenerationRequest {
  std::string model_id;
  RenderedPrompt prompt;
  double temperature = 0.0;
  int max_tokens = 512;

  // Copied into the record; not part of the request digest.
  std::string condition;
  std::vector<std::string> exemplar_ids;
  std::string summary_text;
  std::string reference_id;
  std::string snippet;
  // Only mock providers read this.
  std::string reference_text;
};

struct GenerationRecord {
  std::string request_digest;
  std::string prompt_digest;
  std::string response_text;
  std::string model_id;
  std::string condition;
  std::vector<std::string> exemplar_ids;
  std::string summary_text;
  std::string reference_id;
  std::string snippet;
  bool cached = false;
  std::int64_t latency_ms = 0;
  std::string timestamp;
};

/// SHA-256 over model id, prompt digest, temperature and max_tokens. Doubles
/// as the cache key.
std::string request_digest(const GenerationRequest& request);

std::string record_to_json(const GenerationRecord& record);
/// Throws MalformedLine on schema problems.
GenerationRecord record_from_json(std::string_view line);
std::string records_to_jsonl(std::span<const GenerationRecord> records);
std::vector<GenerationRecord> records_from_jsonl(std::string_view content);

// ---------------------------------------------------------------------------
// Providers

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  /// Returns the completion text; may throw Error.
  virtual std::string complete_text(const GenerationRequest& request) = 0;
  /// Pure function of the request. Records from deterministic providers get
  /// zero latency and a fixed epoch timestamp so reruns are byte-identical.
  virtual bool deterministic() const { return false; }
};

/// Returns the request's reference text: the pipeline's correctness oracle.
class EchoReferenceProvider final : public ChatProvider {
 public:
  std::string complete_text(const GenerationRequest& request) override;
  bool deterministic() const override { return true; }
};

class FixedTemplateProvider final : public ChatProvider {
 public:
  explicit FixedTemplateProvider(std::string text) : text_(std::move(text)) {}
  std::string complete_text(const GenerationRequest& request) override;
  bool deterministic() const override { return true; }

 private:
  std::string text_;
};

/// Mock summarizer: first sentence of the reference text.
class FirstSentenceProvider final : public ChatProvider {
 public:
  std::string complete_text(const GenerationRequest& request) override;
  bool deterministic() const override { return true; }
};

/// Mock generator that samples whitespace tokens (and paragraph breaks) from
/// the writing samples embedded in the prompt, or from a generic pool when the
/// prompt has none. Length follows the prompt's "around N words". Seeded by
/// the prompt digest.
class StyleConditionedProvider final : public ChatProvider {
 public:
  explicit StyleConditionedProvider(std::vector<std::string> generic_pool);
  std::string complete_text(const GenerationRequest& request) override;
  bool deterministic() const override { return true; }

 private:
  std::vector<std::string> generic_pool_;
};

/// First sentence: up to the first run of . ! ? followed by whitespace or end.
std::string first_sentence(std::string_view text);

// ---------------------------------------------------------------------------
// HTTP

struct HttpResponse {
  enum class Failure { kNone, kTimeout, kConnection };
  int status = 0;
  std::string body;
  Failure failure = Failure::kNone;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& url, const std::map<std::string, std::string>& headers,
                                 const std::string& body, std::chrono::seconds timeout) = 0;
};

/// cpp-httplib backed transport (http and https URLs).
std::shared_ptr<HttpTransport> make_http_transport();

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{1000};
  double factor = 4.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

/// Delay before retry number `attempt` (0-based): base * factor^attempt.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt);

/// 408, 429 and 5xx are retried, as are timeouts and connection failures.
bool is_transient_status(int status);

struct HttpEndpoint {
  std::string url;
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  /// Environment variable holding the token; unset or empty sends no auth.
  std::string api_key_env = "LLM_API_KEY";
  std::chrono::seconds timeout{120};
};

/// POSTs to the endpoint, retrying transient failures per the policy, and
/// returns the final successful body. Throws HttpError, RateLimited or Timeout.
std::string post_with_retries(HttpTransport& transport, const HttpEndpoint& endpoint, const std::string& body,
                              const RetryPolicy& policy, const Sleeper& sleeper);

/// Chat-completion over JSON: {"model", "messages": [{"role": "user",
/// "content": prompt}], "temperature", "max_tokens"}; the reply is read from
/// choices[0].message.content.
class HttpChatProvider final : public ChatProvider {
 public:
  HttpChatProvider(HttpEndpoint endpoint, RetryPolicy retry, std::shared_ptr<HttpTransport> transport,
                   Sleeper sleeper = real_sleeper());
  std::string complete_text(const GenerationRequest& request) override;

  static std::string request_body(const GenerationRequest& request);

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
};

// ---------------------------------------------------------------------------
// Completion and caching

/// Calls the provider once and wraps the reply in a record.
/// Throws EmptyCompletion for blank replies.
GenerationRecord complete(const GenerationRequest& request, ChatProvider& provider);

/// Append-only JSONL cache of records keyed by request digest. Readers run
/// concurrently; appends are serialized.
class GenerationCache {
 public:
  /// In-memory only.
  GenerationCache() = default;
  /// Replays the file if it exists. Throws CacheCorrupt with the line number.
  explicit GenerationCache(std::filesystem::path path);

  std::optional<GenerationRecord> lookup(const std::string& key) const;
  /// No-op when the key is already present.
  void append(const GenerationRecord& record);
  std::size_t size() const;
  std::map<std::string, GenerationRecord> snapshot() const;

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, GenerationRecord> entries_;
};

/// Cache hit: stored reply with cached = true and this request's context, no
/// provider call. Miss: complete() then append.
GenerationRecord cached_complete(const GenerationRequest& request, ChatProvider& provider, GenerationCache& cache);

// ---------------------------------------------------------------------------
// AI-generated text detection

enum class Verdict { kHuman, kAi, kMixed };
std::string_view to_string(Verdict verdict);

struct DetectionResult {
  double prob_human = 1.0;
  Verdict verdict = Verdict::kHuman;
};

/// human if prob >= threshold, mixed if prob >= threshold - mixed_band,
/// ai otherwise.
Verdict verdict_for(double prob_human, double threshold, double mixed_band = 0.0);

class Detector {
 public:
  virtual ~Detector() = default;
  virtual DetectionResult detect(std::string_view text) = 0;
};

/// Wiring stub: every text is human with probability 1.
class OfflineStubDetector final : public Detector {
 public:
  DetectionResult detect(std::string_view text) override;
};

struct DetectorConfig {
  HttpEndpoint endpoint;
  std::string text_field = "document";
  /// JSON pointer to the probability that the text is human-written.
  std::string prob_human_pointer = "/prob_human";
  double threshold = 0.5;
  double mixed_band = 0.0;
};

/// Posts {text_field: text}; throws HttpError or MalformedResponse.
class HttpDetector final : public Detector {
 public:
  HttpDetector(DetectorConfig config, RetryPolicy retry, std::shared_ptr<HttpTransport> transport,
               Sleeper sleeper = real_sleeper());
  DetectionResult detect(std::string_view text) override;

  /// Maps a provider response body to a result.
  static DetectionResult parse_response(std::string_view body, const DetectorConfig& config);

 private:
  DetectorConfig config_;
  RetryPolicy retry_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
};

/// 100 * fraction of human verdicts. Throws InvalidArgument when empty.
double percent_human(std::span<const DetectionResult> results);
double percent_human(std::span<const std::string> texts, Detector& detector);

// ---------------------------------------------------------------------------
// Embeddings

/// Posts {"input": [texts]}; accepts either a bare array of vectors or an
/// object with "data": [{"embedding": [...]}, ...].
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(HttpEndpoint endpoint, RetryPolicy retry, std::shared_ptr<HttpTransport> transport,
               Sleeper sleeper = real_sleeper());
  std::vector<std::vector<double>> embed(std::span<const std::string> texts) override;

  static std::vector<std::vector<double>> parse_response(std::string_view body, std::size_t expected);

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
};

}  // namespace stylemimic
