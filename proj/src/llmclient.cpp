#include "stylemimic/llmclient.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "stylemimic/digest.hpp"
#include "stylemimic/error.hpp"
#include "stylemimic/rng.hpp"
#include "stylemimic/text.hpp"

namespace stylemimic {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Requests and records

std::string request_digest(const GenerationRequest& request) {
  const json key = {{"model", request.model_id},
                    {"prompt_digest", request.prompt.digest},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_tokens}};
  return sha256_hex(key.dump());
}

std::string record_to_json(const GenerationRecord& r) {
  json j;
  j["request_digest"] = r.request_digest;
  j["prompt_digest"] = r.prompt_digest;
  j["response_text"] = r.response_text;
  j["model_id"] = r.model_id;
  j["condition"] = r.condition;
  j["exemplar_ids"] = r.exemplar_ids;
  j["summary_text"] = r.summary_text;
  j["reference_id"] = r.reference_id;
  j["snippet"] = r.snippet;
  j["cached"] = r.cached;
  j["latency_ms"] = r.latency_ms;
  j["timestamp"] = r.timestamp;
  return j.dump();
}

GenerationRecord record_from_json(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kMalformedLine, "record is not an object");
  try {
    GenerationRecord r;
    r.request_digest = j.at("request_digest").get<std::string>();
    r.response_text = j.at("response_text").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.prompt_digest = j.value("prompt_digest", "");
    r.condition = j.value("condition", "");
    r.exemplar_ids = j.value("exemplar_ids", std::vector<std::string>{});
    r.summary_text = j.value("summary_text", "");
    r.reference_id = j.value("reference_id", "");
    r.snippet = j.value("snippet", "");
    r.cached = j.value("cached", false);
    r.latency_ms = j.value("latency_ms", std::int64_t{0});
    r.timestamp = j.value("timestamp", "");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, e.what());
  }
}

std::string records_to_jsonl(std::span<const GenerationRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r);
    out += '\n';
  }
  return out;
}

std::vector<GenerationRecord> records_from_jsonl(std::string_view content) {
  std::vector<GenerationRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const auto line = content.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (is_blank(line)) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mock providers

std::string EchoReferenceProvider::complete_text(const GenerationRequest& request) { return request.reference_text; }

std::string FixedTemplateProvider::complete_text(const GenerationRequest&) { return text_; }

std::string first_sentence(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && is_ascii_space(text[i])) ++i;
  const std::size_t start = i;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i;
    while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
    if (j == text.size() || is_ascii_space(text[j])) return std::string(text.substr(start, j - start));
    i = j - 1;
  }
  std::size_t end = text.size();
  while (end > start && is_ascii_space(text[end - 1])) --end;
  return std::string(text.substr(start, end - start));
}

std::string FirstSentenceProvider::complete_text(const GenerationRequest& request) {
  return first_sentence(request.reference_text);
}

namespace {

constexpr std::string_view kSamplesHeading = "### Author's Writing Sample(s)";
constexpr std::size_t kMaxRun = 12;

// Texts embedded as writing samples in a rendered prompt.
std::vector<std::string> prompt_samples(std::string_view prompt) {
  std::vector<std::string> samples;
  const auto begin = prompt.find(kSamplesHeading);
  if (begin == std::string_view::npos) return samples;
  auto end = prompt.find("\n### ", begin + kSamplesHeading.size());
  if (end == std::string_view::npos) end = prompt.size();
  const auto section = prompt.substr(begin + kSamplesHeading.size(), end - begin - kSamplesHeading.size());

  static const std::regex header(R"(^Sample \d+:$)");
  std::istringstream in{std::string(section)};
  std::string line;
  std::string current;
  bool open = false;
  while (std::getline(in, line)) {
    if (std::regex_match(line, header)) {
      if (open) samples.push_back(current);
      current.clear();
      open = true;
      continue;
    }
    if (!open) continue;
    current += line;
    current += '\n';
  }
  if (open) samples.push_back(current);
  return samples;
}

int prompt_word_target(std::string_view prompt) {
  static const std::regex around(R"(around (\d+) words)");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(prompt.begin(), prompt.end(), m, around)) return std::stoi(m[1].str());
  return 100;
}

struct TokenStream {
  std::vector<std::string> tokens;
  // break_after[i]: token i ends a paragraph within its source text.
  std::vector<bool> break_after;
};

TokenStream token_stream(std::span<const std::string> texts) {
  TokenStream out;
  for (const auto& text : texts) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_ascii_space(text[i])) ++i;
      if (i == text.size()) break;
      std::size_t j = i;
      while (j < text.size() && !is_ascii_space(text[j])) ++j;
      std::size_t k = j;
      int newlines = 0;
      while (k < text.size() && is_ascii_space(text[k])) {
        if (text[k] == '\n') ++newlines;
        ++k;
      }
      out.tokens.emplace_back(text.substr(i, j - i));
      out.break_after.push_back(newlines >= 2 && k < text.size());
      i = k;
    }
  }
  return out;
}

}  // namespace

StyleConditionedProvider::StyleConditionedProvider(std::vector<std::string> generic_pool)
    : generic_pool_(std::move(generic_pool)) {}

std::string StyleConditionedProvider::complete_text(const GenerationRequest& request) {
  const std::string& prompt = request.prompt.text;
  auto samples = prompt_samples(prompt);
  const TokenStream stream = token_stream(samples.empty() ? std::span<const std::string>(generic_pool_)
                                                          : std::span<const std::string>(samples));
  if (stream.tokens.empty()) return "";

  Rng rng(mix_seed(0, sha256_hex(prompt)));
  const auto target = static_cast<std::size_t>(std::max(1, prompt_word_target(prompt)));
  std::string out;
  std::size_t emitted = 0;
  while (emitted < target) {
    // Copy short contiguous runs so sentence and paragraph shape carries over.
    std::size_t pos = rng.uniform_index(stream.tokens.size());
    const std::size_t run = 1 + rng.uniform_index(kMaxRun);
    for (std::size_t r = 0; r < run && emitted < target && pos < stream.tokens.size(); ++r, ++pos) {
      if (!out.empty()) out += r > 0 && stream.break_after[pos - 1] ? "\n\n" : " ";
      out += stream.tokens[pos];
      ++emitted;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// HTTP

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt) {
  double ms = static_cast<double>(policy.base_delay.count());
  for (int i = 0; i < attempt; ++i) ms *= policy.factor;
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

bool is_transient_status(int status) { return status == 408 || status == 429 || (status >= 500 && status <= 599); }

namespace {

std::map<std::string, std::string> auth_headers(const HttpEndpoint& endpoint) {
  std::map<std::string, std::string> headers;
  if (endpoint.api_key_env.empty()) return headers;
  const char* key = std::getenv(endpoint.api_key_env.c_str());
  if (key != nullptr && *key != '\0') headers[endpoint.auth_header] = endpoint.auth_prefix + key;
  return headers;
}

json parse_json_body(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedResponse, e.what());
  }
}

}  // namespace

std::string post_with_retries(HttpTransport& transport, const HttpEndpoint& endpoint, const std::string& body,
                              const RetryPolicy& policy, const Sleeper& sleeper) {
  const auto headers = auth_headers(endpoint);
  for (int attempt = 0;; ++attempt) {
    const HttpResponse resp = transport.post_json(endpoint.url, headers, body, endpoint.timeout);
    const bool ok = resp.failure == HttpResponse::Failure::kNone && resp.status >= 200 && resp.status < 300;
    if (ok) return resp.body;
    const bool transient = resp.failure != HttpResponse::Failure::kNone || is_transient_status(resp.status);
    if (transient && attempt < policy.max_retries) {
      sleeper(backoff_delay(policy, attempt));
      continue;
    }
    const std::string tries = " after " + std::to_string(attempt + 1) + " attempt(s)";
    switch (resp.failure) {
      case HttpResponse::Failure::kTimeout:
        throw Error(ErrorCode::kTimeout, endpoint.url + tries);
      case HttpResponse::Failure::kConnection:
        throw Error(ErrorCode::kHttpError, "connection to " + endpoint.url + " failed" + tries);
      case HttpResponse::Failure::kNone:
        break;
    }
    if (resp.status == 429) throw Error(ErrorCode::kRateLimited, endpoint.url + tries);
    throw Error(ErrorCode::kHttpError, "status " + std::to_string(resp.status) + tries);
  }
}

HttpChatProvider::HttpChatProvider(HttpEndpoint endpoint, RetryPolicy retry, std::shared_ptr<HttpTransport> transport,
                                   Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      retry_(retry),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)) {}

std::string HttpChatProvider::request_body(const GenerationRequest& request) {
  const json body = {{"model", request.model_id},
                     {"messages", json::array({{{"role", "user"}, {"content", request.prompt.text}}})},
                     {"temperature", request.temperature},
                     {"max_tokens", request.max_tokens}};
  return body.dump();
}

std::string HttpChatProvider::complete_text(const GenerationRequest& request) {
  const auto reply = post_with_retries(*transport_, endpoint_, request_body(request), retry_, sleeper_);
  const json j = parse_json_body(reply);
  const json::json_pointer content_ptr("/choices/0/message/content");
  if (!j.is_object() || !j.contains(content_ptr)) {
    throw Error(ErrorCode::kMalformedResponse, "missing choices[0].message.content");
  }
  const auto& content = j.at(content_ptr);
  if (content.is_null()) return "";
  if (!content.is_string()) throw Error(ErrorCode::kMalformedResponse, "content is not a string");
  return content.get<std::string>();
}

// ---------------------------------------------------------------------------
// Completion and caching

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void copy_context(const GenerationRequest& request, GenerationRecord& record) {
  record.condition = request.condition;
  record.exemplar_ids = request.exemplar_ids;
  record.summary_text = request.summary_text;
  record.reference_id = request.reference_id;
  record.snippet = request.snippet;
}

}  // namespace

GenerationRecord complete(const GenerationRequest& request, ChatProvider& provider) {
  if (request.max_tokens < 1) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  std::string text = provider.complete_text(request);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  if (is_blank(text)) {
    throw Error(ErrorCode::kEmptyCompletion,
                request.reference_id.empty() ? request.model_id : request.reference_id);
  }

  GenerationRecord record;
  record.request_digest = request_digest(request);
  record.prompt_digest = request.prompt.digest;
  record.response_text = std::move(text);
  record.model_id = request.model_id;
  copy_context(request, record);
  if (provider.deterministic()) {
    record.latency_ms = 0;
    record.timestamp = "1970-01-01T00:00:00Z";
  } else {
    record.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    record.timestamp = utc_now();
  }
  return record;
}

GenerationCache::GenerationCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      auto record = record_from_json(line);
      entries_.emplace(record.request_digest, std::move(record));
    } catch (const Error& e) {
      throw Error(ErrorCode::kCacheCorrupt, "line " + std::to_string(line_no) + " of " + path_->string());
    }
  }
}

std::optional<GenerationRecord> GenerationCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void GenerationCache::append(const GenerationRecord& record) {
  std::unique_lock lock(mutex_);
  if (entries_.contains(record.request_digest)) return;
  if (path_) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    std::ofstream out(*path_, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::kIoError, "cannot append to " + path_->string());
    GenerationRecord stored = record;
    stored.cached = false;
    out << record_to_json(stored) << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path_->string());
  }
  auto stored = record;
  stored.cached = false;
  entries_.emplace(stored.request_digest, std::move(stored));
}

std::size_t GenerationCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::map<std::string, GenerationRecord> GenerationCache::snapshot() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

GenerationRecord cached_complete(const GenerationRequest& request, ChatProvider& provider, GenerationCache& cache) {
  const auto key = request_digest(request);
  if (auto hit = cache.lookup(key)) {
    GenerationRecord record = std::move(*hit);
    copy_context(request, record);
    record.cached = true;
    return record;
  }
  auto record = complete(request, provider);
  cache.append(record);
  return record;
}

// ---------------------------------------------------------------------------
// Detection

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kHuman:
      return "human";
    case Verdict::kAi:
      return "ai";
    case Verdict::kMixed:
      return "mixed";
  }
  return "unknown";
}

Verdict verdict_for(double prob_human, double threshold, double mixed_band) {
  if (prob_human >= threshold) return Verdict::kHuman;
  if (mixed_band > 0.0 && prob_human >= threshold - mixed_band) return Verdict::kMixed;
  return Verdict::kAi;
}

DetectionResult OfflineStubDetector::detect(std::string_view) { return DetectionResult{1.0, Verdict::kHuman}; }

HttpDetector::HttpDetector(DetectorConfig config, RetryPolicy retry, std::shared_ptr<HttpTransport> transport,
                           Sleeper sleeper)
    : config_(std::move(config)), retry_(retry), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {}

DetectionResult HttpDetector::parse_response(std::string_view body, const DetectorConfig& config) {
  const json j = parse_json_body(body);
  json::json_pointer ptr;
  try {
    ptr = json::json_pointer(config.prob_human_pointer);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, e.what());
  }
  if (!j.contains(ptr)) throw Error(ErrorCode::kMalformedResponse, "missing " + config.prob_human_pointer);
  const auto& value = j.at(ptr);
  if (!value.is_number()) throw Error(ErrorCode::kMalformedResponse, config.prob_human_pointer + " is not a number");
  const double p = value.get<double>();
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kMalformedResponse, "probability outside [0, 1]");
  return DetectionResult{p, verdict_for(p, config.threshold, config.mixed_band)};
}

DetectionResult HttpDetector::detect(std::string_view text) {
  const json body = {{config_.text_field, std::string(text)}};
  const auto reply = post_with_retries(*transport_, config_.endpoint, body.dump(), retry_, sleeper_);
  return parse_response(reply, config_);
}

double percent_human(std::span<const DetectionResult> results) {
  if (results.empty()) throw Error(ErrorCode::kInvalidArgument, "no detection results");
  const auto human = std::count_if(results.begin(), results.end(),
                                   [](const DetectionResult& r) { return r.verdict == Verdict::kHuman; });
  return 100.0 * static_cast<double>(human) / static_cast<double>(results.size());
}

double percent_human(std::span<const std::string> texts, Detector& detector) {
  std::vector<DetectionResult> results;
  results.reserve(texts.size());
  for (const auto& t : texts) results.push_back(detector.detect(t));
  return percent_human(results);
}

// ---------------------------------------------------------------------------
// Embeddings

HttpEmbedder::HttpEmbedder(HttpEndpoint endpoint, RetryPolicy retry, std::shared_ptr<HttpTransport> transport,
                           Sleeper sleeper)
    : endpoint_(std::move(endpoint)),
      retry_(retry),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)) {}

std::vector<std::vector<double>> HttpEmbedder::parse_response(std::string_view body, std::size_t expected) {
  const json j = parse_json_body(body);
  json rows;
  if (j.is_array()) {
    rows = j;
  } else if (j.is_object() && j.contains("data") && j["data"].is_array()) {
    rows = json::array();
    for (const auto& item : j["data"]) {
      if (!item.is_object() || !item.contains("embedding")) {
        throw Error(ErrorCode::kMalformedResponse, "data item without embedding");
      }
      rows.push_back(item["embedding"]);
    }
  } else {
    throw Error(ErrorCode::kMalformedResponse, "unrecognized embedding response");
  }
  if (rows.size() != expected) {
    throw Error(ErrorCode::kMalformedResponse,
                "expected " + std::to_string(expected) + " embeddings, got " + std::to_string(rows.size()));
  }
  std::vector<std::vector<double>> out;
  for (const auto& row : rows) {
    if (!row.is_array()) throw Error(ErrorCode::kMalformedResponse, "embedding is not an array");
    auto& vec = out.emplace_back();
    for (const auto& v : row) {
      if (!v.is_number()) throw Error(ErrorCode::kMalformedResponse, "non-numeric embedding value");
      vec.push_back(v.get<double>());
    }
  }
  return out;
}

std::vector<std::vector<double>> HttpEmbedder::embed(std::span<const std::string> texts) {
  const json body = {{"input", std::vector<std::string>(texts.begin(), texts.end())}};
  const auto reply = post_with_retries(*transport_, endpoint_, body.dump(), retry_, sleeper_);
  return parse_response(reply, texts.size());
}

}  // namespace stylemimic
