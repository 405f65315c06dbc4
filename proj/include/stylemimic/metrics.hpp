#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stylemimic {

/// Tokens compared by the similarity metrics: whitespace tokens, lowercased,
/// stripped of surrounding punctuation, empties dropped.
std::vector<std::string> metric_tokens(std::string_view text);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// ROUGE-L F1 (beta = 1) over the longest common subsequence. 0 when either
/// side is empty or nothing is shared.
double rouge_l(std::span<const std::string> reference, std::span<const std::string> hypothesis);

/// Strips one of the suffixes "ing", "ed", "es", "s" when at least three
/// characters remain.
std::string light_stem(std::string_view word);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

/// Two-stage unigram alignment (exact lowercase, then light stem). Each
/// hypothesis token, left to right, takes the reference position directly
/// after the previous match when it fits, otherwise the first free one.
MeteorAlignment meteor_alignment(std::span<const std::string> reference, std::span<const std::string> hypothesis);

/// Fmean = 10PR / (R + 9P), penalty = 0.5 (chunks / m)^3,
/// score = Fmean (1 - penalty); 0 without matches.
double meteor_lite(std::span<const std::string> reference, std::span<const std::string> hypothesis);

struct SimilarityScores {
  double rouge_l = 0.0;
  double meteor = 0.0;
  std::optional<double> embedding_cos;
};

SimilarityScores similarity_scores(std::string_view reference, std::string_view hypothesis);

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// One vector per input text.
  virtual std::vector<std::vector<double>> embed(std::span<const std::string> texts) = 0;
};

/// Throws ZeroVector or DimensionMismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double embedding_similarity(std::string_view a, std::string_view b, Embedder& embedder);

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test

inline constexpr std::size_t kWilcoxonExactMaxN = 25;

enum class WilcoxonMethod { kAuto, kExact, kNormal };

struct StatTestResult {
  enum class Method { kExact, kNormal };
  double w_statistic = 0.0;  // sum of ranks of positive differences
  std::size_t n_effective = 0;
  double p_value = 1.0;  // two-sided
  Method method = Method::kExact;
};

std::string_view to_string(StatTestResult::Method method);

/// Paired two-sided test on d = x - y. Zero differences are dropped, ties
/// get average ranks. kAuto uses the exact null distribution for
/// n_effective <= 25 and the tie-corrected normal approximation with a 0.5
/// continuity correction above that.
/// Throws LengthMismatch or DegenerateInput (no nonzero differences).
StatTestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                    WilcoxonMethod method = WilcoxonMethod::kAuto);

}  // namespace stylemimic
