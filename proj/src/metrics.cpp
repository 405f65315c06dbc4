#include "stylemimic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "stylemimic/error.hpp"
#include "stylemimic/text.hpp"

namespace stylemimic {

std::vector<std::string> metric_tokens(std::string_view text) { return normalized_words(text); }

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  if (reference.empty() || hypothesis.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(reference, hypothesis));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(hypothesis.size());
  const double r = lcs / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

std::string light_stem(std::string_view word) {
  for (std::string_view suffix : {"ing", "ed", "es", "s"}) {
    if (word.size() >= suffix.size() + 3 && word.ends_with(suffix)) {
      return std::string(word.substr(0, word.size() - suffix.size()));
    }
  }
  return std::string(word);
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

MeteorAlignment meteor_alignment(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::string> ref_exact;
  std::vector<std::string> hyp_exact;
  for (const auto& t : reference) ref_exact.push_back(lower(t));
  for (const auto& t : hypothesis) hyp_exact.push_back(lower(t));

  std::vector<std::size_t> hyp_to_ref(hypothesis.size(), kNone);
  std::vector<bool> ref_used(reference.size(), false);

  auto run_stage = [&](const std::vector<std::string>& ref_forms, const std::vector<std::string>& hyp_forms) {
    std::size_t prev = kNone;
    for (std::size_t i = 0; i < hyp_forms.size(); ++i) {
      if (hyp_to_ref[i] != kNone) {
        prev = hyp_to_ref[i];
        continue;
      }
      std::size_t chosen = kNone;
      const std::size_t next = prev == kNone ? 0 : prev + 1;
      if (prev != kNone && next < ref_forms.size() && !ref_used[next] && ref_forms[next] == hyp_forms[i]) {
        chosen = next;
      } else {
        for (std::size_t j = 0; j < ref_forms.size(); ++j) {
          if (!ref_used[j] && ref_forms[j] == hyp_forms[i]) {
            chosen = j;
            break;
          }
        }
      }
      if (chosen != kNone) {
        hyp_to_ref[i] = chosen;
        ref_used[chosen] = true;
        prev = chosen;
      }
    }
  };
  run_stage(ref_exact, hyp_exact);

  std::vector<std::string> ref_stem;
  std::vector<std::string> hyp_stem;
  for (const auto& t : ref_exact) ref_stem.push_back(light_stem(t));
  for (const auto& t : hyp_exact) hyp_stem.push_back(light_stem(t));
  run_stage(ref_stem, hyp_stem);

  MeteorAlignment out;
  std::size_t prev_i = kNone;
  std::size_t prev_j = kNone;
  for (std::size_t i = 0; i < hyp_to_ref.size(); ++i) {
    const std::size_t j = hyp_to_ref[i];
    if (j == kNone) continue;
    ++out.matches;
    const bool continues = prev_i != kNone && i == prev_i + 1 && j == prev_j + 1;
    if (!continues) ++out.chunks;
    prev_i = i;
    prev_j = j;
  }
  return out;
}

double meteor_lite(std::span<const std::string> reference, std::span<const std::string> hypothesis) {
  const auto align = meteor_alignment(reference, hypothesis);
  if (align.matches == 0) return 0.0;
  const double m = static_cast<double>(align.matches);
  const double p = m / static_cast<double>(hypothesis.size());
  const double r = m / static_cast<double>(reference.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double frag = static_cast<double>(align.chunks) / m;
  const double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

SimilarityScores similarity_scores(std::string_view reference, std::string_view hypothesis) {
  const auto ref = metric_tokens(reference);
  const auto hyp = metric_tokens(hypothesis);
  return SimilarityScores{rouge_l(ref, hyp), meteor_lite(ref, hyp), std::nullopt};
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kDimensionMismatch, "embedding dimensions differ");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

double embedding_similarity(std::string_view a, std::string_view b, Embedder& embedder) {
  const std::vector<std::string> texts{std::string(a), std::string(b)};
  auto vectors = embedder.embed(texts);
  if (vectors.size() != 2) throw Error(ErrorCode::kMalformedResponse, "expected 2 embeddings");
  return cosine_similarity(vectors[0], vectors[1]);
}

// ---------------------------------------------------------------------------
// Wilcoxon

std::string_view to_string(StatTestResult::Method method) {
  return method == StatTestResult::Method::kExact ? "exact" : "normal";
}

StatTestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, WilcoxonMethod method) {
  if (x.size() != y.size()) throw Error(ErrorCode::kLengthMismatch, "paired samples differ in length");
  if (x.empty()) throw Error(ErrorCode::kDegenerateInput, "no pairs");

  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x[i] - y[i];
    if (diff != 0.0) d.push_back(diff);
  }
  const std::size_t n = d.size();
  if (n == 0) throw Error(ErrorCode::kDegenerateInput, "all differences are zero");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });

  // Doubled ranks keep average ranks integral.
  std::vector<std::size_t> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
    const std::size_t avg2 = i + 1 + j;  // 2 * average of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = avg2;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  std::size_t w2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) w2 += rank2[i];
  }

  StatTestResult result;
  result.w_statistic = static_cast<double>(w2) / 2.0;
  result.n_effective = n;
  const bool exact = method == WilcoxonMethod::kExact || (method == WilcoxonMethod::kAuto && n <= kWilcoxonExactMaxN);

  if (exact) {
    // Distribution of the doubled positive-rank sum over all 2^n sign patterns.
    const std::size_t total2 = std::accumulate(rank2.begin(), rank2.end(), std::size_t{0});
    std::vector<double> counts(total2 + 1, 0.0);
    counts[0] = 1.0;
    std::size_t reach = 0;
    for (auto r : rank2) {
      for (std::size_t s = reach + 1; s-- > 0;) {
        if (counts[s] != 0.0) counts[s + r] += counts[s];
      }
      reach += r;
    }
    double lower = 0.0;
    double upper = 0.0;
    for (std::size_t s = 0; s <= total2; ++s) {
      if (s <= w2) lower += counts[s];
      if (s >= w2) upper += counts[s];
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(n));
    result.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / patterns);
    result.method = StatTestResult::Method::kExact;
    return result;
  }

  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  const double z = std::max(0.0, std::abs(result.w_statistic - mean) - 0.5) / std::sqrt(var);
  result.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  result.method = StatTestResult::Method::kNormal;
  return result;
}

}  // namespace stylemimic
