// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any
// failure. Every check runs offline against mock providers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "stylemimic/authorship.hpp"
#include "stylemimic/corpus.hpp"
#include "stylemimic/error.hpp"
#include "stylemimic/exemplar.hpp"
#include "stylemimic/llmclient.hpp"
#include "stylemimic/metrics.hpp"
#include "stylemimic/orchestrator.hpp"
#include "stylemimic/promptgen.hpp"
#include "stylemimic/rng.hpp"
#include "stylemimic/stylemodel.hpp"
#include "stylemimic/synthetic.hpp"
#include "stylemimic/text.hpp"

namespace fs = std::filesystem;
using namespace stylemimic;

namespace {

const fs::path kSource = STYLEMIMIC_SOURCE_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void expect(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += what;
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Corpus bundled_corpus() { return ingest_jsonl(kSource / "data" / "synthetic_corpus.jsonl"); }

// --- 1 ---------------------------------------------------------------------

Outcome evaluator_sanity() {
  Outcome o;
  const Corpus corpus = bundled_corpus();
  expect(o, corpus.authors().size() == 10 && corpus.size() == 400, "bundled corpus is not 10 x 40");
  SplitConfig sc;
  sc.seed = 1;
  sc.top_n_authors = 10;
  const auto split = prepare_split(corpus, sc);
  const auto ev = fit_evaluators(split.train);

  std::vector<LabeledInput> inputs;
  for (const auto& s : split.test.samples()) inputs.push_back({s.author_id, s.text, scaled_features(ev, s.text)});
  const double top5 = topk_accuracy(ev.aa_models, inputs, 5);
  const double top1 = topk_accuracy(ev.aa_models, inputs, 1);
  const auto cell = evaluate_human_baseline(split.test, ev, "synthetic");

  expect(o, top5 >= 0.95, "AA top-5 " + fmt(top5) + " < 0.95");
  expect(o, top1 >= 0.60, "AA top-1 " + fmt(top1) + " < 0.60");
  expect(o, cell.av_accuracy >= 0.90, "AV " + fmt(cell.av_accuracy) + " < 0.90");
  expect(o, cell.style_match_accuracy >= 0.80, "style " + fmt(cell.style_match_accuracy) + " < 0.80");
  expect(o, std::abs(cell.aa_top5_accuracy - top5) < 1e-12, "baseline cell disagrees with direct top-5");
  if (o.pass) {
    o.detail = "AA@5 " + fmt(top5) + ", AA@1 " + fmt(top1) + ", AV " + fmt(cell.av_accuracy) + ", style " +
               fmt(cell.style_match_accuracy);
  }
  return o;
}

// --- 2 ---------------------------------------------------------------------

Outcome mahalanobis_correctness() {
  Outcome o;
  constexpr int kDim = 16;
  Rng rng(2);
  Eigen::VectorXd mu(kDim);
  Eigen::VectorXd var(kDim);
  for (int i = 0; i < kDim; ++i) {
    mu[i] = rng.normal();
    var[i] = 0.25 + 4.0 * rng.uniform01();
  }
  const StyleModel identity("a", mu, Eigen::MatrixXd::Identity(kDim, kDim), 0.0, 1e-6, 10);
  const StyleModel diagonal("b", mu, var.asDiagonal().toDenseMatrix(), 1.0, 1e-6, 10);

  double worst_identity = 0.0;
  double worst_diagonal = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(kDim);
    double euclid = 0.0;
    double weighted = 0.0;
    for (int i = 0; i < kDim; ++i) {
      x[i] = mu[i] + 3.0 * rng.normal();
      const double d = x[i] - mu[i];
      euclid += d * d;
      weighted += d * d / var[i];
    }
    worst_identity = std::max(worst_identity, std::abs(mahalanobis(x, identity) - std::sqrt(euclid)));
    worst_diagonal = std::max(worst_diagonal, std::abs(mahalanobis(x, diagonal) - std::sqrt(weighted)));
  }
  const std::vector<double> at_mean(mu.data(), mu.data() + kDim);
  expect(o, worst_identity <= 1e-9, "identity deviation " + fmt(worst_identity));
  expect(o, worst_diagonal <= 1e-9, "diagonal deviation " + fmt(worst_diagonal));
  expect(o, mahalanobis(at_mean, identity) == 0.0 && mahalanobis(at_mean, diagonal) == 0.0, "x = mu is not 0");
  if (o.pass) o.detail = "max |delta| identity " + fmt(worst_identity) + ", diagonal " + fmt(worst_diagonal);
  return o;
}

// --- 3 ---------------------------------------------------------------------

bool is_subsequence(const std::vector<std::string>& sub, const std::vector<std::string>& seq) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i) {
    if (seq[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

// Longest subsequence of `a` (any of 2^|a| masks) that is also one of `b`.
std::size_t brute_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

double oracle_rouge(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  if (ref.empty() || hyp.empty()) return 0.0;
  const auto lcs = static_cast<double>(brute_lcs(ref, hyp));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(hyp.size());
  const double r = lcs / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

Outcome rouge_oracle() {
  Outcome o;
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  Rng rng(3);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    std::vector<std::string> ref(rng.uniform_index(13));
    std::vector<std::string> hyp(rng.uniform_index(13));
    for (auto& w : ref) w = vocab[rng.uniform_index(vocab.size())];
    for (auto& w : hyp) w = vocab[rng.uniform_index(vocab.size())];
    if (rouge_l(ref, hyp) != oracle_rouge(ref, hyp)) ++mismatches;
  }
  expect(o, mismatches == 0, std::to_string(mismatches) + " of 200 differ from the oracle");
  const auto ref = metric_tokens("the cat sat on the mat");
  const auto hyp = metric_tokens("the cat on mat");
  const double f = rouge_l(ref, hyp);
  expect(o, lcs_length(ref, hyp) == 4, "worked example LCS is not 4");
  expect(o, f == 2.0 * 1.0 * (2.0 / 3.0) / (1.0 + 2.0 / 3.0) && std::abs(f - 0.8) < 1e-15,
         "worked example F1 " + fmt(f));
  if (o.pass) o.detail = "200/200 exact, worked example F1 " + fmt(f);
  return o;
}

// --- 4 ---------------------------------------------------------------------

// Two-sided p from the full list of 2^n sign patterns with average ranks.
double enumerated_p(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0.0;
    double equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) less += 1.0;
      if (std::abs(d[j]) == std::abs(d[i])) equal += 1.0;
    }
    rank[i] = less + (equal + 1.0) / 2.0;
  }
  double w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) w += rank[i];
  }
  double lower = 0.0;
  double upper = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) s += rank[i];
    }
    if (s <= w + 1e-9) lower += 1.0;
    if (s >= w - 1e-9) upper += 1.0;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / std::ldexp(1.0, static_cast<int>(n)));
}

Outcome wilcoxon_oracle() {
  Outcome o;
  Rng rng(4);
  int exact_bad = 0;
  int done = 0;
  while (done < 100) {
    const std::size_t n = 1 + rng.uniform_index(10);
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse values so ties and zero differences occur.
      x[i] = static_cast<double>(rng.uniform_index(7));
      y[i] = static_cast<double>(rng.uniform_index(7));
    }
    bool nonzero = false;
    for (std::size_t i = 0; i < n; ++i) nonzero = nonzero || x[i] != y[i];
    if (!nonzero) continue;
    ++done;
    const auto r = wilcoxon_signed_rank(x, y);
    if (r.method != StatTestResult::Method::kExact || std::abs(r.p_value - enumerated_p(x, y)) > 1e-12) ++exact_bad;
  }
  expect(o, exact_bad == 0, std::to_string(exact_bad) + " of 100 exact p-values differ");

  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(25);
    std::vector<double> y(25);
    const double shift = 0.6 * rng.uniform01();
    for (std::size_t i = 0; i < 25; ++i) {
      x[i] = rng.normal() + shift;
      y[i] = rng.normal();
    }
    const double exact = wilcoxon_signed_rank(x, y, WilcoxonMethod::kExact).p_value;
    const double normal = wilcoxon_signed_rank(x, y, WilcoxonMethod::kNormal).p_value;
    worst = std::max(worst, std::abs(exact - normal));
  }
  expect(o, worst <= 0.01, "normal vs exact at n = 25 differs by " + fmt(worst));
  if (o.pass) o.detail = "100/100 exact, max |dp| at n = 25 " + fmt(worst);
  return o;
}

// --- 5 ---------------------------------------------------------------------

Outcome logistic_gradient() {
  Outcome o;
  constexpr int kAuthors = 3;
  constexpr int kFeatures = 12;
  constexpr int kSamples = 30;
  Rng rng(5);
  Eigen::MatrixXd x(kSamples, kFeatures);
  std::vector<int> labels(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    labels[i] = i % kAuthors;
    for (int j = 0; j < kFeatures; ++j) x(i, j) = rng.normal() + (j % kAuthors == labels[i] ? 1.0 : 0.0);
  }
  const LogisticObjective objective(x, labels, kAuthors, 1e-2);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd params(objective.n_params());
    for (auto& p : params) p = 0.5 * rng.normal();
    const Eigen::VectorXd analytic = objective.gradient(params);
    Eigen::VectorXd numeric(params.size());
    constexpr double h = 1e-5;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      Eigen::VectorXd plus = params;
      Eigen::VectorXd minus = params;
      plus[i] += h;
      minus[i] -= h;
      numeric[i] = (objective.loss(plus) - objective.loss(minus)) / (2.0 * h);
    }
    const double rel = (analytic - numeric).norm() / std::max(analytic.norm(), numeric.norm());
    worst = std::max(worst, rel);
  }
  expect(o, worst < 1e-4, "relative error " + fmt(worst));
  if (o.pass) o.detail = "max relative error " + fmt(worst);
  return o;
}

// --- 6 ---------------------------------------------------------------------

std::vector<std::string> sorted_files(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

Outcome echo_oracle() {
  Outcome o;
  const Corpus corpus = bundled_corpus();
  const fs::path base = fs::temp_directory_path() / ("stylemimic_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);

  RunConfig config;
  config.dataset = "synthetic";
  config.split.seed = 6;
  config.split.top_n_authors = 10;
  config.seed = 6;
  config.model_ids = {"echo"};

  std::vector<fs::path> dirs;
  std::vector<PipelineResult> results;
  for (std::size_t bound : {1, 4}) {
    config.concurrency = bound;
    const fs::path dir = base / ("run_" + std::to_string(bound));
    EchoReferenceProvider echo;
    FirstSentenceProvider summarizer;
    // The cache lists records in completion order, so it lives outside the
    // compared output directory.
    GenerationCache cache(base / ("cache_" + std::to_string(bound) + ".jsonl"));
    const PipelineServices services{&echo, &summarizer, &cache, {}};
    results.push_back(run_pipeline(corpus, config, services, {}, dir));
    dirs.push_back(dir);
  }

  const auto& result = results.front();
  const ReportCell* echo_cell = nullptr;
  for (const auto& c : result.report.cells) {
    if (c.model_id == "echo") echo_cell = &c;
  }
  expect(o, echo_cell != nullptr, "no echo cell");
  if (echo_cell != nullptr) {
    // Baseline computed here from the test texts, outside the pipeline.
    const auto ev = fit_evaluators(result.split.train);
    std::vector<LabeledVector> human;
    for (const auto& s : result.test_subset.samples()) human.push_back({s.author_id, scaled_features(ev, s.text)});
    const double baseline = style_match_accuracy(ev.gallery, human);
    expect(o, echo_cell->av_accuracy == 1.0, "AV accuracy " + fmt(echo_cell->av_accuracy));
    expect(o, echo_cell->style_match_accuracy == baseline,
           "style " + fmt(echo_cell->style_match_accuracy) + " != baseline " + fmt(baseline));
    if (o.pass) o.detail = "AV 1, style " + fmt(baseline) + " = human baseline";
  }

  const auto names_a = sorted_files(dirs[0]);
  expect(o, names_a == sorted_files(dirs[1]), "runs wrote different file sets");
  int differing = 0;
  for (const auto& name : names_a) {
    if (read_file(dirs[0] / name) != read_file(dirs[1] / name)) ++differing;
  }
  expect(o, differing == 0, std::to_string(differing) + " output files differ between runs");
  if (o.pass) o.detail += ", " + std::to_string(names_a.size()) + " files byte-identical across runs";
  fs::remove_all(base);
  return o;
}

// --- 7 ---------------------------------------------------------------------

Outcome fewshot_vs_zeroshot() {
  Outcome o;
  SyntheticConfig sc;
  sc.num_authors = 20;
  sc.samples_per_author = 40;
  sc.seed = 7;
  const Corpus corpus = generate_synthetic_corpus(sc);

  RunConfig config;
  config.dataset = "synthetic20";
  config.split.seed = 7;
  config.split.top_n_authors = 20;
  config.seed = 7;
  config.model_ids = {"style-mock"};
  config.test_per_author = 10;

  const auto split = prepare_split(corpus, config.split);
  std::vector<std::string> pool;
  for (const auto& s : split.train.samples()) pool.push_back(s.text);

  std::vector<EvaluationReport> reports;
  for (Condition c : {Condition::kFewshot, Condition::kZeroshot}) {
    config.condition = c;
    StyleConditionedProvider generator(pool);
    FirstSentenceProvider summarizer;
    GenerationCache cache;
    const PipelineServices services{&generator, &summarizer, &cache, {}};
    reports.push_back(run_pipeline(corpus, config, services).report);
  }
  const auto comparisons = compare_conditions(reports[0], reports[1]);
  expect(o, comparisons.size() == 1 && comparisons[0].test.has_value(), "no comparison produced");
  if (!o.pass) return o;

  const auto& t = *comparisons[0].test;
  const double n = static_cast<double>(t.n_effective);
  const bool few_lower = t.w_statistic < n * (n + 1.0) / 4.0;
  int lower_authors = 0;
  const ReportCell* few = nullptr;
  const ReportCell* zero = nullptr;
  for (const auto& c : reports[0].cells) {
    if (c.condition != kHumanBaseline) few = &c;
  }
  for (const auto& c : reports[1].cells) {
    if (c.condition != kHumanBaseline) zero = &c;
  }
  for (const auto& [author, d] : few->author_distances) {
    if (d < zero->author_distances.at(author)) ++lower_authors;
  }
  expect(o, few->author_distances.size() == 20, "expected 20 authors");
  expect(o, few_lower, "5-shot distances are not lower");
  expect(o, t.p_value < 0.01, "p = " + fmt(t.p_value));
  if (o.pass) {
    o.detail = "5-shot lower for " + std::to_string(lower_authors) + "/20 authors, W " + fmt(t.w_statistic) + ", p " +
               fmt(t.p_value) + " (" + std::string(to_string(t.method)) + ")";
  }
  return o;
}

// --- 8 ---------------------------------------------------------------------

Outcome prompt_fidelity() {
  Outcome o;
  const fs::path golden = kSource / "tests" / "fixtures" / "golden";
  verify_template_assets(kSource / "assets" / "templates");
  const std::vector<std::string> two = {"I went to the market today, and it rained.", "Honestly? The bread was stale."};
  const std::vector<std::string> one = {two[0]};
  const std::pair<std::string, std::string> cases[] = {
      {"summarize.txt", render_summarize("The harbor was quiet that morning. Gulls circled the empty piers.").text},
      {"fewshot.txt", render_fewshot(two, "A trip to a bakery goes wrong.", "blog post", 150).text},
      {"zeroshot.txt", render_zeroshot("A trip to a bakery goes wrong.", "news article", 300).text},
      {"snippet.txt",
       render_snippet_prompt(one, "A trip to a bakery goes wrong.", "forum post", 200, "So there I was,").text},
  };
  for (const auto& [file, rendered] : cases) {
    const auto expected = read_file(golden / file);
    expect(o, !expected.empty() && rendered == expected, file + " differs from golden");
    expect(o, rendered.ends_with("Begin your response below:"), file + " lacks the terminator");
  }
  if (o.pass) o.detail = "4/4 templates byte-identical";
  return o;
}

// --- 9 ---------------------------------------------------------------------

Outcome av_ratio() {
  Outcome o;
  SyntheticConfig sc;
  sc.num_authors = 8;
  sc.samples_per_author = 12;
  sc.min_words = 20;
  sc.max_words = 40;
  const Corpus corpus = generate_synthetic_corpus(sc);
  int bad = 0;
  for (std::size_t n = 1; n <= 200; ++n) {
    const auto pairs = build_av_pairs(corpus, n, n);
    const auto expected_pos = static_cast<std::size_t>(std::floor(0.4 * static_cast<double>(n) + 0.5));
    std::size_t pos = 0;
    std::set<std::pair<std::string, std::string>> seen;
    bool consistent = pairs.size() == n;
    for (const auto& p : pairs) {
      const bool same = corpus.at(p.id_a).author_id == corpus.at(p.id_b).author_id;
      if (p.label == AVLabel::kSame) ++pos;
      consistent = consistent && p.id_a != p.id_b && same == (p.label == AVLabel::kSame);
      consistent = consistent && seen.insert(std::minmax(p.id_a, p.id_b)).second;
    }
    if (!consistent || pos != expected_pos || n - pos != n - expected_pos) ++bad;
  }
  expect(o, bad == 0, std::to_string(bad) + " of 200 pair sets off ratio");
  if (o.pass) o.detail = "n_pairs 1..200 all at 4:6";
  return o;
}

// --- 10 --------------------------------------------------------------------

Outcome snippet_rule() {
  Outcome o;
  int bad = 0;
  std::string text;
  for (std::size_t n = 1; n <= 2000; ++n) {
    text += (n == 1 ? "" : (n % 7 == 0 ? "\n" : " "));
    text += "w" + std::to_string(n);
    const std::size_t expected = std::max<std::size_t>(1, std::min<std::size_t>(50, (2 * n) / 10));
    const std::string snippet = extract_snippet(text);
    const auto words = tokenize_words(snippet);
    bool ok = words.size() == expected;
    for (std::size_t i = 0; ok && i < words.size(); ++i) ok = words[i] == "w" + std::to_string(i + 1);
    if (!ok) ++bad;
  }
  expect(o, bad == 0, std::to_string(bad) + " lengths wrong");
  if (o.pass) o.detail = "n 1..2000 all match min(50, floor(0.2 n)) >= 1";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "evaluator sanity on the bundled synthetic corpus", 60, evaluator_sanity},
      {2, "Mahalanobis correctness", 5, mahalanobis_correctness},
      {3, "ROUGE-L against brute-force LCS", 5, rouge_oracle},
      {4, "Wilcoxon exact and normal paths", 30, wilcoxon_oracle},
      {5, "logistic AA gradient vs finite differences", 5, logistic_gradient},
      {6, "echo-reference end-to-end oracle", 60, echo_oracle},
      {7, "few-shot vs zero-shot Mahalanobis discrimination", 120, fewshot_vs_zeroshot},
      {8, "prompt fidelity against golden files", 1, prompt_fidelity},
      {9, "AV pair 4:6 ratio", 5, av_ratio},
      {10, "snippet length rule", 5, snippet_rule},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.budget_s) {
      outcome.pass = false;
      outcome.detail += "; runtime " + fmt(seconds) + " s over budget " + fmt(c.budget_s) + " s";
    }
    if (!outcome.pass) ++failures;
    std::printf("%s criterion %d: %s (%.2f s) - %s\n", outcome.pass ? "PASS" : "FAIL", c.id, c.name, seconds,
                outcome.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
