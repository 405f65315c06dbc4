#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "stylemimic/authorship.hpp"
#include "stylemimic/corpus.hpp"
#include "stylemimic/exemplar.hpp"
#include "stylemimic/features.hpp"
#include "stylemimic/llmclient.hpp"
#include "stylemimic/metrics.hpp"
#include "stylemimic/stylemodel.hpp"

namespace stylemimic {

// ---------------------------------------------------------------------------
// Configuration

enum class Condition { kFewshot, kZeroshot, kLenCtrl, kSimCtrl, kSnippet, kQuantity };

std::string_view to_string(Condition condition);
/// Accepts "fewshot", "zeroshot", "len_ctrl", "sim_ctrl", "snippet", "quantity".
Condition parse_condition(std::string_view name);

/// Tag stored on records: "fewshot_5", "zeroshot", "len_ctrl_5", "sim_ctrl_5",
/// "snippet_5", "quantity_<n>".
std::string condition_tag(Condition condition, std::size_t k);

inline constexpr std::string_view kHumanBaseline = "human";
inline constexpr std::size_t kMinClusterSupport = 5;

struct RunConfig {
  std::string dataset = "corpus";
  SplitConfig split;
  Condition condition = Condition::kFewshot;
  std::size_t k = 5;
  std::vector<std::size_t> quantity_sizes{2, 4, 6, 8, 10};
  std::vector<std::string> model_ids{"mock"};
  std::string summarizer_model = "mock-summarizer";
  std::uint64_t seed = 0;
  std::optional<std::size_t> test_per_author;
  std::size_t concurrency = 4;
  double temperature = 0.0;
  /// Unset: 2 * num_words.
  std::optional<int> max_tokens;
};

/// Runs fn(0..n-1) on up to `bound` threads. The exception of the lowest
/// failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t bound, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Pipeline stages

/// Summaries keyed by test sample id. EmptyCompletion names the sample.
std::map<std::string, std::string> summarize_testset(const Corpus& test, ChatProvider& provider,
                                                     GenerationCache& cache, const std::string& model_id,
                                                     std::size_t concurrency = 4);

std::string summaries_to_jsonl(const std::map<std::string, std::string>& summaries);
std::map<std::string, std::string> summaries_from_jsonl(std::string_view content);

/// Per-author topic clusters over train and test texts.
std::map<std::string, ClusterModel> fit_author_clusters(const CorpusSplit& split, std::uint64_t seed);

/// Seeded choice of per_author test samples for every author. With
/// require_cluster_support only samples whose cluster holds at least 5 train
/// samples are eligible. Throws InsufficientEligibleSamples.
Corpus subsample_testset(const CorpusSplit& split, std::size_t per_author, std::uint64_t seed,
                         bool require_cluster_support);

struct GenerationInputs {
  const Corpus* train = nullptr;
  const Corpus* test = nullptr;
  const std::map<std::string, std::string>* summaries = nullptr;
  /// Needed for sim_ctrl only.
  const std::map<std::string, ClusterModel>* clusters = nullptr;
};

/// One request per (test sample, model), or one per size for quantity runs,
/// in test-corpus order then model order then size.
std::vector<GenerationRequest> build_requests(const GenerationInputs& inputs, const RunConfig& config);

/// Executes the requests through the cache. Output order equals request order.
std::vector<GenerationRecord> run_condition(const GenerationInputs& inputs, const RunConfig& config,
                                            ChatProvider& provider, GenerationCache& cache);

/// Text scored for a record: the response with any leading copies of the
/// provided snippet removed.
std::string evaluation_text(const GenerationRecord& record);

// ---------------------------------------------------------------------------
// Evaluators

struct EvaluatorConfig {
  LogisticHyper logistic;
  std::size_t delta_words = 150;
  DistanceKind av_distance = DistanceKind::kCosine;
  std::size_t av_calibration_pairs = 400;
  double shrinkage = kDefaultShrinkage;
  double ridge = kDefaultRidge;
  std::uint64_t seed = 0;
};

struct Evaluators {
  FeatureSchema schema;
  ScalingParams scaling;
  StyleGallery gallery;
  std::vector<AAModel> aa_models;
  AVModel av;
  /// Ids of every text read while fitting.
  std::set<std::string> provenance;
};

/// Fits scaling, style gallery, both AA variants and the AV threshold on
/// train texts only. Calibration uses av_calibration_pairs pairs, or the
/// largest smaller count the train side can fill at 4:6.
Evaluators fit_evaluators(const Corpus& train, const EvaluatorConfig& config = {});

/// Throws TrainTestLeak if any test id was read at fit time.
void check_hygiene(const Evaluators& evaluators, const Corpus& test);

std::vector<double> scaled_features(const Evaluators& evaluators, std::string_view text);

// ---------------------------------------------------------------------------
// Reports

struct ReportCell {
  std::string dataset;
  std::string model_id;
  std::string condition;
  std::size_t n_records = 0;
  double av_accuracy = 0.0;
  double aa_top5_accuracy = 0.0;
  double style_match_accuracy = 0.0;
  double percent_human = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  std::optional<double> embedding_cos;
  std::map<std::string, double> author_distances;
};

struct Comparison {
  std::string dataset;
  std::string model_id;
  std::string condition_a;
  std::string condition_b;
  std::optional<StatTestResult> test;  // empty when the two sides do not differ
  std::string note;
};

struct EvaluationReport {
  std::string manifest_digest;
  std::vector<ReportCell> cells;
  std::vector<Comparison> comparisons;
};

struct EvaluationServices {
  Detector* detector = nullptr;  // defaults to the offline stub
  Embedder* embedder = nullptr;  // embedding similarity skipped when null
};

/// One cell per (model, condition) found in the records, in sorted order.
/// Records are canonically ordered first, so the result does not depend on
/// their order. Throws MissingReference or TrainTestLeak.
std::vector<ReportCell> evaluate_generations(std::span<const GenerationRecord> records, const Corpus& test,
                                             const Evaluators& evaluators, const std::string& dataset,
                                             const EvaluationServices& services = {});

/// Scores the human test texts themselves (model and condition "human").
/// AV accuracy here is over up to av_pairs test pairs at the 4:6 ratio.
ReportCell evaluate_human_baseline(const Corpus& test, const Evaluators& evaluators, const std::string& dataset,
                                   const EvaluationServices& services = {}, std::size_t av_pairs = 400,
                                   std::uint64_t seed = 0);

/// Paired Wilcoxon on per-author average distances for every (dataset, model)
/// present in both reports. Baseline cells are skipped. Throws
/// AuthorSetMismatch.
std::vector<Comparison> compare_conditions(const EvaluationReport& a, const EvaluationReport& b);

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(std::string_view document);

/// Files written by emit_report.
struct ReportFiles {
  std::filesystem::path metrics_csv;
  std::filesystem::path summary_txt;
  std::filesystem::path author_csv;
  std::filesystem::path comparisons_csv;
};

std::string metrics_csv(const EvaluationReport& report);
std::string summary_table(const EvaluationReport& report);
std::string author_distances_csv(const EvaluationReport& report);
std::string comparisons_csv(const EvaluationReport& report);
/// Throws IoError.
ReportFiles emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// End to end

/// JSON manifest of the run: configuration, template and schema digests,
/// split and record digests.
std::string run_manifest(const RunConfig& config, const CorpusSplit& split, const Corpus& test_subset,
                         std::span<const GenerationRecord> records, const std::string& schema_id);

struct PipelineServices {
  ChatProvider* generator = nullptr;
  ChatProvider* summarizer = nullptr;
  GenerationCache* cache = nullptr;
  EvaluationServices evaluation;
};

struct PipelineResult {
  CorpusSplit split;
  Corpus test_subset;
  std::map<std::string, std::string> summaries;
  std::vector<GenerationRecord> records;
  EvaluationReport report;
  Evaluators evaluators;
};

/// split, optional subsample, summarize, generate, fit evaluators, evaluate
/// (with the human baseline) and, when out_dir is non-empty, write all
/// artifacts there.
PipelineResult run_pipeline(const Corpus& corpus, const RunConfig& config, const PipelineServices& services,
                            const EvaluatorConfig& evaluator_config = {}, const std::filesystem::path& out_dir = {});

}  // namespace stylemimic
