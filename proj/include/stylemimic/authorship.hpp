#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "stylemimic/corpus.hpp"
#include "stylemimic/stylemodel.hpp"

namespace stylemimic {

// ---------------------------------------------------------------------------
// Attribution

struct LogisticHyper {
  double learning_rate = 0.05;
  int epochs = 400;
  double l2 = 1e-3;
};

/// Multinomial logistic regression over scaled feature vectors.
struct LogisticAA {
  std::vector<std::string> authors;  // ascending; row order of weights
  Eigen::MatrixXd weights;           // authors x features
  Eigen::VectorXd bias;
};

/// Burrows' Delta over the most frequent words of the training corpus.
struct DeltaAA {
  std::vector<std::string> authors;  // ascending
  std::vector<std::string> words;
  std::vector<double> corpus_means;
  std::vector<double> corpus_stds;
  std::vector<std::vector<double>> author_means;  // authors x words
};

using AAModel = std::variant<LogisticAA, DeltaAA>;

std::string_view variant_name(const AAModel& model);

/// Softmax cross-entropy averaged over samples plus (l2 / 2) * ||W||^2.
/// Parameters are flattened as W row-major followed by the bias.
class LogisticObjective {
 public:
  LogisticObjective(Eigen::MatrixXd features, std::vector<int> labels, int n_classes, double l2);

  double loss(const Eigen::VectorXd& params) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& params) const;
  Eigen::Index n_params() const noexcept { return n_classes_ * (features_.cols() + 1); }

 private:
  Eigen::MatrixXd probabilities(const Eigen::VectorXd& params) const;

  Eigen::MatrixXd features_;  // samples x features
  std::vector<int> labels_;
  int n_classes_;
  double l2_;
};

/// Full-batch gradient descent from zero parameters. Samples are put in a
/// canonical order first so the result does not depend on input order.
/// Throws DegenerateLabels (fewer than 2 authors or an author with < 2 samples).
LogisticAA train_logistic_aa(std::span<const LabeledVector> data, const LogisticHyper& hyper = {},
                             std::vector<double>* loss_history = nullptr);

/// Throws EmptyCorpus. M larger than the vocabulary uses the whole vocabulary.
DeltaAA train_delta_aa(const Corpus& train, std::size_t top_words);

/// What a model may look at: Delta reads the text, logistic the scaled vector.
struct AAInput {
  std::string_view text;
  std::span<const double> scaled;
};

struct RankedPrediction {
  std::vector<std::pair<std::string, double>> ranking;  // descending score, ties by author id
};

std::vector<std::pair<std::string, double>> score_authors(const AAModel& model, const AAInput& input);
RankedPrediction predict_topk(const AAModel& model, const AAInput& input, std::size_t k);

struct LabeledInput {
  std::string author_id;
  std::string text;
  std::vector<double> scaled;
};

double topk_accuracy(const AAModel& model, std::span<const LabeledInput> data, std::size_t k);
/// Mean of the per-model accuracies.
double topk_accuracy(std::span<const AAModel> models, std::span<const LabeledInput> data, std::size_t k);

std::string aa_model_to_json(const AAModel& model);
AAModel aa_model_from_json(std::string_view document);

// ---------------------------------------------------------------------------
// Verification

enum class DistanceKind { kCosine, kEuclidean };
enum class AVLabel { kSame, kDifferent };

std::string_view to_string(DistanceKind kind);
DistanceKind parse_distance_kind(std::string_view name);

struct AVPair {
  std::string id_a;
  std::string id_b;
  AVLabel label = AVLabel::kSame;
};

/// round-half-up of 0.4 * n_pairs.
std::size_t av_positive_count(std::size_t n_pairs);

/// Uniformly sampled same-author and different-author pairs at 4:6, with no
/// repeated unordered pair. Throws InsufficientSamples.
std::vector<AVPair> build_av_pairs(const Corpus& side, std::size_t n_pairs, std::uint64_t seed);

std::string av_pairs_to_jsonl(std::span<const AVPair> pairs);
std::vector<AVPair> av_pairs_from_jsonl(std::string_view content);

/// Cosine distance is 1 - cos; a zero vector is at distance 0 from another
/// zero vector and 1 from anything else.
double feature_distance(DistanceKind kind, std::span<const double> x, std::span<const double> y);

struct AVModel {
  DistanceKind distance_kind = DistanceKind::kCosine;
  double threshold = 0.0;
};

struct AVExample {
  std::vector<double> a;
  std::vector<double> b;
  AVLabel label = AVLabel::kSame;
};

/// Threshold maximizing accuracy of "same iff distance <= threshold" over
/// midpoints between consecutive distinct distances, plus one candidate below
/// the smallest and one above the largest distance. Ties go to the smaller
/// threshold. Throws SingleClassCalibration.
double calibrate_threshold(std::span<const double> distances, std::span<const AVLabel> labels);
AVModel calibrate_av(DistanceKind kind, std::span<const AVExample> examples);

/// 1 iff distance(x, y) <= threshold.
int verify(const AVModel& av, std::span<const double> x, std::span<const double> y);
double av_accuracy(const AVModel& av, std::span<const AVExample> examples);

}  // namespace stylemimic
