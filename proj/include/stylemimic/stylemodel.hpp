#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "stylemimic/features.hpp"

namespace stylemimic {

inline constexpr double kDefaultShrinkage = 0.1;
inline constexpr double kDefaultRidge = 1e-6;

/// Per-author Gaussian style summary over standardized feature vectors.
/// covariance = (1 - shrinkage) * S + shrinkage * diag(S) + ridge * I, with S
/// the unbiased sample covariance. Immutable once fitted.
class StyleModel {
 public:
  StyleModel(std::string author_id, Eigen::VectorXd mean, Eigen::MatrixXd covariance, double shrinkage,
             double ridge, std::size_t n_samples);

  const std::string& author_id() const noexcept { return author_id_; }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  double shrinkage() const noexcept { return shrinkage_; }
  double ridge() const noexcept { return ridge_; }
  std::size_t n_samples() const noexcept { return n_samples_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::LLT<Eigen::MatrixXd>& cholesky() const noexcept { return llt_; }

 private:
  std::string author_id_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  double shrinkage_;
  double ridge_;
  std::size_t n_samples_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Throws TooFewVectors (< 2) or DimensionMismatch. Fewer than 3 vectors
/// forces shrinkage to 1 (diagonal covariance).
StyleModel fit_style_model(std::string author_id, std::span<const std::vector<double>> vectors,
                           double shrinkage = kDefaultShrinkage, double ridge = kDefaultRidge);

/// sqrt((x - mean)^T covariance^-1 (x - mean)) via a triangular solve on the
/// Cholesky factor.
double mahalanobis(std::span<const double> x, const StyleModel& model);

struct LabeledVector {
  std::string author_id;
  std::vector<double> values;
};

class StyleGallery {
 public:
  StyleGallery(std::map<std::string, StyleModel> models, std::string schema_id, ScalingParams scaling);

  const std::map<std::string, StyleModel>& models() const noexcept { return models_; }
  const std::string& schema_id() const noexcept { return schema_id_; }
  const ScalingParams& scaling() const noexcept { return scaling_; }
  /// Throws UnknownAuthor.
  const StyleModel& model(const std::string& author_id) const;

 private:
  std::map<std::string, StyleModel> models_;
  std::string schema_id_;
  ScalingParams scaling_;
};

/// Fits one model per author from already scaled vectors.
StyleGallery fit_gallery(const std::map<std::string, std::vector<std::vector<double>>>& by_author,
                         std::string schema_id, ScalingParams scaling, double shrinkage = kDefaultShrinkage,
                         double ridge = kDefaultRidge);

/// Mean Mahalanobis distance of the samples to one author's model.
double avg_distance_to_author(const StyleGallery& gallery, const std::string& author_id,
                              std::span<const std::vector<double>> samples);

/// Fraction of samples strictly closer to their own author's model than to
/// every other model. Ties count as misses.
double style_match_accuracy(const StyleGallery& gallery, std::span<const LabeledVector> labeled);

/// JSON document for one model: schema_id, author_id, mean, covariance
/// (row-major), shrinkage, ridge, n_samples.
std::string style_model_to_json(const StyleModel& model, const std::string& schema_id);
StyleModel style_model_from_json(std::string_view document);

/// One JSON document per line per author, in author order. Scaling is
/// serialized separately.
std::string gallery_to_jsonl(const StyleGallery& gallery);
StyleGallery gallery_from_jsonl(std::string_view content, ScalingParams scaling);
std::string scaling_to_json(const ScalingParams& scaling);
ScalingParams scaling_from_json(std::string_view document);

}  // namespace stylemimic
