#include "stylemimic/stylemodel.hpp"

#include <json.hpp>

#include "stylemimic/error.hpp"

namespace stylemimic {

using json = nlohmann::json;

StyleModel::StyleModel(std::string author_id, Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                       double shrinkage, double ridge, std::size_t n_samples)
    : author_id_(std::move(author_id)),
      mean_(std::move(mean)),
      covariance_(std::move(covariance)),
      shrinkage_(shrinkage),
      ridge_(ridge),
      n_samples_(n_samples),
      llt_(covariance_) {
  if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "covariance shape for " + author_id_);
  }
  if (llt_.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidArgument, "covariance of " + author_id_ + " is not positive definite");
  }
}

StyleModel fit_style_model(std::string author_id, std::span<const std::vector<double>> vectors,
                           double shrinkage, double ridge) {
  if (vectors.size() < 2) throw Error(ErrorCode::kTooFewVectors, author_id);
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0) || !(ridge > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "shrinkage must be in [0,1] and ridge > 0");
  }
  const auto d = static_cast<Eigen::Index>(vectors.front().size());
  const auto n = static_cast<Eigen::Index>(vectors.size());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& v = vectors[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(v.size()) != d) throw Error(ErrorCode::kDimensionMismatch, author_id);
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), d);
  }
  if (vectors.size() < 3) shrinkage = 1.0;

  Eigen::VectorXd mean = x.colwise().mean().transpose();
  Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
  Eigen::MatrixXd sample_cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  sample_cov = 0.5 * (sample_cov + sample_cov.transpose());

  Eigen::MatrixXd cov = (1.0 - shrinkage) * sample_cov;
  cov.diagonal() += shrinkage * sample_cov.diagonal();
  cov.diagonal().array() += ridge;
  return StyleModel(std::move(author_id), std::move(mean), std::move(cov), shrinkage, ridge, vectors.size());
}

double mahalanobis(std::span<const double> x, const StyleModel& model) {
  if (x.size() != model.dimension()) {
    throw Error(ErrorCode::kDimensionMismatch, "vector has " + std::to_string(x.size()) + " features, model " +
                                                   model.author_id() + " has " +
                                                   std::to_string(model.dimension()));
  }
  Eigen::VectorXd diff =
      Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())) - model.mean();
  model.cholesky().matrixL().solveInPlace(diff);
  return diff.norm();
}

StyleGallery::StyleGallery(std::map<std::string, StyleModel> models, std::string schema_id,
                           ScalingParams scaling)
    : models_(std::move(models)), schema_id_(std::move(schema_id)), scaling_(std::move(scaling)) {
  if (models_.empty()) throw Error(ErrorCode::kInvalidArgument, "gallery needs at least one model");
  const auto d = models_.begin()->second.dimension();
  for (const auto& [author, m] : models_) {
    if (m.dimension() != d) throw Error(ErrorCode::kDimensionMismatch, author);
  }
  if (!scaling_.means.empty() && scaling_.means.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "gallery scaling");
  }
}

const StyleModel& StyleGallery::model(const std::string& author_id) const {
  auto it = models_.find(author_id);
  if (it == models_.end()) throw Error(ErrorCode::kUnknownAuthor, author_id);
  return it->second;
}

StyleGallery fit_gallery(const std::map<std::string, std::vector<std::vector<double>>>& by_author,
                         std::string schema_id, ScalingParams scaling, double shrinkage, double ridge) {
  std::map<std::string, StyleModel> models;
  for (const auto& [author, vectors] : by_author) {
    models.emplace(author, fit_style_model(author, vectors, shrinkage, ridge));
  }
  return StyleGallery(std::move(models), std::move(schema_id), std::move(scaling));
}

double avg_distance_to_author(const StyleGallery& gallery, const std::string& author_id,
                              std::span<const std::vector<double>> samples) {
  const auto& model = gallery.model(author_id);
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "no samples for " + author_id);
  double sum = 0.0;
  for (const auto& s : samples) sum += mahalanobis(s, model);
  return sum / static_cast<double>(samples.size());
}

double style_match_accuracy(const StyleGallery& gallery, std::span<const LabeledVector> labeled) {
  if (labeled.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& item : labeled) {
    const double own = mahalanobis(item.values, gallery.model(item.author_id));
    bool closest = true;
    for (const auto& [author, model] : gallery.models()) {
      if (author == item.author_id) continue;
      if (mahalanobis(item.values, model) <= own) {
        closest = false;
        break;
      }
    }
    if (closest) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labeled.size());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json model_json(const StyleModel& m, const std::string& schema_id) {
  std::vector<double> mean(m.mean().data(), m.mean().data() + m.mean().size());
  std::vector<double> cov;
  cov.reserve(static_cast<std::size_t>(m.covariance().size()));
  for (Eigen::Index r = 0; r < m.covariance().rows(); ++r) {
    for (Eigen::Index c = 0; c < m.covariance().cols(); ++c) cov.push_back(m.covariance()(r, c));
  }
  return json{{"schema_id", schema_id},   {"author_id", m.author_id()}, {"mean", mean},
              {"covariance", cov},        {"shrinkage", m.shrinkage()}, {"ridge", m.ridge()},
              {"n_samples", m.n_samples()}};
}

StyleModel model_from(const json& doc) {
  try {
    auto mean_v = doc.at("mean").get<std::vector<double>>();
    auto cov_v = doc.at("covariance").get<std::vector<double>>();
    const auto d = static_cast<Eigen::Index>(mean_v.size());
    if (static_cast<Eigen::Index>(cov_v.size()) != d * d) {
      throw Error(ErrorCode::kDimensionMismatch, "serialized covariance");
    }
    Eigen::VectorXd mean = Eigen::Map<Eigen::VectorXd>(mean_v.data(), d);
    Eigen::MatrixXd cov = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cov_v.data(), d, d);
    return StyleModel(doc.at("author_id").get<std::string>(), std::move(mean), std::move(cov),
                      doc.at("shrinkage").get<double>(), doc.at("ridge").get<double>(),
                      doc.at("n_samples").get<std::size_t>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, std::string("style model document: ") + e.what());
  }
}

}  // namespace

std::string style_model_to_json(const StyleModel& model, const std::string& schema_id) {
  return model_json(model, schema_id).dump();
}

StyleModel style_model_from_json(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kMalformedLine, e.what());
  }
  return model_from(doc);
}

std::string gallery_to_jsonl(const StyleGallery& gallery) {
  std::string out;
  for (const auto& [author, model] : gallery.models()) {
    out += model_json(model, gallery.schema_id()).dump();
    out += '\n';
  }
  return out;
}

StyleGallery gallery_from_jsonl(std::string_view content, ScalingParams scaling) {
  std::map<std::string, StyleModel> models;
  std::string schema_id;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json doc;
    try {
      doc = json::parse(line);
      schema_id = doc.at("schema_id").get<std::string>();
    } catch (const json::exception&) {
      throw Error(ErrorCode::kMalformedLine, "gallery line " + std::to_string(line_no));
    }
    auto model = model_from(doc);
    auto author = model.author_id();
    models.emplace(std::move(author), std::move(model));
  }
  return StyleGallery(std::move(models), std::move(schema_id), std::move(scaling));
}

std::string scaling_to_json(const ScalingParams& scaling) {
  return json{{"means", scaling.means}, {"stds", scaling.stds}, {"epsilon", scaling.epsilon}}.dump();
}

ScalingParams scaling_from_json(std::string_view document) {
  try {
    auto doc = json::parse(document);
    ScalingParams p;
    p.means = doc.at("means").get<std::vector<double>>();
    p.stds = doc.at("stds").get<std::vector<double>>();
    p.epsilon = doc.at("epsilon").get<double>();
    if (p.means.size() != p.stds.size()) throw Error(ErrorCode::kDimensionMismatch, "scaling document");
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, std::string("scaling document: ") + e.what());
  }
}

}  // namespace stylemimic
