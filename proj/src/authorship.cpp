#include "stylemimic/authorship.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "stylemimic/error.hpp"
#include "stylemimic/rng.hpp"
#include "stylemimic/text.hpp"

namespace stylemimic {

using json = nlohmann::json;

std::string_view variant_name(const AAModel& model) {
  return std::holds_alternative<LogisticAA>(model) ? "logistic" : "delta";
}

// ---------------------------------------------------------------------------
// Logistic regression

LogisticObjective::LogisticObjective(Eigen::MatrixXd features, std::vector<int> labels, int n_classes,
                                     double l2)
    : features_(std::move(features)), labels_(std::move(labels)), n_classes_(n_classes), l2_(l2) {
  if (static_cast<Eigen::Index>(labels_.size()) != features_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "labels vs feature rows");
  }
}

Eigen::MatrixXd LogisticObjective::probabilities(const Eigen::VectorXd& params) const {
  const Eigen::Index d = features_.cols();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(params.data(),
                                                                                             n_classes_, d);
  Eigen::Map<const Eigen::VectorXd> b(params.data() + n_classes_ * d, n_classes_);
  Eigen::MatrixXd logits = features_ * w.transpose();
  logits.rowwise() += b.transpose();
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - mx).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

double LogisticObjective::loss(const Eigen::VectorXd& params) const {
  const Eigen::Index d = features_.cols();
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(params.data(),
                                                                                             n_classes_, d);
  Eigen::Map<const Eigen::VectorXd> b(params.data() + n_classes_ * d, n_classes_);
  double total = 0.0;
  for (Eigen::Index i = 0; i < features_.rows(); ++i) {
    Eigen::VectorXd z = w * features_.row(i).transpose() + b;
    const double mx = z.maxCoeff();
    const double lse = mx + std::log((z.array() - mx).exp().sum());
    total += lse - z(labels_[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(features_.rows()) + 0.5 * l2_ * w.squaredNorm();
}

Eigen::VectorXd LogisticObjective::gradient(const Eigen::VectorXd& params) const {
  const Eigen::Index d = features_.cols();
  const double n = static_cast<double>(features_.rows());
  Eigen::MatrixXd residual = probabilities(params);
  for (Eigen::Index i = 0; i < residual.rows(); ++i) residual(i, labels_[static_cast<std::size_t>(i)]) -= 1.0;

  Eigen::VectorXd grad(n_params());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(grad.data(), n_classes_,
                                                                                        d);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> w(params.data(),
                                                                                             n_classes_, d);
  gw = residual.transpose() * features_ / n + l2_ * w;
  grad.tail(n_classes_) = residual.colwise().sum().transpose() / n;
  return grad;
}

LogisticAA train_logistic_aa(std::span<const LabeledVector> data, const LogisticHyper& hyper,
                             std::vector<double>* loss_history) {
  std::map<std::string, std::size_t> counts;
  for (const auto& item : data) ++counts[item.author_id];
  if (counts.size() < 2) throw Error(ErrorCode::kDegenerateLabels, "need at least 2 authors");
  for (const auto& [author, n] : counts) {
    if (n < 2) throw Error(ErrorCode::kDegenerateLabels, author + " has fewer than 2 samples");
  }
  const std::size_t d = data.front().values.size();

  std::vector<const LabeledVector*> order;
  for (const auto& item : data) {
    if (item.values.size() != d) throw Error(ErrorCode::kDimensionMismatch, item.author_id);
    order.push_back(&item);
  }
  std::sort(order.begin(), order.end(), [](const LabeledVector* a, const LabeledVector* b) {
    if (a->author_id != b->author_id) return a->author_id < b->author_id;
    return a->values < b->values;
  });

  LogisticAA model;
  std::map<std::string, int> class_of;
  for (const auto& [author, n] : counts) {
    class_of[author] = static_cast<int>(model.authors.size());
    model.authors.push_back(author);
  }
  const auto n_classes = static_cast<int>(model.authors.size());

  Eigen::MatrixXd x(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(d));
  std::vector<int> labels;
  for (std::size_t i = 0; i < order.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::RowVectorXd>(order[i]->values.data(), static_cast<Eigen::Index>(d));
    labels.push_back(class_of[order[i]->author_id]);
  }
  LogisticObjective objective(std::move(x), std::move(labels), n_classes, hyper.l2);

  Eigen::VectorXd params = Eigen::VectorXd::Zero(objective.n_params());
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    if (loss_history) loss_history->push_back(objective.loss(params));
    params -= hyper.learning_rate * objective.gradient(params);
  }
  if (loss_history) loss_history->push_back(objective.loss(params));

  const auto di = static_cast<Eigen::Index>(d);
  model.weights = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      params.data(), n_classes, di);
  model.bias = params.tail(n_classes);
  if (!model.weights.allFinite() || !model.bias.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "logistic training diverged; lower the learning rate");
  }
  return model;
}

// ---------------------------------------------------------------------------
// Burrows' Delta

namespace {

std::vector<double> relative_frequencies(std::string_view text, const std::vector<std::string>& words,
                                         const std::map<std::string, std::size_t>& word_index) {
  std::vector<double> freq(words.size(), 0.0);
  auto tokens = normalized_words(text);
  for (const auto& t : tokens) {
    if (auto it = word_index.find(t); it != word_index.end()) freq[it->second] += 1.0;
  }
  if (!tokens.empty()) {
    for (auto& f : freq) f /= static_cast<double>(tokens.size());
  }
  return freq;
}

constexpr double kDeltaStdFloor = 1e-9;

}  // namespace

DeltaAA train_delta_aa(const Corpus& train, std::size_t top_words) {
  if (train.empty()) throw Error(ErrorCode::kEmptyCorpus, "delta model needs training texts");
  if (top_words == 0) throw Error(ErrorCode::kInvalidArgument, "M must be >= 1");

  std::map<std::string, double> totals;
  for (const auto& s : train.samples()) {
    for (auto& w : normalized_words(s.text)) totals[w] += 1.0;
  }
  std::vector<std::pair<std::string, double>> ranked(totals.begin(), totals.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  ranked.resize(std::min(top_words, ranked.size()));

  DeltaAA model;
  std::map<std::string, std::size_t> word_index;
  for (const auto& [w, c] : ranked) {
    word_index[w] = model.words.size();
    model.words.push_back(w);
  }
  const std::size_t m = model.words.size();

  std::vector<std::vector<double>> per_text;
  for (const auto& s : train.samples()) per_text.push_back(relative_frequencies(s.text, model.words, word_index));
  const double n = static_cast<double>(per_text.size());
  model.corpus_means.assign(m, 0.0);
  model.corpus_stds.assign(m, 0.0);
  for (const auto& f : per_text) {
    for (std::size_t j = 0; j < m; ++j) model.corpus_means[j] += f[j] / n;
  }
  for (const auto& f : per_text) {
    for (std::size_t j = 0; j < m; ++j) {
      model.corpus_stds[j] += (f[j] - model.corpus_means[j]) * (f[j] - model.corpus_means[j]) / n;
    }
  }
  for (auto& s : model.corpus_stds) s = std::max(std::sqrt(s), kDeltaStdFloor);

  model.authors = train.authors();
  for (const auto& author : model.authors) {
    std::vector<double> mean(m, 0.0);
    const auto& ids = train.author_index().at(author);
    for (const auto& id : ids) {
      auto f = relative_frequencies(train.at(id).text, model.words, word_index);
      for (std::size_t j = 0; j < m; ++j) mean[j] += f[j] / static_cast<double>(ids.size());
    }
    model.author_means.push_back(std::move(mean));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Prediction

std::vector<std::pair<std::string, double>> score_authors(const AAModel& model, const AAInput& input) {
  std::vector<std::pair<std::string, double>> scores;
  if (const auto* lr = std::get_if<LogisticAA>(&model)) {
    if (static_cast<Eigen::Index>(input.scaled.size()) != lr->weights.cols()) {
      throw Error(ErrorCode::kDimensionMismatch, "logistic input dimension");
    }
    Eigen::Map<const Eigen::VectorXd> x(input.scaled.data(), static_cast<Eigen::Index>(input.scaled.size()));
    Eigen::VectorXd logits = lr->weights * x + lr->bias;
    for (std::size_t a = 0; a < lr->authors.size(); ++a) {
      scores.emplace_back(lr->authors[a], logits(static_cast<Eigen::Index>(a)));
    }
    return scores;
  }
  const auto& delta = std::get<DeltaAA>(model);
  std::map<std::string, std::size_t> word_index;
  for (std::size_t j = 0; j < delta.words.size(); ++j) word_index[delta.words[j]] = j;
  auto freq = relative_frequencies(input.text, delta.words, word_index);
  const std::size_t m = delta.words.size();
  for (std::size_t a = 0; a < delta.authors.size(); ++a) {
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      sum += std::abs(freq[j] - delta.author_means[a][j]) / delta.corpus_stds[j];
    }
    scores.emplace_back(delta.authors[a], m == 0 ? 0.0 : -sum / static_cast<double>(m));
  }
  return scores;
}

RankedPrediction predict_topk(const AAModel& model, const AAInput& input, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  auto scores = score_authors(model, input);
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  scores.resize(std::min(k, scores.size()));
  return RankedPrediction{std::move(scores)};
}

double topk_accuracy(const AAModel& model, std::span<const LabeledInput> data, std::size_t k) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& item : data) {
    auto pred = predict_topk(model, AAInput{item.text, item.scaled}, k);
    const bool hit = std::any_of(pred.ranking.begin(), pred.ranking.end(),
                                 [&](const auto& entry) { return entry.first == item.author_id; });
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double topk_accuracy(std::span<const AAModel> models, std::span<const LabeledInput> data, std::size_t k) {
  if (models.empty()) throw Error(ErrorCode::kInvalidArgument, "no attribution models");
  double sum = 0.0;
  for (const auto& m : models) sum += topk_accuracy(m, data, k);
  return sum / static_cast<double>(models.size());
}

// ---------------------------------------------------------------------------
// Serialization

std::string aa_model_to_json(const AAModel& model) {
  json doc;
  doc["variant"] = std::string(variant_name(model));
  if (const auto* lr = std::get_if<LogisticAA>(&model)) {
    doc["authors"] = lr->authors;
    std::vector<std::vector<double>> rows;
    for (Eigen::Index r = 0; r < lr->weights.rows(); ++r) {
      auto& row = rows.emplace_back();
      for (Eigen::Index c = 0; c < lr->weights.cols(); ++c) row.push_back(lr->weights(r, c));
    }
    doc["weights"] = rows;
    doc["bias"] = std::vector<double>(lr->bias.data(), lr->bias.data() + lr->bias.size());
  } else {
    const auto& d = std::get<DeltaAA>(model);
    doc["authors"] = d.authors;
    doc["words"] = d.words;
    doc["corpus_means"] = d.corpus_means;
    doc["corpus_stds"] = d.corpus_stds;
    doc["author_means"] = d.author_means;
  }
  return doc.dump();
}

AAModel aa_model_from_json(std::string_view document) {
  try {
    auto doc = json::parse(document);
    const auto variant = doc.at("variant").get<std::string>();
    if (variant == "logistic") {
      LogisticAA lr;
      lr.authors = doc.at("authors").get<std::vector<std::string>>();
      auto rows = doc.at("weights").get<std::vector<std::vector<double>>>();
      auto bias = doc.at("bias").get<std::vector<double>>();
      const auto a = static_cast<Eigen::Index>(rows.size());
      const auto d = a == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
      lr.weights.resize(a, d);
      for (Eigen::Index r = 0; r < a; ++r) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != d) {
          throw Error(ErrorCode::kDimensionMismatch, "ragged weights");
        }
        for (Eigen::Index c = 0; c < d; ++c) lr.weights(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
      lr.bias = Eigen::Map<Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(bias.size()));
      if (lr.bias.size() != a || static_cast<Eigen::Index>(lr.authors.size()) != a) {
        throw Error(ErrorCode::kDimensionMismatch, "logistic model shape");
      }
      return lr;
    }
    if (variant == "delta") {
      DeltaAA d;
      d.authors = doc.at("authors").get<std::vector<std::string>>();
      d.words = doc.at("words").get<std::vector<std::string>>();
      d.corpus_means = doc.at("corpus_means").get<std::vector<double>>();
      d.corpus_stds = doc.at("corpus_stds").get<std::vector<double>>();
      d.author_means = doc.at("author_means").get<std::vector<std::vector<double>>>();
      return d;
    }
    throw Error(ErrorCode::kMalformedLine, "unknown attribution variant " + variant);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedLine, std::string("attribution model: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Verification

std::string_view to_string(DistanceKind kind) {
  return kind == DistanceKind::kCosine ? "cosine" : "euclidean";
}

DistanceKind parse_distance_kind(std::string_view name) {
  if (name == "cosine") return DistanceKind::kCosine;
  if (name == "euclidean") return DistanceKind::kEuclidean;
  throw Error(ErrorCode::kInvalidArgument, "unknown distance kind " + std::string(name));
}

std::size_t av_positive_count(std::size_t n_pairs) { return (4 * n_pairs + 5) / 10; }

namespace {

using IndexPair = std::pair<std::size_t, std::size_t>;

IndexPair ordered(std::size_t a, std::size_t b) { return a < b ? IndexPair{a, b} : IndexPair{b, a}; }

}  // namespace

std::vector<AVPair> build_av_pairs(const Corpus& side, std::size_t n_pairs, std::uint64_t seed) {
  const auto& samples = side.samples();
  const std::size_t n = samples.size();
  const std::size_t want_pos = av_positive_count(n_pairs);
  const std::size_t want_neg = n_pairs - want_pos;

  // Samples grouped by author, as indices into `samples`.
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::string, std::size_t> group_of;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = group_of.emplace(samples[i].author_id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  std::size_t avail_pos = 0;
  std::vector<double> group_weights;
  for (const auto& g : groups) {
    const std::size_t c = g.size() * (g.size() - 1) / 2;
    avail_pos += c;
    group_weights.push_back(static_cast<double>(c));
  }
  const std::size_t avail_all = n < 2 ? 0 : n * (n - 1) / 2;
  const std::size_t avail_neg = avail_all - avail_pos;
  if (want_pos > avail_pos || want_neg > avail_neg) {
    throw Error(ErrorCode::kInsufficientSamples,
                "requested " + std::to_string(want_pos) + " positive / " + std::to_string(want_neg) +
                    " negative pairs, available " + std::to_string(avail_pos) + " / " + std::to_string(avail_neg));
  }

  Rng rng(seed);
  auto same_author = [&](std::size_t a, std::size_t b) { return samples[a].author_id == samples[b].author_id; };

  auto enumerate = [&](bool positive) {
    std::vector<IndexPair> all;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (same_author(a, b) == positive) all.emplace_back(a, b);
      }
    }
    return all;
  };
  auto draw = [&](bool positive) -> IndexPair {
    if (positive) {
      const auto& g = groups[rng.weighted_index(group_weights)];
      const auto i = rng.uniform_index(g.size());
      auto j = rng.uniform_index(g.size() - 1);
      if (j >= i) ++j;
      return ordered(g[i], g[j]);
    }
    const auto i = rng.uniform_index(n);
    auto j = rng.uniform_index(n - 1);
    if (j >= i) ++j;
    return ordered(i, j);
  };
  auto sample = [&](bool positive, std::size_t want, std::size_t avail) {
    std::vector<IndexPair> chosen;
    if (want == 0) return chosen;
    if (want * 2 > avail) {
      auto all = enumerate(positive);
      for (std::size_t i = 0; i < want; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform_index(all.size() - i));
        std::swap(all[i], all[j]);
        chosen.push_back(all[i]);
      }
      return chosen;
    }
    std::set<IndexPair> seen;
    while (chosen.size() < want) {
      auto p = draw(positive);
      if (same_author(p.first, p.second) != positive) continue;
      if (seen.insert(p).second) chosen.push_back(p);
    }
    return chosen;
  };

  std::vector<AVPair> pairs;
  for (const auto& [a, b] : sample(true, want_pos, avail_pos)) {
    pairs.push_back({samples[a].id, samples[b].id, AVLabel::kSame});
  }
  for (const auto& [a, b] : sample(false, want_neg, avail_neg)) {
    pairs.push_back({samples[a].id, samples[b].id, AVLabel::kDifferent});
  }
  rng.shuffle(pairs);
  return pairs;
}

std::string av_pairs_to_jsonl(std::span<const AVPair> pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += json{{"id_a", p.id_a}, {"id_b", p.id_b}, {"label", p.label == AVLabel::kSame ? "same" : "different"}}
               .dump();
    out += '\n';
  }
  return out;
}

std::vector<AVPair> av_pairs_from_jsonl(std::string_view content) {
  std::vector<AVPair> pairs;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;
    try {
      auto doc = json::parse(line);
      AVPair p{doc.at("id_a").get<std::string>(), doc.at("id_b").get<std::string>(), AVLabel::kSame};
      const auto label = doc.at("label").get<std::string>();
      if (label == "different") {
        p.label = AVLabel::kDifferent;
      } else if (label != "same") {
        throw Error(ErrorCode::kMalformedLine, "pair line " + std::to_string(line_no));
      }
      pairs.push_back(std::move(p));
    } catch (const json::exception&) {
      throw Error(ErrorCode::kMalformedLine, "pair line " + std::to_string(line_no));
    }
  }
  return pairs;
}

double feature_distance(DistanceKind kind, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kDimensionMismatch, "distance operands");
  if (kind == DistanceKind::kEuclidean) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ss += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(ss);
  }
  double dot = 0.0;
  double nx = 0.0;
  double ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  if (nx == 0.0 || ny == 0.0) return (nx == 0.0 && ny == 0.0) ? 0.0 : 1.0;
  const double cos = std::clamp(dot / std::sqrt(nx * ny), -1.0, 1.0);
  return std::max(0.0, 1.0 - cos);
}

double calibrate_threshold(std::span<const double> distances, std::span<const AVLabel> labels) {
  if (distances.size() != labels.size()) throw Error(ErrorCode::kLengthMismatch, "distances vs labels");
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), AVLabel::kSame));
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::kSingleClassCalibration, "calibration needs both labels");

  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return distances[a] < distances[b]; });

  // Threshold below everything: all predicted different.
  double best_tau = distances[order.front()] - 1.0;
  std::size_t correct = n_neg;
  std::size_t best_correct = correct;
  std::size_t i = 0;
  while (i < order.size()) {
    const double value = distances[order[i]];
    while (i < order.size() && distances[order[i]] == value) {
      correct += labels[order[i]] == AVLabel::kSame ? 1 : 0;
      correct -= labels[order[i]] == AVLabel::kDifferent ? 1 : 0;
      ++i;
    }
    const double tau = i < order.size() ? 0.5 * (value + distances[order[i]]) : value + 1.0;
    if (correct > best_correct) {
      best_correct = correct;
      best_tau = tau;
    }
  }
  return best_tau;
}

AVModel calibrate_av(DistanceKind kind, std::span<const AVExample> examples) {
  std::vector<double> distances;
  std::vector<AVLabel> labels;
  for (const auto& ex : examples) {
    distances.push_back(feature_distance(kind, ex.a, ex.b));
    labels.push_back(ex.label);
  }
  return AVModel{kind, calibrate_threshold(distances, labels)};
}

int verify(const AVModel& av, std::span<const double> x, std::span<const double> y) {
  return feature_distance(av.distance_kind, x, y) <= av.threshold ? 1 : 0;
}

double av_accuracy(const AVModel& av, std::span<const AVExample> examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    const int predicted = verify(av, ex.a, ex.b);
    if ((predicted == 1) == (ex.label == AVLabel::kSame)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

}  // namespace stylemimic
