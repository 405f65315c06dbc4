#include "stylemimic/exemplar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "stylemimic/error.hpp"
#include "stylemimic/rng.hpp"
#include "stylemimic/text.hpp"

namespace stylemimic {

std::string_view to_string(ExemplarStrategy strategy) {
  switch (strategy) {
    case ExemplarStrategy::kRandom: return "random";
    case ExemplarStrategy::kLength: return "length";
    case ExemplarStrategy::kCluster: return "cluster";
    case ExemplarStrategy::kNested: return "nested";
  }
  return "random";
}

namespace {

std::vector<const WritingSample*> candidates(SampleRefs train, std::string_view exclude_id) {
  std::vector<const WritingSample*> out;
  for (const auto* s : train) {
    if (s->id != exclude_id) out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  return out;
}

std::string author_of(SampleRefs samples) { return samples.empty() ? std::string() : samples.front()->author_id; }

void require(std::size_t have, std::size_t want, std::string_view what) {
  if (have < want) {
    throw Error(ErrorCode::kInsufficientSamples, std::string(what) + ": need " + std::to_string(want) + ", have " +
                                                     std::to_string(have));
  }
}

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ss += (a[i] - b[i]) * (a[i] - b[i]);
  return ss;
}

}  // namespace

ExemplarSet select_random(SampleRefs train, std::size_t k, std::uint64_t seed, std::string_view exclude_id) {
  auto pool = candidates(train, exclude_id);
  require(pool.size(), k, "random exemplars");
  Rng rng(seed);
  rng.shuffle(pool);
  ExemplarSet set{author_of(train), std::string(exclude_id), {}, ExemplarStrategy::kRandom, seed};
  for (std::size_t i = 0; i < k; ++i) set.sample_ids.push_back(pool[i]->id);
  return set;
}

ExemplarSet select_length_closest(SampleRefs train, const WritingSample& target, std::size_t k) {
  auto pool = candidates(train, target.id);
  require(pool.size(), k, "length-matched exemplars");
  auto gap = [&](const WritingSample* s) {
    return s->word_count > target.word_count ? s->word_count - target.word_count : target.word_count - s->word_count;
  };
  std::stable_sort(pool.begin(), pool.end(), [&](const auto* a, const auto* b) { return gap(a) < gap(b); });
  ExemplarSet set{author_of(train), target.id, {}, ExemplarStrategy::kLength, 0};
  for (std::size_t i = 0; i < k; ++i) set.sample_ids.push_back(pool[i]->id);
  return set;
}

std::size_t default_num_clusters(std::size_t n_samples) {
  const auto root = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_samples) / 2.0)));
  return std::max<std::size_t>(2, root);
}

ClusterModel fit_topic_clusters(SampleRefs samples, std::size_t num_clusters, std::uint64_t seed,
                                std::span<const std::string> stopwords) {
  if (num_clusters == 0) throw Error(ErrorCode::kInvalidArgument, "num_clusters must be >= 1");
  if (samples.size() < num_clusters) {
    throw Error(ErrorCode::kTooFewSamples,
                std::to_string(samples.size()) + " samples for " + std::to_string(num_clusters) + " clusters");
  }
  auto docs = candidates(samples, {});
  const std::set<std::string> stop(stopwords.begin(), stopwords.end());

  std::vector<std::map<std::string, double>> tf(docs.size());
  std::map<std::string, double> df;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (auto& w : normalized_words(docs[i]->text)) {
      if (!stop.count(w)) tf[i][w] += 1.0;
    }
    for (const auto& [w, c] : tf[i]) df[w] += 1.0;
  }

  ClusterModel model;
  model.author_id = author_of(samples);
  model.num_clusters = num_clusters;
  std::map<std::string, std::size_t> index;
  const double n = static_cast<double>(docs.size());
  for (const auto& [w, d] : df) {
    index[w] = model.vocabulary.size();
    model.vocabulary.push_back(w);
    model.idf.push_back(std::log((1.0 + n) / (1.0 + d)) + 1.0);
  }

  std::vector<std::vector<double>> x(docs.size(), std::vector<double>(model.vocabulary.size(), 0.0));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double norm = 0.0;
    for (const auto& [w, c] : tf[i]) {
      const auto j = index[w];
      x[i][j] = c * model.idf[j];
      norm += x[i][j] * x[i][j];
    }
    if (norm > 0.0) {
      for (auto& v : x[i]) v /= std::sqrt(norm);
    }
  }

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<std::vector<double>> centroids;
  centroids.push_back(x[rng.uniform_index(docs.size())]);
  std::vector<double> nearest(docs.size(), std::numeric_limits<double>::infinity());
  while (centroids.size() < num_clusters) {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(x[i], centroids.back()));
    }
    centroids.push_back(x[rng.weighted_index(nearest)]);
  }

  std::vector<std::size_t> assign(docs.size(), num_clusters);
  for (int iter = 0; iter < kKMeansMaxIterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = squared_distance(x[i], centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      std::vector<double> sum(model.vocabulary.size(), 0.0);
      std::size_t members = 0;
      for (std::size_t i = 0; i < docs.size(); ++i) {
        if (assign[i] != c) continue;
        ++members;
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += x[i][j];
      }
      // An emptied cluster keeps its previous centroid.
      if (members == 0) continue;
      for (auto& v : sum) v /= static_cast<double>(members);
      centroids[c] = std::move(sum);
    }
  }

  model.centroids = std::move(centroids);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    model.assignment[docs[i]->id] = assign[i];
    model.vectors[docs[i]->id] = std::move(x[i]);
  }
  return model;
}

std::size_t cluster_train_support(const ClusterModel& clusters, std::string_view sample_id, SampleRefs train) {
  auto it = clusters.assignment.find(std::string(sample_id));
  if (it == clusters.assignment.end()) throw Error(ErrorCode::kMissingReference, std::string(sample_id));
  std::size_t count = 0;
  for (const auto* s : train) {
    if (s->id == sample_id) continue;
    auto jt = clusters.assignment.find(s->id);
    if (jt != clusters.assignment.end() && jt->second == it->second) ++count;
  }
  return count;
}

ExemplarSet select_same_cluster(const ClusterModel& clusters, std::string_view test_id, SampleRefs train,
                                std::size_t k, std::uint64_t seed) {
  auto it = clusters.assignment.find(std::string(test_id));
  if (it == clusters.assignment.end()) throw Error(ErrorCode::kMissingReference, std::string(test_id));
  const std::size_t cluster = it->second;

  std::vector<const WritingSample*> same;
  std::vector<const WritingSample*> other;
  for (const auto* s : candidates(train, test_id)) {
    auto jt = clusters.assignment.find(s->id);
    if (jt == clusters.assignment.end()) continue;
    (jt->second == cluster ? same : other).push_back(s);
  }
  if (same.empty() && other.empty()) throw Error(ErrorCode::kNoTrainSamplesInAuthor, clusters.author_id);
  require(same.size() + other.size(), k, "cluster exemplars");

  ExemplarSet set{clusters.author_id, std::string(test_id), {}, ExemplarStrategy::kCluster, seed};
  if (same.size() >= k) {
    Rng rng(seed);
    rng.shuffle(same);
    for (std::size_t i = 0; i < k; ++i) set.sample_ids.push_back(same[i]->id);
    return set;
  }
  for (const auto* s : same) set.sample_ids.push_back(s->id);
  const auto& centroid = clusters.centroids[cluster];
  std::stable_sort(other.begin(), other.end(), [&](const auto* a, const auto* b) {
    return squared_distance(clusters.vectors.at(a->id), centroid) <
           squared_distance(clusters.vectors.at(b->id), centroid);
  });
  for (std::size_t i = 0; set.sample_ids.size() < k; ++i) set.sample_ids.push_back(other[i]->id);
  return set;
}

std::vector<ExemplarSet> nested_subsets(SampleRefs train, std::span<const std::size_t> sizes, std::uint64_t seed,
                                        std::string_view exclude_id) {
  if (sizes.empty()) return {};
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw Error(ErrorCode::kInvalidArgument, "sizes must be strictly increasing");
  }
  auto pool = candidates(train, exclude_id);
  require(pool.size(), sizes.back(), "nested exemplars");
  Rng rng(seed);
  rng.shuffle(pool);
  std::vector<ExemplarSet> chain;
  for (auto size : sizes) {
    ExemplarSet set{author_of(train), std::string(exclude_id), {}, ExemplarStrategy::kNested, seed};
    for (std::size_t i = 0; i < size; ++i) set.sample_ids.push_back(pool[i]->id);
    chain.push_back(std::move(set));
  }
  return chain;
}

std::size_t snippet_word_count(std::size_t n_words) { return std::max<std::size_t>(1, std::min<std::size_t>(50, n_words / 5)); }

std::string extract_snippet(std::string_view text) {
  const auto n = count_words(text);
  if (n == 0) throw Error(ErrorCode::kEmptyText, "snippet needs text");
  return join_first_words(text, snippet_word_count(n));
}

}  // namespace stylemimic
