#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stylemimic/corpus.hpp"

namespace stylemimic {

enum class ExemplarStrategy { kRandom, kLength, kCluster, kNested };

std::string_view to_string(ExemplarStrategy strategy);

struct ExemplarSet {
  std::string author_id;
  std::string test_id;  // empty when not tied to a target
  std::vector<std::string> sample_ids;
  ExemplarStrategy strategy = ExemplarStrategy::kRandom;
  std::uint64_t seed = 0;
};

using SampleRefs = std::span<const WritingSample* const>;

/// k distinct samples by seeded sampling without replacement. The candidate
/// order is canonicalized by id first. `exclude_id` is never selected.
/// Throws InsufficientSamples.
ExemplarSet select_random(SampleRefs train, std::size_t k, std::uint64_t seed, std::string_view exclude_id = {});

/// k samples minimizing |word_count - target.word_count|, ties by ascending
/// id, closest first. Throws InsufficientSamples.
ExemplarSet select_length_closest(SampleRefs train, const WritingSample& target, std::size_t k);

/// Tf-idf vectors clustered with seeded k-means++.
struct ClusterModel {
  std::string author_id;
  std::vector<std::string> vocabulary;
  std::vector<double> idf;
  std::vector<std::vector<double>> centroids;
  std::map<std::string, std::size_t> assignment;
  std::map<std::string, std::vector<double>> vectors;
  std::size_t num_clusters = 0;
};

inline constexpr int kKMeansMaxIterations = 100;

/// max(2, floor(sqrt(n / 2))).
std::size_t default_num_clusters(std::size_t n_samples);

/// Lowercased tokens minus `stopwords`, tf-idf weighted and L2 normalized.
/// Throws TooFewSamples when there are fewer samples than clusters.
ClusterModel fit_topic_clusters(SampleRefs samples, std::size_t num_clusters, std::uint64_t seed,
                                std::span<const std::string> stopwords);

/// k train samples from the test sample's cluster, sampled with `seed` when
/// the cluster has more than k. An underfull cluster is topped up with the
/// train samples nearest to the cluster centroid.
/// Throws NoTrainSamplesInAuthor, InsufficientSamples or MissingReference.
ExemplarSet select_same_cluster(const ClusterModel& clusters, std::string_view test_id, SampleRefs train,
                                std::size_t k, std::uint64_t seed);

/// Number of train samples in the cluster of `sample_id`.
std::size_t cluster_train_support(const ClusterModel& clusters, std::string_view sample_id, SampleRefs train);

/// One seeded shuffle; the set of size s is its first s elements, so each set
/// is a strict subset of the next. Sizes must be strictly increasing.
std::vector<ExemplarSet> nested_subsets(SampleRefs train, std::span<const std::size_t> sizes, std::uint64_t seed,
                                        std::string_view exclude_id = {});

/// min(50, floor(0.2 * n)), at least 1.
std::size_t snippet_word_count(std::size_t n_words);

/// Opening words of the text joined by single spaces. Throws EmptyText.
std::string extract_snippet(std::string_view text);

}  // namespace stylemimic
