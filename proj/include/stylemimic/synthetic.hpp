#pragma once

#include <cstddef>
#include <cstdint>

#include "stylemimic/corpus.hpp"

namespace stylemimic {

struct SyntheticConfig {
  std::size_t num_authors = 10;
  std::size_t samples_per_author = 40;
  std::size_t min_words = 120;
  std::size_t max_words = 360;
  std::size_t topics_per_author = 3;
  std::uint64_t seed = 20240601;
};

/// Multi-author corpus of generated English-like text. Each author draws
/// function words, punctuation, special characters, sentence and paragraph
/// lengths and capitalization habits from its own profile; content words come
/// from per-author topics. Sample meta carries "topic". Ids are
/// "author_NN" and "author_NN-sNNN".
Corpus generate_synthetic_corpus(const SyntheticConfig& config = {});

}  // namespace stylemimic
