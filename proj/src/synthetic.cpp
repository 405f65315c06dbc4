#include "stylemimic/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "stylemimic/error.hpp"
#include "stylemimic/features.hpp"
#include "stylemimic/rng.hpp"

namespace stylemimic {

namespace {

constexpr std::size_t kVocabularySize = 600;
constexpr std::size_t kTopicWords = 40;

std::vector<std::string> build_vocabulary(std::uint64_t seed) {
  static const std::vector<std::string> onsets = {"b", "br", "c", "ch", "d", "f", "g", "gr", "h", "j", "k", "l",
                                                  "m", "n", "p", "pl", "r", "s", "st", "t", "tr", "v", "w", "z"};
  static const std::vector<std::string> nuclei = {"a", "e", "i", "o", "u", "ai", "ea", "ou", "io"};
  static const std::vector<std::string> codas = {"", "", "n", "r", "s", "l", "t", "nd", "st", "m", "ck"};

  std::set<std::string> taken(default_function_words().begin(), default_function_words().end());
  std::vector<std::string> vocab;
  // Real words give the lexicon categories something to count.
  for (const auto& cat : default_lexicon().categories()) {
    for (const auto& p : cat.patterns) {
      if (p.ends_with('*') || taken.contains(p)) continue;
      taken.insert(p);
      vocab.push_back(p);
    }
  }
  Rng rng(mix_seed(seed, "vocabulary"));
  while (vocab.size() < kVocabularySize) {
    const std::size_t syllables = 1 + rng.uniform_index(3);
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
      w += onsets[rng.uniform_index(onsets.size())];
      w += nuclei[rng.uniform_index(nuclei.size())];
      if (s + 1 == syllables) w += codas[rng.uniform_index(codas.size())];
    }
    if (taken.insert(w).second) vocab.push_back(w);
  }
  return vocab;
}

std::vector<double> lognormal_weights(Rng& rng, std::size_t n, double sigma) {
  std::vector<double> w(n);
  for (auto& x : w) x = std::exp(sigma * rng.normal());
  return w;
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); }

struct AuthorProfile {
  Genre genre = Genre::kOther;
  std::vector<double> function_weights;
  std::vector<double> vocab_weights;
  std::vector<std::vector<std::size_t>> topics;
  double function_rate = 0.45;
  double sentence_mean = 14.0;
  double sentence_sd = 4.0;
  double paragraph_prob = 0.2;
  double comma_rate = 0.06;
  double semicolon_rate = 0.0;
  double colon_rate = 0.0;
  double dash_rate = 0.0;
  double quote_rate = 0.0;
  double digit_rate = 0.0;
  double caps_word_rate = 0.0;
  double capitalize_start = 1.0;
  std::vector<double> enders;  // weights for ".", "!", "?", "..."
  std::vector<std::pair<char, double>> specials;
  std::size_t min_words = 0;
  std::size_t max_words = 0;
};

AuthorProfile make_profile(Rng& rng, std::size_t index, const SyntheticConfig& config) {
  static const std::vector<Genre> genres = {Genre::kBlog, Genre::kEmail, Genre::kNews, Genre::kForum};
  static const std::string special_pool = "~@#$%^&*_=+><[]{}/\\";

  AuthorProfile p;
  p.genre = genres[index % genres.size()];
  p.function_weights = lognormal_weights(rng, default_function_words().size(), 0.7);
  p.vocab_weights = lognormal_weights(rng, kVocabularySize, 0.5);
  for (std::size_t t = 0; t < std::max<std::size_t>(1, config.topics_per_author); ++t) {
    std::vector<std::size_t> topic;
    for (std::size_t i = 0; i < kTopicWords; ++i) topic.push_back(rng.uniform_index(kVocabularySize));
    p.topics.push_back(std::move(topic));
  }
  p.function_rate = uniform(rng, 0.38, 0.52);
  p.sentence_mean = uniform(rng, 10.0, 20.0);
  p.sentence_sd = p.sentence_mean * uniform(rng, 0.15, 0.5);
  p.paragraph_prob = uniform(rng, 0.08, 0.4);
  p.comma_rate = uniform(rng, 0.02, 0.1);
  p.semicolon_rate = uniform(rng, 0.0, 0.02);
  p.colon_rate = uniform(rng, 0.0, 0.015);
  p.dash_rate = uniform(rng, 0.0, 0.02);
  p.quote_rate = uniform(rng, 0.0, 0.03);
  p.digit_rate = uniform(rng, 0.0, 0.02);
  p.caps_word_rate = uniform(rng, 0.0, 0.02);
  p.capitalize_start = rng.uniform01() < 0.2 ? uniform(rng, 0.5, 0.9) : 1.0;
  p.enders = {uniform(rng, 0.4, 1.0), uniform(rng, 0.0, 0.3), uniform(rng, 0.0, 0.3), uniform(rng, 0.0, 0.2)};
  for (char c : special_pool) {
    if (rng.uniform01() < 0.5) p.specials.emplace_back(c, uniform(rng, 0.001, 0.008));
  }
  const double span = static_cast<double>(config.max_words - config.min_words);
  const double lo = static_cast<double>(config.min_words) + span * uniform(rng, 0.0, 0.5);
  p.min_words = static_cast<std::size_t>(lo);
  p.max_words = std::max(p.min_words, static_cast<std::size_t>(lo + span * uniform(rng, 0.2, 0.5)));
  p.max_words = std::min(p.max_words, config.max_words);
  return p;
}

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string upper(std::string w) {
  for (char& c : w) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return w;
}

std::string generate_text(Rng& rng, const AuthorProfile& p, const std::vector<std::string>& vocab,
                          std::size_t topic) {
  static const std::vector<std::string> ender_marks = {".", "!", "?", "..."};
  const auto& fw = default_function_words();
  const std::size_t target = p.min_words + rng.uniform_index(p.max_words - p.min_words + 1);

  std::string out;
  std::size_t words = 0;
  bool paragraph_start = true;
  while (words < target) {
    const double raw = p.sentence_mean + p.sentence_sd * rng.normal();
    const auto len = static_cast<std::size_t>(std::max(3.0, std::round(raw)));
    for (std::size_t i = 0; i < len; ++i) {
      std::string w;
      const double u = rng.uniform01();
      if (u < p.digit_rate) {
        w = std::to_string(1 + rng.uniform_index(999));
      } else if (u < p.digit_rate + p.function_rate) {
        w = fw[rng.weighted_index(p.function_weights)];
      } else if (rng.uniform01() < 0.5) {
        const auto& words_in_topic = p.topics[topic];
        w = vocab[words_in_topic[rng.uniform_index(words_in_topic.size())]];
      } else {
        w = vocab[rng.weighted_index(p.vocab_weights)];
      }
      if (i == 0 && rng.uniform01() < p.capitalize_start) w = capitalize(w);
      if (p.caps_word_rate > 0 && rng.uniform01() < p.caps_word_rate) w = upper(w);
      if (p.quote_rate > 0 && rng.uniform01() < p.quote_rate) {
        const char q = rng.uniform01() < 0.5 ? '"' : '\'';
        w = q + w + q;
      }
      for (const auto& [c, rate] : p.specials) {
        if (rng.uniform01() < rate) {
          if (rng.uniform01() < 0.5) {
            w.insert(w.begin(), c);
          } else {
            w.push_back(c);
          }
        }
      }
      if (!out.empty()) out += paragraph_start ? "\n\n" : " ";
      paragraph_start = false;
      out += w;
      ++words;
      if (i + 1 < len) {
        const double v = rng.uniform01();
        if (v < p.comma_rate) {
          out += ',';
        } else if (v < p.comma_rate + p.semicolon_rate) {
          out += ';';
        } else if (v < p.comma_rate + p.semicolon_rate + p.colon_rate) {
          out += ':';
        } else if (v < p.comma_rate + p.semicolon_rate + p.colon_rate + p.dash_rate) {
          out += " -";
        }
      }
    }
    out += ender_marks[rng.weighted_index(p.enders)];
    if (rng.uniform01() < p.paragraph_prob) paragraph_start = true;
  }
  return out;
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticConfig& config) {
  if (config.num_authors == 0 || config.samples_per_author == 0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic corpus needs authors and samples");
  }
  if (config.min_words < 1 || config.max_words < config.min_words) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic word bounds are invalid");
  }
  const auto vocab = build_vocabulary(config.seed);
  std::vector<WritingSample> samples;
  for (std::size_t a = 0; a < config.num_authors; ++a) {
    char author_id[32];
    std::snprintf(author_id, sizeof author_id, "author_%02zu", a);
    Rng rng(mix_seed(config.seed, author_id));
    const AuthorProfile profile = make_profile(rng, a, config);
    for (std::size_t s = 0; s < config.samples_per_author; ++s) {
      char id[48];
      std::snprintf(id, sizeof id, "%s-s%03zu", author_id, s);
      const std::size_t topic = rng.uniform_index(profile.topics.size());
      samples.push_back(make_sample(id, author_id, generate_text(rng, profile, vocab, topic), profile.genre,
                                    {{"topic", "t" + std::to_string(topic)}}));
    }
  }
  return Corpus(std::move(samples));
}

}  // namespace stylemimic
