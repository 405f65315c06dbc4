#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stylemimic {

enum class Genre { kEmail, kBlog, kNews, kForum, kOther };

std::string_view to_string(Genre genre);
/// Unknown names map to kOther.
Genre parse_genre(std::string_view name);
/// Noun phrase substituted for $genre in generation prompts.
std::string_view genre_display_name(Genre genre);

struct WritingSample {
  std::string id;
  std::string author_id;
  std::string text;
  Genre genre = Genre::kOther;
  std::map<std::string, std::string> meta;
  std::size_t word_count = 0;
};

/// Builds a sample and derives word_count from the text.
WritingSample make_sample(std::string id, std::string author_id, std::string text,
                          Genre genre = Genre::kOther,
                          std::map<std::string, std::string> meta = {});

/// Immutable, ordered collection of samples with an author index.
/// Ids are unique; every indexed author has at least one sample.
class Corpus {
 public:
  Corpus() = default;
  /// Throws DuplicateId if two samples share an id.
  explicit Corpus(std::vector<WritingSample> samples);

  const std::vector<WritingSample>& samples() const noexcept { return samples_; }
  const std::map<std::string, std::vector<std::string>>& author_index() const noexcept {
    return author_index_;
  }
  std::vector<std::string> authors() const;
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }

  bool contains(std::string_view id) const;
  /// Throws MissingReference for unknown ids.
  const WritingSample& at(std::string_view id) const;
  /// Samples of one author in corpus order. Empty if the author is unknown.
  std::vector<const WritingSample*> samples_of(std::string_view author_id) const;

 private:
  std::vector<WritingSample> samples_;
  std::map<std::string, std::vector<std::string>> author_index_;
  std::map<std::string, std::size_t, std::less<>> position_;
};

/// Optional ingestion-time cleanup: drops samples whose text matches any
/// exclude pattern (ECMAScript regex, searched anywhere in the text).
struct IngestOptions {
  std::vector<std::string> exclude_patterns;
};

Corpus ingest_jsonl(const std::filesystem::path& path, const IngestOptions& options = {});
Corpus parse_jsonl(std::string_view content, const IngestOptions& options = {});
void write_jsonl(const Corpus& corpus, const std::filesystem::path& path);
std::string to_jsonl(const Corpus& corpus);

/// Keeps samples with min_words <= word_count <= max_words.
Corpus filter_length(const Corpus& corpus, std::size_t min_words, std::size_t max_words);

/// Keeps the n authors with the most samples; ties go to the smaller author id.
Corpus top_authors(const Corpus& corpus, std::size_t n);

struct SplitConfig {
  std::size_t min_words = 100;
  std::size_t max_words = 1500;
  std::size_t top_n_authors = 100;
  double train_fraction = 0.5;
  std::optional<std::string> stratify_key;
  std::uint64_t seed = 0;
};

struct CorpusSplit {
  Corpus train;
  Corpus test;
};

/// Per-author seeded shuffle, train takes floor(train_fraction * n) and test
/// the rest. With a stratify key the rule is applied inside each stratum.
/// The length/top-n fields of the config are not applied here.
CorpusSplit split(const Corpus& corpus, const SplitConfig& config);

/// filter_length, top_authors, then split.
CorpusSplit prepare_split(const Corpus& corpus, const SplitConfig& config);

/// JSONL of {"id", "partition"} in train-then-test corpus order.
std::string split_manifest_jsonl(const CorpusSplit& split);

}  // namespace stylemimic
