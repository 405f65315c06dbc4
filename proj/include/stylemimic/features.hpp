#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stylemimic {

/// Word categories in the LIWC style. Patterns are lowercase literals or
/// prefixes ending in '*'.
class Lexicon {
 public:
  struct Category {
    std::string name;
    std::vector<std::string> patterns;
  };

  Lexicon() = default;
  /// Throws InvalidArgument on duplicate names or empty pattern lists.
  explicit Lexicon(std::vector<Category> categories);

  const std::vector<Category>& categories() const noexcept { return categories_; }
  std::size_t size() const noexcept { return categories_.size(); }
  bool empty() const noexcept { return categories_.empty(); }

  /// Whether a normalized token matches any pattern of category `index`.
  bool matches(std::size_t index, std::string_view normalized_token) const;

 private:
  struct Compiled {
    std::vector<std::string> literals;  // sorted
    std::vector<std::string> prefixes;
  };
  std::vector<Category> categories_;
  std::vector<Compiled> compiled_;
};

/// "category_name: word1 word2 prefix*" per line; blank lines and lines
/// starting with '#' are skipped. Errors report MalformedLine with the line.
Lexicon parse_lexicon(std::string_view content);
Lexicon load_lexicon(const std::filesystem::path& path);
/// Small open lexicon shipped with the toolkit (also in data/lexicon_default.txt).
const Lexicon& default_lexicon();

/// Per category: matched tokens / total tokens. Throws EmptyText.
std::vector<double> extract_category_frequencies(std::string_view text, const Lexicon& lexicon);

const std::vector<std::string>& default_function_words();
const std::vector<char>& default_special_chars();
const std::vector<char>& default_punctuation_chars();

/// Ordered feature inventory. Names select what is computed:
///   char_ratio:{letters,uppercase,digits,whitespace,punctuation,other}
///   special:<c>, punct:<c>            relative frequency over characters
///   word:{avg_length,short_fraction,type_token_ratio,hapax_ratio,
///         all_caps_fraction,capitalized_fraction}
///   sentence:{per_100_words,mean_length,std_length}
///   paragraph:{count,mean_words}
///   fw:<word>                         relative frequency over words
///   lex:<category>                    category frequency (needs a lexicon)
class FeatureSchema {
 public:
  enum class Kind {
    kCharRatio,
    kSpecial,
    kPunct,
    kWordStat,
    kSentenceStat,
    kParagraphStat,
    kFunctionWord,
    kLexiconCategory,
  };
  struct Entry {
    Kind kind;
    std::string arg;
    std::size_t lexicon_index = 0;
  };

  /// Throws InvalidArgument for unknown or duplicate names.
  explicit FeatureSchema(std::vector<std::string> names, Lexicon lexicon = {});

  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t dimension() const noexcept { return names_.size(); }
  const Lexicon& lexicon() const noexcept { return lexicon_; }
  std::vector<std::string> function_words() const;
  std::vector<char> special_chars() const;
  /// SHA-256 over the newline-joined names.
  const std::string& id() const noexcept { return id_; }

 private:
  std::vector<std::string> names_;
  std::vector<Entry> entries_;
  Lexicon lexicon_;
  std::string id_;
};

/// 95 writing-style features: 6 character classes, 20 special characters,
/// 8 punctuation marks, 11 word/sentence/paragraph statistics and 50
/// function words.
FeatureSchema default_schema();
/// default_schema() followed by one "lex:" entry per lexicon category.
FeatureSchema default_style_schema(const Lexicon& lexicon = default_lexicon());

struct StyleFeatureVector {
  std::string schema_id;
  std::vector<double> values;
  std::string source_id;
};

/// Throws EmptyText for empty or whitespace-only input.
StyleFeatureVector extract_style_features(std::string_view text, const FeatureSchema& schema,
                                          std::string source_id = {});

struct ScalingParams {
  std::vector<double> means;
  std::vector<double> stds;
  double epsilon = 1e-9;
};

/// Column means and population standard deviations. Throws TooFewVectors
/// (< 2 rows) or DimensionMismatch.
ScalingParams fit_scaling(std::span<const std::vector<double>> rows, double epsilon = 1e-9);
std::vector<double> apply_scaling(std::span<const double> values, const ScalingParams& params);
std::vector<double> invert_scaling(std::span<const double> scaled, const ScalingParams& params);

/// CSV with a header of "source_id" followed by the schema names.
std::string feature_matrix_csv(const FeatureSchema& schema, std::span<const StyleFeatureVector> rows);

}  // namespace stylemimic
