#include "stylemimic/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "stylemimic/digest.hpp"
#include "stylemimic/error.hpp"
#include "stylemimic/text.hpp"

namespace stylemimic {

// ---------------------------------------------------------------------------
// Lexicon

Lexicon::Lexicon(std::vector<Category> categories) : categories_(std::move(categories)) {
  std::set<std::string> names;
  for (const auto& cat : categories_) {
    if (cat.name.empty()) throw Error(ErrorCode::kInvalidArgument, "empty category name");
    if (!names.insert(cat.name).second) throw Error(ErrorCode::kInvalidArgument, "duplicate category " + cat.name);
    if (cat.patterns.empty()) throw Error(ErrorCode::kInvalidArgument, "category " + cat.name + " has no patterns");
    Compiled compiled;
    for (const auto& p : cat.patterns) {
      if (p.empty() || p == "*") throw Error(ErrorCode::kInvalidArgument, "empty pattern in " + cat.name);
      if (p.back() == '*') {
        compiled.prefixes.push_back(p.substr(0, p.size() - 1));
      } else {
        compiled.literals.push_back(p);
      }
    }
    std::sort(compiled.literals.begin(), compiled.literals.end());
    compiled_.push_back(std::move(compiled));
  }
}

bool Lexicon::matches(std::size_t index, std::string_view token) const {
  const auto& c = compiled_.at(index);
  if (std::binary_search(c.literals.begin(), c.literals.end(), token)) return true;
  return std::any_of(c.prefixes.begin(), c.prefixes.end(),
                     [&](const std::string& prefix) { return token.starts_with(prefix); });
}

Lexicon parse_lexicon(std::string_view content) {
  std::vector<Lexicon::Category> categories;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    auto first = line.find_first_not_of(" \t");
    if (line[first] == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::kMalformedLine, "lexicon line " + std::to_string(line_no) + ": missing ':'");
    }
    auto name_tokens = tokenize_words(std::string_view(line).substr(0, colon));
    if (name_tokens.size() != 1) {
      throw Error(ErrorCode::kMalformedLine, "lexicon line " + std::to_string(line_no) + ": bad category name");
    }
    Lexicon::Category cat;
    cat.name = std::string(name_tokens.front());
    for (auto tok : tokenize_words(std::string_view(line).substr(colon + 1))) {
      std::string pattern(tok);
      for (char& ch : pattern) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
      }
      cat.patterns.push_back(std::move(pattern));
    }
    if (cat.patterns.empty() || !names.insert(cat.name).second) {
      throw Error(ErrorCode::kMalformedLine,
                  "lexicon line " + std::to_string(line_no) + ": empty or duplicate category " + cat.name);
    }
    categories.push_back(std::move(cat));
  }
  return Lexicon(std::move(categories));
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_lexicon(buffer.str());
}

namespace {

constexpr std::string_view kDefaultLexicon = R"(# Open stand-in for a psycholinguistic lexicon. One category per line.
i_self: i me my mine myself i'm i've i'd i'll
we_group: we us our ours ourselves we're we've
you_other: you your yours yourself yourselves you're
third_person: he she him her his hers they them their theirs
negation: no not never none nobody nothing neither nor don't can't won't isn't wasn't didn't doesn't
positive_emotion: good great happy love* nice glad best wonderful enjoy* hope* thank* fun excit*
negative_emotion: bad sad angry hate* worr* afraid terribl* awful upset hurt* sorry
cognitive: think* know* because reason* understand* realiz* believ* consider* mean* why
tentative: maybe perhaps guess* might possibl* seem* probabl* almost unclear
certainty: always certain* definite* sure absolutely clear* totally
social: friend* family talk* people meet* share* together call* told tell*
work: work* job* meeting* project* business* office* deadline* report* manag* client*
time: today tomorrow yesterday now soon later week* month* year* hour* morning
money: money pay* price* cost* cash dollar* market* stock* budget*
leisure: game* movie* music song* party* weekend vacation* travel*
)";

}  // namespace

const Lexicon& default_lexicon() {
  static const Lexicon lexicon = parse_lexicon(kDefaultLexicon);
  return lexicon;
}

std::vector<double> extract_category_frequencies(std::string_view text, const Lexicon& lexicon) {
  if (is_blank(text)) throw Error(ErrorCode::kEmptyText, "category frequencies need text");
  auto tokens = tokenize_words(text);
  std::vector<double> counts(lexicon.size(), 0.0);
  for (auto tok : tokens) {
    auto norm = normalize_token(tok);
    if (norm.empty()) continue;
    for (std::size_t c = 0; c < lexicon.size(); ++c) {
      if (lexicon.matches(c, norm)) counts[c] += 1.0;
    }
  }
  for (auto& v : counts) v /= static_cast<double>(tokens.size());
  return counts;
}

// ---------------------------------------------------------------------------
// Schema

const std::vector<std::string>& default_function_words() {
  static const std::vector<std::string> words = {
      "the",  "of",   "and",  "a",    "to",    "in",   "is",   "it",   "you",  "that",
      "he",   "was",  "for",  "on",   "are",   "with", "as",   "i",    "his",  "they",
      "be",   "at",   "one",  "have", "this",  "from", "or",   "had",  "by",   "but",
      "not",  "what", "all",  "were", "we",    "when", "your", "can",  "said", "there",
      "an",   "which", "she", "do",   "their", "if",   "will", "up",   "about", "so"};
  return words;
}

const std::vector<char>& default_special_chars() {
  static const std::vector<char> chars = {'~', '@', '#', '$', '%', '^', '&', '*', '-', '_',
                                          '=', '+', '>', '<', '[', ']', '{', '}', '/', '\\'};
  return chars;
}

const std::vector<char>& default_punctuation_chars() {
  static const std::vector<char> chars = {',', '.', '?', '!', ';', ':', '\'', '"'};
  return chars;
}

namespace {

const std::array<std::string_view, 6> kCharClasses = {"letters", "uppercase", "digits",
                                                      "whitespace", "punctuation", "other"};
const std::array<std::string_view, 6> kWordStats = {"avg_length",        "short_fraction",
                                                    "type_token_ratio",  "hapax_ratio",
                                                    "all_caps_fraction", "capitalized_fraction"};
const std::array<std::string_view, 3> kSentenceStats = {"per_100_words", "mean_length", "std_length"};
const std::array<std::string_view, 2> kParagraphStats = {"count", "mean_words"};

template <std::size_t N>
bool one_of(const std::array<std::string_view, N>& options, std::string_view value) {
  return std::find(options.begin(), options.end(), value) != options.end();
}

}  // namespace

FeatureSchema::FeatureSchema(std::vector<std::string> names, Lexicon lexicon)
    : names_(std::move(names)), lexicon_(std::move(lexicon)) {
  if (names_.empty()) throw Error(ErrorCode::kInvalidArgument, "schema has no features");
  std::set<std::string> seen;
  std::map<std::string, std::size_t> categories;
  for (std::size_t i = 0; i < lexicon_.size(); ++i) categories[lexicon_.categories()[i].name] = i;

  std::string joined;
  for (const auto& name : names_) {
    if (!seen.insert(name).second) throw Error(ErrorCode::kInvalidArgument, "duplicate feature " + name);
    auto colon = name.find(':');
    if (colon == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "bad feature name " + name);
    const std::string family = name.substr(0, colon);
    std::string arg = name.substr(colon + 1);
    Entry entry{Kind::kCharRatio, arg, 0};
    bool ok = true;
    if (family == "char_ratio") {
      ok = one_of(kCharClasses, arg);
    } else if (family == "special" || family == "punct") {
      entry.kind = family == "special" ? Kind::kSpecial : Kind::kPunct;
      ok = arg.size() == 1;
    } else if (family == "word") {
      entry.kind = Kind::kWordStat;
      ok = one_of(kWordStats, arg);
    } else if (family == "sentence") {
      entry.kind = Kind::kSentenceStat;
      ok = one_of(kSentenceStats, arg);
    } else if (family == "paragraph") {
      entry.kind = Kind::kParagraphStat;
      ok = one_of(kParagraphStats, arg);
    } else if (family == "fw") {
      entry.kind = Kind::kFunctionWord;
      ok = !arg.empty() && normalize_token(arg) == arg;
    } else if (family == "lex") {
      entry.kind = Kind::kLexiconCategory;
      auto it = categories.find(arg);
      ok = it != categories.end();
      if (ok) entry.lexicon_index = it->second;
    } else {
      ok = false;
    }
    if (!ok) throw Error(ErrorCode::kInvalidArgument, "unknown feature " + name);
    entries_.push_back(std::move(entry));
    joined += name;
    joined += '\n';
  }
  id_ = sha256_hex(joined);
}

std::vector<std::string> FeatureSchema::function_words() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.kind == Kind::kFunctionWord) out.push_back(e.arg);
  }
  return out;
}

std::vector<char> FeatureSchema::special_chars() const {
  std::vector<char> out;
  for (const auto& e : entries_) {
    if (e.kind == Kind::kSpecial) out.push_back(e.arg[0]);
  }
  return out;
}

FeatureSchema default_schema() {
  std::vector<std::string> names;
  for (auto c : kCharClasses) names.push_back("char_ratio:" + std::string(c));
  for (char c : default_special_chars()) names.push_back(std::string("special:") + c);
  for (char c : default_punctuation_chars()) names.push_back(std::string("punct:") + c);
  names.push_back("word:avg_length");
  names.push_back("word:short_fraction");
  names.push_back("word:type_token_ratio");
  names.push_back("word:hapax_ratio");
  for (auto s : kSentenceStats) names.push_back("sentence:" + std::string(s));
  for (auto p : kParagraphStats) names.push_back("paragraph:" + std::string(p));
  names.push_back("word:all_caps_fraction");
  names.push_back("word:capitalized_fraction");
  for (const auto& w : default_function_words()) names.push_back("fw:" + w);
  return FeatureSchema(std::move(names));
}

FeatureSchema default_style_schema(const Lexicon& lexicon) {
  auto names = default_schema().names();
  for (const auto& cat : lexicon.categories()) names.push_back("lex:" + cat.name);
  return FeatureSchema(std::move(names), lexicon);
}

// ---------------------------------------------------------------------------
// Extraction

namespace {

bool is_letter(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp == 0xD7 || cp == 0xF7) return false;
  return (cp >= 0xC0 && cp < 0x2000) || (cp >= 0x3040 && cp < 0xD800) || (cp >= 0xF900 && cp < 0xFE00);
}

bool is_upper(char32_t cp) {
  return (cp >= 'A' && cp <= 'Z') || (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7);
}

bool is_space_cp(char32_t cp) { return cp < 0x80 ? is_ascii_space(static_cast<char>(cp)) : cp == 0xA0; }

bool is_ascii_punct(char32_t cp) {
  return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) || (cp >= 0x5B && cp <= 0x60) ||
         (cp >= 0x7B && cp <= 0x7E);
}

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

std::string_view strip(std::string_view token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  while (b < e && !is_word_byte(token[b])) ++b;
  while (e > b && !is_word_byte(token[e - 1])) --e;
  return token.substr(b, e - b);
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

/// Word counts of sentences; a sentence ends at a run of . ! ? followed by
/// whitespace or end of text. The trailing unterminated segment counts too.
std::vector<std::size_t> sentence_lengths(std::string_view text) {
  std::vector<std::size_t> lengths;
  std::size_t start = 0;
  std::size_t i = 0;
  auto close = [&](std::size_t end) {
    auto n = count_words(text.substr(start, end - start));
    if (n > 0) lengths.push_back(n);
    start = end;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i;
      while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
      if (j == text.size() || is_ascii_space(text[j])) close(j);
      i = j;
    } else {
      ++i;
    }
  }
  close(text.size());
  return lengths;
}

/// Word counts of paragraphs separated by blank lines.
std::vector<std::size_t> paragraph_lengths(std::string_view text) {
  std::vector<std::size_t> lengths;
  std::size_t current = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (is_blank(line)) {
      if (current > 0) lengths.push_back(current);
      current = 0;
    } else {
      current += count_words(line);
    }
    pos = end + 1;
  }
  if (current > 0) lengths.push_back(current);
  return lengths;
}

struct TextStats {
  double chars = 0;
  std::array<double, 6> char_class{};  // same order as kCharClasses
  std::array<double, 128> ascii{};
  double tokens = 0;
  double words = 0;
  double word_length_sum = 0;
  double short_words = 0;
  double all_caps = 0;
  double capitalized = 0;
  std::unordered_map<std::string, double> word_counts;
  std::vector<std::size_t> sentences;
  std::vector<std::size_t> paragraphs;
};

TextStats compute_stats(std::string_view text) {
  TextStats st;
  for (char32_t cp : decode_utf8(text)) {
    st.chars += 1;
    if (cp < 128) st.ascii[cp] += 1;
    if (is_letter(cp)) {
      st.char_class[0] += 1;
      if (is_upper(cp)) st.char_class[1] += 1;
    } else if (cp >= '0' && cp <= '9') {
      st.char_class[2] += 1;
    } else if (is_space_cp(cp)) {
      st.char_class[3] += 1;
    } else if (is_ascii_punct(cp)) {
      st.char_class[4] += 1;
    } else {
      st.char_class[5] += 1;
    }
  }
  auto tokens = tokenize_words(text);
  st.tokens = static_cast<double>(tokens.size());
  for (auto tok : tokens) {
    auto raw = strip(tok);
    if (raw.empty()) continue;
    st.words += 1;
    const auto len = utf8_length(raw);
    st.word_length_sum += static_cast<double>(len);
    if (len < 4) st.short_words += 1;
    bool has_letter = false;
    bool has_lower = false;
    for (char c : raw) {
      if (c >= 'a' && c <= 'z') has_lower = true;
      if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) has_letter = true;
    }
    if (has_letter && !has_lower && raw.size() >= 2) st.all_caps += 1;
    if (raw[0] >= 'A' && raw[0] <= 'Z') st.capitalized += 1;
    st.word_counts[normalize_token(raw)] += 1;
  }
  st.sentences = sentence_lengths(text);
  st.paragraphs = paragraph_lengths(text);
  return st;
}

double word_stat(const TextStats& st, std::string_view name) {
  if (name == "avg_length") return ratio(st.word_length_sum, st.words);
  if (name == "short_fraction") return ratio(st.short_words, st.words);
  if (name == "type_token_ratio") return ratio(static_cast<double>(st.word_counts.size()), st.words);
  if (name == "hapax_ratio") {
    double hapax = 0;
    for (const auto& [w, n] : st.word_counts) {
      if (n == 1.0) hapax += 1;
    }
    return ratio(hapax, st.words);
  }
  if (name == "all_caps_fraction") return ratio(st.all_caps, st.words);
  return ratio(st.capitalized, st.words);
}

double sentence_stat(const TextStats& st, std::string_view name) {
  const double n = static_cast<double>(st.sentences.size());
  if (name == "per_100_words") return 100.0 * ratio(n, st.tokens);
  double sum = 0;
  for (auto len : st.sentences) sum += static_cast<double>(len);
  const double mean = ratio(sum, n);
  if (name == "mean_length") return mean;
  double ss = 0;
  for (auto len : st.sentences) ss += (static_cast<double>(len) - mean) * (static_cast<double>(len) - mean);
  return std::sqrt(ratio(ss, n));
}

}  // namespace

StyleFeatureVector extract_style_features(std::string_view text, const FeatureSchema& schema,
                                          std::string source_id) {
  if (is_blank(text)) throw Error(ErrorCode::kEmptyText, source_id.empty() ? "features need text" : source_id);
  const TextStats st = compute_stats(text);

  std::vector<double> lexicon_freqs;
  if (!schema.lexicon().empty()) lexicon_freqs = extract_category_frequencies(text, schema.lexicon());

  StyleFeatureVector out;
  out.schema_id = schema.id();
  out.source_id = std::move(source_id);
  out.values.reserve(schema.dimension());
  for (const auto& e : schema.entries()) {
    double v = 0.0;
    switch (e.kind) {
      case FeatureSchema::Kind::kCharRatio: {
        auto idx = static_cast<std::size_t>(
            std::find(kCharClasses.begin(), kCharClasses.end(), e.arg) - kCharClasses.begin());
        v = ratio(st.char_class[idx], st.chars);
        break;
      }
      case FeatureSchema::Kind::kSpecial:
      case FeatureSchema::Kind::kPunct: {
        const auto c = static_cast<unsigned char>(e.arg[0]);
        v = c < 128 ? ratio(st.ascii[c], st.chars) : 0.0;
        break;
      }
      case FeatureSchema::Kind::kWordStat:
        v = word_stat(st, e.arg);
        break;
      case FeatureSchema::Kind::kSentenceStat:
        v = sentence_stat(st, e.arg);
        break;
      case FeatureSchema::Kind::kParagraphStat: {
        const double n = static_cast<double>(st.paragraphs.size());
        v = e.arg == "count" ? n : ratio(st.tokens, n);
        break;
      }
      case FeatureSchema::Kind::kFunctionWord: {
        auto it = st.word_counts.find(e.arg);
        v = it == st.word_counts.end() ? 0.0 : ratio(it->second, st.words);
        break;
      }
      case FeatureSchema::Kind::kLexiconCategory:
        v = lexicon_freqs[e.lexicon_index];
        break;
    }
    out.values.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scaling

ScalingParams fit_scaling(std::span<const std::vector<double>> rows, double epsilon) {
  if (rows.size() < 2) throw Error(ErrorCode::kTooFewVectors, "scaling needs at least 2 vectors");
  const std::size_t d = rows.front().size();
  ScalingParams p;
  p.epsilon = epsilon;
  p.means.assign(d, 0.0);
  p.stds.assign(d, 0.0);
  for (const auto& row : rows) {
    if (row.size() != d) throw Error(ErrorCode::kDimensionMismatch, "ragged feature matrix");
    for (std::size_t j = 0; j < d; ++j) p.means[j] += row[j];
  }
  const double n = static_cast<double>(rows.size());
  for (auto& m : p.means) m /= n;
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < d; ++j) p.stds[j] += (row[j] - p.means[j]) * (row[j] - p.means[j]);
  }
  for (auto& s : p.stds) s = std::sqrt(s / n);
  return p;
}

std::vector<double> apply_scaling(std::span<const double> values, const ScalingParams& params) {
  if (values.size() != params.means.size()) throw Error(ErrorCode::kDimensionMismatch, "scaling dimension");
  std::vector<double> out(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) {
    out[j] = (values[j] - params.means[j]) / std::max(params.stds[j], params.epsilon);
  }
  return out;
}

std::vector<double> invert_scaling(std::span<const double> scaled, const ScalingParams& params) {
  if (scaled.size() != params.means.size()) throw Error(ErrorCode::kDimensionMismatch, "scaling dimension");
  std::vector<double> out(scaled.size());
  for (std::size_t j = 0; j < scaled.size(); ++j) {
    out[j] = scaled[j] * std::max(params.stds[j], params.epsilon) + params.means[j];
  }
  return out;
}

namespace {

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string feature_matrix_csv(const FeatureSchema& schema, std::span<const StyleFeatureVector> rows) {
  std::ostringstream out;
  out << "source_id";
  for (const auto& name : schema.names()) out << ',' << csv_field(name);
  out << '\n';
  out.precision(17);
  for (const auto& row : rows) {
    if (row.values.size() != schema.dimension()) throw Error(ErrorCode::kDimensionMismatch, row.source_id);
    out << csv_field(row.source_id);
    for (double v : row.values) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace stylemimic
