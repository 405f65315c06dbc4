#include "stylemimic/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stylemimic/error.hpp"
#include "stylemimic/rng.hpp"
#include "stylemimic/text.hpp"

namespace stylemimic {

using json = nlohmann::json;

std::string_view to_string(Genre genre) {
  switch (genre) {
    case Genre::kEmail: return "email";
    case Genre::kBlog: return "blog";
    case Genre::kNews: return "news";
    case Genre::kForum: return "forum";
    case Genre::kOther: return "other";
  }
  return "other";
}

Genre parse_genre(std::string_view name) {
  if (name == "email") return Genre::kEmail;
  if (name == "blog") return Genre::kBlog;
  if (name == "news") return Genre::kNews;
  if (name == "forum") return Genre::kForum;
  return Genre::kOther;
}

std::string_view genre_display_name(Genre genre) {
  switch (genre) {
    case Genre::kEmail: return "email";
    case Genre::kBlog: return "blog post";
    case Genre::kNews: return "news article";
    case Genre::kForum: return "forum post";
    case Genre::kOther: return "writing";
  }
  return "writing";
}

WritingSample make_sample(std::string id, std::string author_id, std::string text, Genre genre,
                          std::map<std::string, std::string> meta) {
  WritingSample s;
  s.id = std::move(id);
  s.author_id = std::move(author_id);
  s.word_count = count_words(text);
  s.text = std::move(text);
  s.genre = genre;
  s.meta = std::move(meta);
  return s;
}

Corpus::Corpus(std::vector<WritingSample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    auto& s = samples_[i];
    s.word_count = count_words(s.text);
    if (!position_.emplace(s.id, i).second) throw Error(ErrorCode::kDuplicateId, s.id);
    author_index_[s.author_id].push_back(s.id);
  }
}

std::vector<std::string> Corpus::authors() const {
  std::vector<std::string> out;
  out.reserve(author_index_.size());
  for (const auto& [author, ids] : author_index_) out.push_back(author);
  return out;
}

bool Corpus::contains(std::string_view id) const { return position_.find(id) != position_.end(); }

const WritingSample& Corpus::at(std::string_view id) const {
  auto it = position_.find(id);
  if (it == position_.end()) throw Error(ErrorCode::kMissingReference, std::string(id));
  return samples_[it->second];
}

std::vector<const WritingSample*> Corpus::samples_of(std::string_view author_id) const {
  std::vector<const WritingSample*> out;
  auto it = author_index_.find(std::string(author_id));
  if (it == author_index_.end()) return out;
  out.reserve(it->second.size());
  for (const auto& id : it->second) out.push_back(&at(id));
  return out;
}

namespace {

std::string required_string(const json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    throw Error(ErrorCode::kMissingField, std::string(field) + " (line " + std::to_string(line_no) + ")");
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::kMalformedLine,
                "line " + std::to_string(line_no) + ": field " + field + " is not a string");
  }
  return it->get<std::string>();
}

}  // namespace

Corpus parse_jsonl(std::string_view content, const IngestOptions& options) {
  std::vector<std::regex> excludes;
  for (const auto& pattern : options.exclude_patterns) excludes.emplace_back(pattern);

  std::vector<WritingSample> samples;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no));
    }
    if (!obj.is_object()) throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no));

    auto id = required_string(obj, "id", line_no);
    auto author = required_string(obj, "author_id", line_no);
    auto text = required_string(obj, "text", line_no);
    Genre genre = Genre::kOther;
    if (auto it = obj.find("genre"); it != obj.end() && it->is_string()) {
      genre = parse_genre(it->get<std::string>());
    }
    std::map<std::string, std::string> meta;
    if (auto it = obj.find("meta"); it != obj.end() && !it->is_null()) {
      if (!it->is_object()) throw Error(ErrorCode::kMalformedLine, "line " + std::to_string(line_no));
      for (const auto& [key, value] : it->items()) {
        meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
      }
    }
    if (!seen.insert(id).second) throw Error(ErrorCode::kDuplicateId, id);

    if (is_blank(text)) continue;
    const bool excluded = std::any_of(excludes.begin(), excludes.end(),
                                      [&](const std::regex& re) { return std::regex_search(text, re); });
    if (excluded) continue;
    samples.push_back(make_sample(std::move(id), std::move(author), std::move(text), genre, std::move(meta)));
  }
  return Corpus(std::move(samples));
}

Corpus ingest_jsonl(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_jsonl(buffer.str(), options);
}

std::string to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.samples()) {
    json obj = {{"id", s.id},
                {"author_id", s.author_id},
                {"text", s.text},
                {"genre", std::string(to_string(s.genre))},
                {"meta", s.meta}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << to_jsonl(corpus);
}

Corpus filter_length(const Corpus& corpus, std::size_t min_words, std::size_t max_words) {
  std::vector<WritingSample> kept;
  for (const auto& s : corpus.samples()) {
    if (s.word_count >= min_words && s.word_count <= max_words) kept.push_back(s);
  }
  return Corpus(std::move(kept));
}

Corpus top_authors(const Corpus& corpus, std::size_t n) {
  const auto& index = corpus.author_index();
  if (n > index.size()) {
    throw Error(ErrorCode::kTooFewAuthors,
                "requested " + std::to_string(n) + ", have " + std::to_string(index.size()));
  }
  std::vector<std::pair<std::string, std::size_t>> counts;
  for (const auto& [author, ids] : index) counts.emplace_back(author, ids.size());
  std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::set<std::string> keep;
  for (std::size_t i = 0; i < n; ++i) keep.insert(counts[i].first);

  std::vector<WritingSample> kept;
  for (const auto& s : corpus.samples()) {
    if (keep.count(s.author_id)) kept.push_back(s);
  }
  return Corpus(std::move(kept));
}

CorpusSplit split(const Corpus& corpus, const SplitConfig& config) {
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "train_fraction must be in (0, 1)");
  }
  std::set<std::string> train_ids;
  for (const auto& [author, ids] : corpus.author_index()) {
    if (ids.size() < 2) throw Error(ErrorCode::kAuthorTooSmall, author);

    std::map<std::string, std::vector<std::string>> strata;
    for (const auto& id : ids) {
      std::string key;
      if (config.stratify_key) {
        const auto& meta = corpus.at(id).meta;
        if (auto it = meta.find(*config.stratify_key); it != meta.end()) key = it->second;
      }
      strata[key].push_back(id);
    }

    Rng rng(mix_seed(config.seed, author));
    std::size_t n_train = 0;
    for (auto& [value, members] : strata) {
      rng.shuffle(members);
      const auto take = static_cast<std::size_t>(
          std::floor(config.train_fraction * static_cast<double>(members.size())));
      for (std::size_t i = 0; i < take; ++i) train_ids.insert(members[i]);
      n_train += take;
    }
    if (n_train == 0 || n_train == ids.size()) {
      throw Error(ErrorCode::kAuthorTooSmall, author + " would leave one partition empty");
    }
  }

  std::vector<WritingSample> train;
  std::vector<WritingSample> test;
  for (const auto& s : corpus.samples()) {
    (train_ids.count(s.id) ? train : test).push_back(s);
  }
  return {Corpus(std::move(train)), Corpus(std::move(test))};
}

CorpusSplit prepare_split(const Corpus& corpus, const SplitConfig& config) {
  if (config.min_words > config.max_words) {
    throw Error(ErrorCode::kInvalidArgument, "min_words > max_words");
  }
  auto filtered = filter_length(corpus, config.min_words, config.max_words);
  auto top = top_authors(filtered, config.top_n_authors);
  return split(top, config);
}

std::string split_manifest_jsonl(const CorpusSplit& split) {
  std::string out;
  for (const auto& s : split.train.samples()) {
    out += json{{"id", s.id}, {"partition", "train"}}.dump() + "\n";
  }
  for (const auto& s : split.test.samples()) {
    out += json{{"id", s.id}, {"partition", "test"}}.dump() + "\n";
  }
  return out;
}

}  // namespace stylemimic
