#include "stylemimic/promptgen.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "stylemimic/digest.hpp"
#include "stylemimic/error.hpp"
#include "stylemimic/text.hpp"

namespace stylemimic {

namespace {

constexpr std::string_view kSummarizeBody =
    R"(You will be given a piece of text. Your task is to summarize the text in a concise and clear manner, capturing the main ideas and key points while maintaining the original meaning.

### Text to Summarize

$text

### Instructions

- Provide a summary that is brief yet comprehensive.
- Ensure that the summary accurately reflects the content of the original text.
- Avoid adding any personal opinions or interpretations.
- Do not output anything other than the summary.

Begin your response below:)";

constexpr std::string_view kFewshotBody =
    R"(You will be given one or more writing samples from a specific author. Your task is to analyze the author's style, tone, and voice, then craft a new piece of $genre that closely mimics their writing based on a provided summary. Your writing should be around $num_words words.

### Author's Writing Sample(s)

$writing_samples

### Writing Task Summary

$summary

### Instructions

- Ensure your writing faithfully replicates the author's style, including tone, word choices, and sentence structure, etc.
- Maintain consistency with the author's voice while accurately reflecting the details of the given summary.
- Strive to make your writing indistinguishable from the original author's work.
- Do not output anything other than the writing.

Begin your response below:)";

constexpr std::string_view kZeroshotBody =
    R"(Given the following summary, your task is to generate a writing sample around $num_words words. The genre of the writing is $genre. Do not output anything other than the writing.

### Writing Task Summary

$summary

Begin your response below:)";

constexpr std::string_view kSnippetBody =
    R"(You will be given one or more writing samples from a specific author plus a text snippet of $genre from the same author. Your task is to analyze the author's style, tone, and voice, then generate a continuation for the provided human-authored text snippet with around $num_words words that closely mimics their writing based on a provided summary.

### Author's Writing Sample(s)

$writing_samples

### Writing Task Summary

$summary

### Human-Authored Text Snippet

$snippet

### Instructions

- Ensure your writing faithfully replicates the author's style, including tone, word choices, and sentence structure, etc.
- Maintain consistency with the author's voice while accurately reflecting the details of the given summary.
- Strive to make your writing indistinguishable from the original author's work.
- Do not output anything other than the writing.

Begin your response below:)";

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

std::string_view to_string(TemplateName name) {
  switch (name) {
    case TemplateName::kSummarize: return "summarize";
    case TemplateName::kFewshot: return "fewshot";
    case TemplateName::kZeroshot: return "zeroshot";
    case TemplateName::kSnippet: return "snippet";
  }
  return "fewshot";
}

const PromptTemplate& builtin_template(TemplateName name) {
  static const PromptTemplate summarize{TemplateName::kSummarize, std::string(kSummarizeBody)};
  static const PromptTemplate fewshot{TemplateName::kFewshot, std::string(kFewshotBody)};
  static const PromptTemplate zeroshot{TemplateName::kZeroshot, std::string(kZeroshotBody)};
  static const PromptTemplate snippet{TemplateName::kSnippet, std::string(kSnippetBody)};
  switch (name) {
    case TemplateName::kSummarize: return summarize;
    case TemplateName::kFewshot: return fewshot;
    case TemplateName::kZeroshot: return zeroshot;
    case TemplateName::kSnippet: return snippet;
  }
  return fewshot;
}

std::string_view expected_template_digest(TemplateName name) {
  switch (name) {
    case TemplateName::kSummarize: return "e1c6508fc3cfe080de2b4c177b963d2479f8b86707344ebe80d4ed37d88794bb";
    case TemplateName::kFewshot: return "33e01f14e20f3a20b5894bb18ce7afa0bf2e8351fdae6bbee8bad3502632949e";
    case TemplateName::kZeroshot: return "cb7ed2313c6888859a9af5a4d7f159d8994622378214c10ef3eb3fb0618b3a87";
    case TemplateName::kSnippet: return "7ac2a3175125cc61fe3ee08d253c463a2009591506275734a9c633cf7d534e93";
  }
  return {};
}

PromptTemplate load_template(const std::filesystem::path& dir, TemplateName name) {
  const auto path = dir / (std::string(to_string(name)) + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  PromptTemplate tmpl{name, buffer.str()};
  if (sha256_hex(tmpl.body) != expected_template_digest(name)) {
    throw Error(ErrorCode::kTemplateDigestMismatch, path.string());
  }
  return tmpl;
}

void verify_template_assets(const std::filesystem::path& dir) {
  for (auto name : {TemplateName::kSummarize, TemplateName::kFewshot, TemplateName::kZeroshot,
                    TemplateName::kSnippet}) {
    load_template(dir, name);
  }
}

RenderedPrompt render_template(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values) {
  RenderedPrompt out;
  out.template_name = tmpl.name;
  const std::string_view body = tmpl.body;
  std::size_t i = 0;
  while (i < body.size()) {
    const auto dollar = body.find('$', i);
    if (dollar == std::string_view::npos) {
      out.text.append(body.substr(i));
      break;
    }
    out.text.append(body.substr(i, dollar - i));
    std::size_t end = dollar + 1;
    while (end < body.size() && is_ident_char(body[end])) ++end;
    const std::string key(body.substr(dollar + 1, end - dollar - 1));
    auto it = values.find(key);
    if (key.empty() || it == values.end()) {
      throw Error(ErrorCode::kUnresolvedPlaceholder, "$" + key + " in " + std::string(to_string(tmpl.name)));
    }
    out.text.append(it->second);
    out.substitutions.emplace_back(key, it->second);
    i = end;
  }
  out.digest = sha256_hex(out.text);
  return out;
}

std::string join_writing_samples(std::span<const std::string> samples) {
  std::string out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += "Sample " + std::to_string(i + 1) + ":\n";
    out += samples[i];
  }
  return out;
}

namespace {

void check_generation_inputs(std::string_view summary, std::string_view genre, int num_words) {
  if (is_blank(summary)) throw Error(ErrorCode::kUnresolvedInput, "summary is empty");
  if (genre.empty()) throw Error(ErrorCode::kUnresolvedInput, "genre is empty");
  if (num_words < 1) throw Error(ErrorCode::kInvalidArgument, "num_words must be >= 1");
}

}  // namespace

RenderedPrompt render_fewshot(std::span<const std::string> samples, std::string_view summary,
                              std::string_view genre, int num_words) {
  if (samples.empty()) throw Error(ErrorCode::kNoSamples, "few-shot prompt needs writing samples");
  check_generation_inputs(summary, genre, num_words);
  return render_template(builtin_template(TemplateName::kFewshot),
                         {{"genre", std::string(genre)},
                          {"num_words", std::to_string(num_words)},
                          {"writing_samples", join_writing_samples(samples)},
                          {"summary", std::string(summary)}});
}

RenderedPrompt render_zeroshot(std::string_view summary, std::string_view genre, int num_words) {
  check_generation_inputs(summary, genre, num_words);
  return render_template(builtin_template(TemplateName::kZeroshot),
                         {{"genre", std::string(genre)},
                          {"num_words", std::to_string(num_words)},
                          {"summary", std::string(summary)}});
}

RenderedPrompt render_snippet_prompt(std::span<const std::string> samples, std::string_view summary,
                                     std::string_view genre, int num_words, std::string_view snippet) {
  if (samples.empty()) throw Error(ErrorCode::kNoSamples, "snippet prompt needs writing samples");
  check_generation_inputs(summary, genre, num_words);
  if (is_blank(snippet)) throw Error(ErrorCode::kUnresolvedInput, "snippet is empty");
  return render_template(builtin_template(TemplateName::kSnippet),
                         {{"genre", std::string(genre)},
                          {"num_words", std::to_string(num_words)},
                          {"writing_samples", join_writing_samples(samples)},
                          {"summary", std::string(summary)},
                          {"snippet", std::string(snippet)}});
}

RenderedPrompt render_summarize(std::string_view text) {
  if (is_blank(text)) throw Error(ErrorCode::kEmptyText, "nothing to summarize");
  return render_template(builtin_template(TemplateName::kSummarize), {{"text", std::string(text)}});
}

int target_num_words(std::size_t reference_word_count) {
  const auto rounded = static_cast<int>((reference_word_count + 25) / 50 * 50);
  return std::max(50, rounded);
}

}  // namespace stylemimic
