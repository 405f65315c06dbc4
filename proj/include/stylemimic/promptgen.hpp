#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stylemimic {

enum class TemplateName { kSummarize, kFewshot, kZeroshot, kSnippet };

std::string_view to_string(TemplateName name);

struct PromptTemplate {
  TemplateName name;
  std::string body;
};

/// Built-in template bodies, byte-exact.
const PromptTemplate& builtin_template(TemplateName name);
/// Expected SHA-256 of each template body.
std::string_view expected_template_digest(TemplateName name);

/// Reads `<dir>/<name>.txt` and checks it against the expected digest.
/// Throws TemplateDigestMismatch or IoError.
PromptTemplate load_template(const std::filesystem::path& dir, TemplateName name);
void verify_template_assets(const std::filesystem::path& dir);

struct RenderedPrompt {
  std::string text;
  std::string digest;  // SHA-256 of text
  TemplateName template_name = TemplateName::kFewshot;
  std::vector<std::pair<std::string, std::string>> substitutions;  // in order of appearance
};

/// Single-pass substitution of $identifier placeholders. Substituted values
/// are never re-scanned. Throws UnresolvedPlaceholder for identifiers without
/// a value.
RenderedPrompt render_template(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values);

/// "Sample 1:\n<text>" blocks separated by one blank line.
std::string join_writing_samples(std::span<const std::string> samples);

RenderedPrompt render_fewshot(std::span<const std::string> samples, std::string_view summary,
                              std::string_view genre, int num_words);
RenderedPrompt render_zeroshot(std::string_view summary, std::string_view genre, int num_words);
RenderedPrompt render_snippet_prompt(std::span<const std::string> samples, std::string_view summary,
                                     std::string_view genre, int num_words, std::string_view snippet);
RenderedPrompt render_summarize(std::string_view text);

/// Reference length rounded half-up to the nearest multiple of 50, at least 50.
int target_num_words(std::size_t reference_word_count);

}  // namespace stylemimic
