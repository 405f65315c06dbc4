#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stylemimic {

/// Maximal runs of non-whitespace characters, in order. This is the one word
/// count used by every length rule in the toolkit.
std::vector<std::string_view> tokenize_words(std::string_view text);

std::size_t count_words(std::string_view text);

/// Lowercases ASCII letters and strips leading/trailing characters that are
/// not ASCII alphanumerics or non-ASCII bytes. May return an empty string.
std::string normalize_token(std::string_view token);

/// Normalized, non-empty tokens of `text`.
std::vector<std::string> normalized_words(std::string_view text);

bool is_ascii_space(char c) noexcept;

/// Whitespace-only or empty.
bool is_blank(std::string_view text) noexcept;

/// Decodes UTF-8 into code points; invalid bytes decode to U+FFFD one byte
/// at a time.
std::vector<char32_t> decode_utf8(std::string_view text);

std::size_t utf8_length(std::string_view text);

/// First `n` tokens joined by single spaces.
std::string join_first_words(std::string_view text, std::size_t n);

}  // namespace stylemimic
