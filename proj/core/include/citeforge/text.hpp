#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

// Text normalization and tokenization shared by the corpus validator, the
// lexical scorers and the metrics.
namespace citeforge::text {

/// Lowercase ASCII, delete ASCII punctuation, collapse whitespace runs to a
/// single space and trim. Non-ASCII bytes pass through unchanged.
std::string normalize(std::string_view s);

/// Ordered lowercase tokens. A token is a maximal run of ASCII alphanumerics
/// or non-ASCII bytes (so UTF-8 words stay whole).
std::vector<std::string> tokens(std::string_view s);

std::unordered_set<std::string> token_set(std::string_view s);

/// True if `needle` occurs in `haystack` on token boundaries. Both arguments
/// are expected to be outputs of normalize().
bool contains_phrase(std::string_view haystack, std::string_view needle);

/// Fixed 30-word stoplist used by the lexical relevance judge.
const std::unordered_set<std::string>& stopwords();

std::string_view trim(std::string_view s) noexcept;

}  // namespace citeforge::text
