#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Inline bracket citations: `marker := "[" int ("," int)* "]"`.
// Parsing is liberal (markers anywhere in a sentence, `[1,2]` == `[1][2]`,
// out-of-range indices dropped and counted); rendering is canonical
// ("... blue [1][3]." with ascending indices before terminal punctuation).
namespace citeforge {

struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const SentenceSpan&) const = default;
};

struct CitedSentence {
  std::string text;            // without citation markers
  std::vector<int> citations;  // 1-based passage indices, ascending, unique
  SentenceSpan char_span;      // offsets into the raw answer
};

struct CitedAnswer {
  std::string raw;
  std::vector<CitedSentence> sentences;
  std::size_t dropped_citation_count = 0;

  std::size_t citation_count() const noexcept;
};

/// Field-wise equality of sentences (text and citations) and the dropped
/// count; raw text and character spans are ignored.
bool structurally_equal(const CitedAnswer& a, const CitedAnswer& b);

/// Rule-based splitter. A sentence ends at a run of `.`, `!` or `?` (plus
/// closing quotes) followed by whitespace or end of text, unless the run sits
/// inside brackets/parentheses or closes a guarded abbreviation. Citation
/// markers directly after the terminator stay with the sentence they follow.
/// Spans exclude surrounding whitespace. Throws EmptyText.
std::vector<SentenceSpan> segment_sentences(std::string_view text);

/// Abbreviations that never end a sentence (lowercase, with their periods).
const std::vector<std::string>& abbreviation_guard_list();

/// Throws EmptyText; never throws on malformed brackets.
CitedAnswer parse_cited_answer(std::string_view raw, std::size_t passage_count);

std::string render_cited_answer(const CitedAnswer& answer);

/// Canonical marker string for a citation set, e.g. "[1][3]".
std::string render_markers(std::vector<int> citations);

/// Removes every syntactically valid marker and repairs the surrounding
/// whitespace. Text without markers is returned unchanged.
std::string strip_citations(std::string_view text);

}  // namespace citeforge
