#include "citeforge/citext.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>

#include "citeforge/error.hpp"
#include "citeforge/text.hpp"

namespace citeforge {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool attaches_left(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?': case ')':
      return true;
    default:
      return false;
  }
}

struct Marker {
  std::size_t end = 0;
  std::vector<long long> indices;  // -1 marks an index too large to represent
};

std::optional<Marker> match_marker(std::string_view s, std::size_t pos) {
  if (pos >= s.size() || s[pos] != '[') return std::nullopt;
  Marker m;
  std::size_t i = pos + 1;
  auto skip_ws = [&] {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  };
  for (;;) {
    skip_ws();
    if (i >= s.size() || !is_digit(s[i])) return std::nullopt;
    long long v = 0;
    bool overflow = false;
    while (i < s.size() && is_digit(s[i])) {
      if (v > 100'000'000) overflow = true;
      if (!overflow) v = v * 10 + (s[i] - '0');
      ++i;
    }
    m.indices.push_back(overflow ? -1 : v);
    skip_ws();
    if (i >= s.size()) return std::nullopt;
    if (s[i] == ']') {
      m.end = i + 1;
      return m;
    }
    if (s[i] != ',') return std::nullopt;
    ++i;
  }
}

/// Copies `s` with markers removed; `on_marker` sees every index.
template <typename OnIndex>
std::string remove_markers(std::string_view s, OnIndex&& on_index) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto first = s[i] == '[' ? match_marker(s, i) : std::nullopt;
    if (!first) {
      out.push_back(s[i++]);
      continue;
    }
    while (!out.empty() && is_space(out.back())) out.pop_back();
    for (auto idx : first->indices) on_index(idx);
    std::size_t k = first->end;
    for (;;) {
      std::size_t p = k;
      while (p < s.size() && is_space(s[p])) ++p;
      auto next = match_marker(s, p);
      if (!next) break;
      for (auto idx : next->indices) on_index(idx);
      k = next->end;
    }
    while (k < s.size() && is_space(s[k])) ++k;
    i = k;
    if (!out.empty() && i < s.size() && !attaches_left(s[i])) {
      out.push_back(' ');
    }
  }
  return out;
}

bool ends_with_abbreviation(std::string_view text, std::size_t period_pos) {
  std::size_t b = period_pos;
  while (b > 0 && !is_space(text[b - 1])) --b;
  std::string word(text.substr(b, period_pos - b + 1));
  while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) {
    word.erase(word.begin());
  }
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto& guard = abbreviation_guard_list();
  return std::find(guard.begin(), guard.end(), word) != guard.end();
}

}  // namespace

std::size_t CitedAnswer::citation_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.citations.size();
  return n;
}

bool structurally_equal(const CitedAnswer& a, const CitedAnswer& b) {
  if (a.dropped_citation_count != b.dropped_citation_count) return false;
  if (a.sentences.size() != b.sentences.size()) return false;
  for (std::size_t i = 0; i < a.sentences.size(); ++i) {
    if (a.sentences[i].text != b.sentences[i].text) return false;
    if (a.sentences[i].citations != b.sentences[i].citations) return false;
  }
  return true;
}

const std::vector<std::string>& abbreviation_guard_list() {
  static const std::vector<std::string> kGuard = {
      "e.g.", "i.e.", "etc.", "vs.", "cf.", "dr.", "mr.", "mrs.", "ms.", "prof.",
      "st.", "jr.", "sr.", "mt.", "no.", "vol.", "fig.", "approx.", "inc.", "ltd.",
      "co.", "corp.", "u.s.", "u.k.", "u.n.", "a.m.", "p.m.", "jan.", "feb.", "aug.",
      "sept.", "oct.", "nov.", "dec."};
  return kGuard;
}

std::vector<SentenceSpan> segment_sentences(std::string_view text) {
  if (text::trim(text).empty()) throw Error(ErrorCode::EmptyText, "empty text");

  std::vector<SentenceSpan> spans;
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n && is_space(text[i])) ++i;
  std::size_t start = i;
  int depth = 0;

  while (i < n) {
    const char c = text[i];
    if (c == '[' || c == '(') {
      ++depth;
      ++i;
      continue;
    }
    if ((c == ']' || c == ')') && depth > 0) {
      --depth;
      ++i;
      continue;
    }
    if (depth > 0 || !is_terminator(c)) {
      ++i;
      continue;
    }

    std::size_t j = i;
    while (j < n && is_terminator(text[j])) ++j;
    while (j < n && (text[j] == '"' || text[j] == '\'')) ++j;
    if (j < n && !is_space(text[j])) {
      i = j;
      continue;
    }
    if (j == i + 1 && c == '.' && ends_with_abbreviation(text, i)) {
      i = j;
      continue;
    }

    std::size_t end = j;
    for (;;) {
      std::size_t p = end;
      while (p < n && is_space(text[p])) ++p;
      auto m = match_marker(text, p);
      if (!m) break;
      end = m->end;
    }
    spans.push_back({start, end});
    i = end;
    while (i < n && is_space(text[i])) ++i;
    start = i;
  }

  if (start < n) {
    std::size_t end = n;
    while (end > start && is_space(text[end - 1])) --end;
    if (end > start) spans.push_back({start, end});
  }
  return spans;
}

CitedAnswer parse_cited_answer(std::string_view raw, std::size_t passage_count) {
  if (text::trim(raw).empty()) throw Error(ErrorCode::EmptyText, "empty answer text");

  CitedAnswer answer;
  answer.raw = std::string(raw);
  for (const auto& span : segment_sentences(raw)) {
    std::vector<int> cites;
    std::string body = remove_markers(raw.substr(span.begin, span.size()), [&](long long idx) {
      if (idx >= 1 && static_cast<unsigned long long>(idx) <= passage_count) {
        cites.push_back(static_cast<int>(idx));
      } else {
        ++answer.dropped_citation_count;
      }
    });
    std::string sentence_text(text::trim(body));

    // A segment made only of markers contributes its citations to the
    // preceding sentence.
    if (sentence_text.empty() && !answer.sentences.empty()) {
      auto& prev = answer.sentences.back();
      prev.citations.insert(prev.citations.end(), cites.begin(), cites.end());
      std::sort(prev.citations.begin(), prev.citations.end());
      prev.citations.erase(std::unique(prev.citations.begin(), prev.citations.end()),
                           prev.citations.end());
      prev.char_span.end = span.end;
      continue;
    }
    std::sort(cites.begin(), cites.end());
    cites.erase(std::unique(cites.begin(), cites.end()), cites.end());
    answer.sentences.push_back(CitedSentence{std::move(sentence_text), std::move(cites), span});
  }
  return answer;
}

std::string render_markers(std::vector<int> citations) {
  std::sort(citations.begin(), citations.end());
  citations.erase(std::unique(citations.begin(), citations.end()), citations.end());
  std::string out;
  for (int c : citations) out += "[" + std::to_string(c) + "]";
  return out;
}

std::string render_cited_answer(const CitedAnswer& answer) {
  std::string out;
  for (const auto& s : answer.sentences) {
    if (!out.empty()) out.push_back(' ');
    if (s.citations.empty()) {
      out += s.text;
      continue;
    }
    std::size_t k = s.text.size();
    while (k > 0 && is_terminator(s.text[k - 1])) --k;
    std::string_view head = std::string_view(s.text).substr(0, k);
    out += head;
    if (!head.empty()) out.push_back(' ');
    out += render_markers(s.citations);
    out += std::string_view(s.text).substr(k);
  }
  return out;
}

std::string strip_citations(std::string_view text) {
  return remove_markers(text, [](long long) {});
}

}  // namespace citeforge
