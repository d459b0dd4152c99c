#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citeforge/citext.hpp"
#include "citeforge/corpus.hpp"

namespace citeforge {

/// Factual-consistency score in [0, 1]. Construction rejects anything else,
/// including NaN.
class ConsistencyScore {
 public:
  explicit ConsistencyScore(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

enum class ErrorType { Mismatch, Irrelevance, Correct };

inline constexpr std::size_t kErrorTypeCount = 3;

/// Index used for confusion matrices: Mismatch=0, Irrelevance=1, Correct=2.
constexpr std::size_t index_of(ErrorType t) noexcept { return static_cast<std::size_t>(t); }

/// "MISMATCH", "IRRELEVANT" or "CORRECT".
std::string_view label_of(ErrorType t) noexcept;
std::optional<ErrorType> parse_label(std::string_view label) noexcept;

struct ScorerConfig {
  double mismatch_threshold = 0.5;
  double relevance_threshold = 0.5;
  double entail_threshold = 0.5;

  /// Throws InvalidConfig unless every threshold lies strictly in (0, 1).
  void validate() const;
};

struct CitationLabel {
  int passage = 0;
  ErrorType type = ErrorType::Correct;
  bool operator==(const CitationLabel&) const = default;
};

struct SentenceReflection {
  std::size_t sentence = 0;  // 1-based
  std::vector<CitationLabel> labels;
  bool operator==(const SentenceReflection&) const = default;
};

/// One entry per answer sentence, in order; sentences without citations carry
/// an empty label list.
struct ReflectionAnnotation {
  std::vector<SentenceReflection> sentences;

  std::size_t citation_count() const noexcept;
  bool operator==(const ReflectionAnnotation&) const = default;
};

/// Same sentence indices and the same passage index at every citation slot.
bool same_positions(const ReflectionAnnotation& a, const ReflectionAnnotation& b) noexcept;

/// True if `annotation` has exactly one label per citation of `answer`, in order.
bool covers(const ReflectionAnnotation& annotation, const CitedAnswer& answer) noexcept;

/// phi(claim, source). Implementations must be safe to call concurrently.
class ConsistencyScorer {
 public:
  virtual ~ConsistencyScorer() = default;
  virtual ConsistencyScore score(std::string_view claim, std::string_view source) const = 0;
};

/// gamma(question, passage). Implementations must be safe to call concurrently.
class RelevanceJudge {
 public:
  virtual ~RelevanceJudge() = default;
  virtual bool judge(std::string_view question, std::string_view passage) const = 0;
};

/// |T(claim) ∩ T(source)| / |T(claim)| over lowercase alphanumeric token sets.
/// Throws EmptyClaim when the claim has no tokens.
ConsistencyScore lexical_consistency_score(std::string_view claim, std::string_view source);

/// Fraction of the question's non-stopword tokens found in the passage,
/// compared against `threshold` with >=. A question made only of stopwords
/// falls back to its full token set. Throws EmptyQuestion when it has no
/// tokens at all.
bool lexical_relevance_judge(std::string_view question, std::string_view passage,
                             double threshold);

class LexicalConsistencyScorer final : public ConsistencyScorer {
 public:
  ConsistencyScore score(std::string_view claim, std::string_view source) const override {
    return lexical_consistency_score(claim, source);
  }
};

class LexicalRelevanceJudge final : public RelevanceJudge {
 public:
  explicit LexicalRelevanceJudge(double threshold = 0.5) : threshold_(threshold) {}
  bool judge(std::string_view question, std::string_view passage) const override {
    return lexical_relevance_judge(question, passage, threshold_);
  }

 private:
  double threshold_;
};

/// Mismatch if the score is below the mismatch threshold, otherwise
/// Irrelevance if the passage was judged irrelevant, otherwise Correct.
ErrorType classify_citation(ConsistencyScore consistency, bool relevant,
                            const ScorerConfig& cfg) noexcept;

/// Labels every citation of `answer`. The relevance judge is skipped for
/// citations already classified as Mismatch. Scorer errors are rethrown with
/// the (sentence, citation) location prepended to the message.
ReflectionAnnotation label_answer(const CitedAnswer& answer, const QAInstance& instance,
                                  const ConsistencyScorer& phi, const RelevanceJudge& gamma,
                                  const ScorerConfig& cfg);

}  // namespace citeforge
