#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citeforge/citext.hpp"
#include "citeforge/corpus.hpp"
#include "citeforge/scoring.hpp"

namespace citeforge {

/// Citation quality (citation F1) and answer quality (EM recall), both in [0, 1].
struct QualityPair {
  double q_cite = 0.0;
  double q_ans = 0.0;
  bool operator==(const QualityPair&) const = default;
};

struct AcceptThresholds {
  double tau_cite = 0.8;
  double tau_ans = 0.45;

  /// Throws InvalidConfig unless both lie in [0, 1].
  void validate() const;
};

// Citation precision/recall follow the ALCE convention with phi binarized at
// `entail_threshold`. Cited passages are joined in index order with '\n'.

/// Mean over sentences of [phi(s_i, union(C_i)) >= threshold]; uncited
/// sentences contribute 0. Throws EmptyAnswer for an answer without sentences.
double citation_recall(const CitedAnswer& answer, const QAInstance& instance,
                       const ConsistencyScorer& phi, double entail_threshold);

/// Fraction of citations c in C_i for which union(C_i) entails s_i and either
/// c alone entails s_i or union(C_i) \ {c} does not. For a single citation the
/// second disjunct holds trivially. Zero citations gives 0.
double citation_precision(const CitedAnswer& answer, const QAInstance& instance,
                          const ConsistencyScorer& phi, double entail_threshold);

double citation_f1(double precision, double recall) noexcept;

/// Fraction of gold groups with an alias occurring, after normalization, on
/// token boundaries in the answer. Throws NoGoldAnswers for an empty list.
double em_recall(std::string_view answer, const std::vector<std::vector<std::string>>& groups);

/// As em_recall, but the matching alias must also occur in a passage body.
double correct_in_p(std::string_view answer,
                    const std::vector<std::vector<std::string>>& groups,
                    const std::vector<Passage>& passages);

/// Token-level LCS F-measure. Throws EmptyReference when the reference has no
/// tokens; an empty candidate scores 0.
double rouge_l(std::string_view candidate, std::string_view reference);

QualityPair quality_pair(const CitedAnswer& answer, const QAInstance& instance,
                         const ConsistencyScorer& phi, const ScorerConfig& cfg);

enum class AcceptOutcome { Accepted, RejectedThreshold, RejectedNoGain };

/// Why a correction was or was not accepted. Threshold failures take
/// precedence over missing improvement.
AcceptOutcome accept_outcome(const QualityPair& correction, const QualityPair& attempt,
                             const AcceptThresholds& t) noexcept;

/// Correction clears both thresholds and strictly improves both qualities.
bool accept(const QualityPair& correction, const QualityPair& attempt,
            const AcceptThresholds& t) noexcept;

/// Every metric for one answer; the metrics subcommand writes one per line.
struct AnswerMetrics {
  double citation_precision = 0.0;
  double citation_recall = 0.0;
  double citation_f1 = 0.0;
  double em_recall = 0.0;
  double correct_in_p = 0.0;
  std::optional<double> rouge_l;  // only with a gold long answer
  std::size_t sentence_count = 0;
  std::size_t citation_count = 0;
  std::size_t dropped_citation_count = 0;
};

AnswerMetrics evaluate_answer(const CitedAnswer& answer, const QAInstance& instance,
                              const ConsistencyScorer& phi, const ScorerConfig& cfg);

}  // namespace citeforge
