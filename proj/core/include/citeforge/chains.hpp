#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citeforge/citext.hpp"
#include "citeforge/corpus.hpp"
#include "citeforge/generator.hpp"
#include "citeforge/metrics.hpp"
#include "citeforge/scoring.hpp"

namespace citeforge {

// ---------------------------------------------------------------------------
// Reflection text
//
// One line per sentence:
//   Sentence <i>: [<j>] <LABEL>; [<k>] <LABEL>
//   Sentence <i>: NO-CITATION
// with LABEL one of CORRECT, MISMATCH, IRRELEVANT. Lines are joined by '\n'
// with no trailing newline.
// ---------------------------------------------------------------------------

std::string build_reflection_text(const ReflectionAnnotation& annotation);

/// Exact inverse of build_reflection_text. A single trailing newline is
/// tolerated; any other deviation throws MalformedReflection carrying the
/// 1-based line number.
ReflectionAnnotation parse_reflection_text(std::string_view text);

// ---------------------------------------------------------------------------
// Chain text: <attempt>...</attempt><reflect>...</reflect><correct>...</correct>
// ---------------------------------------------------------------------------

struct ChainSections {
  std::string attempt;
  std::string reflection;
  std::string correction;
  bool operator==(const ChainSections&) const = default;
};

std::string render_chain_text(const ChainSections& sections);

/// Whitespace between and inside the tags is ignored (section bodies are
/// trimmed). Throws MalformedChain if a section is missing or out of order.
ChainSections parse_chain_text(std::string_view text);

// ---------------------------------------------------------------------------
// Chains
// ---------------------------------------------------------------------------

enum class ChainOrigin { Seeded, Bootstrapped };

struct ChainProvenance {
  ChainOrigin origin = ChainOrigin::Seeded;
  int round = 0;
  bool operator==(const ChainProvenance&) const = default;
};

struct Chain {
  std::string question_id;
  CitedAnswer attempt;
  ReflectionAnnotation reflection;
  std::string reflection_text;
  CitedAnswer correction;
  QualityPair attempt_quality;
  QualityPair correction_quality;
  AcceptOutcome outcome = AcceptOutcome::RejectedThreshold;
  bool accepted = false;
  ChainProvenance provenance;
};

/// Scores attempt and correction and applies the acceptance gate. Throws
/// AnnotationMismatch unless the annotation covers the attempt's citations.
Chain assemble_chain(const CitedAnswer& attempt, const ReflectionAnnotation& annotation,
                     const CitedAnswer& correction, const QAInstance& instance,
                     const ConsistencyScorer& phi, const ScorerConfig& cfg,
                     const AcceptThresholds& thresholds, ChainProvenance provenance = {});

/// Seed-stage construction: label `attempt_text`, render the reflection, ask
/// the generator for a correction given that reflection, then assemble.
Chain build_seed_chain(std::string_view attempt_text, const QAInstance& instance,
                       const Generator& generator, const ConsistencyScorer& phi,
                       const RelevanceJudge& gamma, const ScorerConfig& cfg,
                       const AcceptThresholds& thresholds);

struct RoundStats {
  std::size_t generated = 0;
  std::size_t parse_failures = 0;
  std::size_t accepted = 0;
  std::size_t rejected_threshold = 0;
  std::size_t rejected_no_gain = 0;

  RoundStats& operator+=(const RoundStats& other) noexcept;
  bool operator==(const RoundStats&) const = default;
};

struct RoundResult {
  std::vector<Chain> accepted;  // instance order
  RoundStats stats;
};

/// One round of online self-reflective bootstrapping. Every instance gets a
/// full-chain generation; chains that pass the acceptance gate are kept with
/// the model's reflection replaced by the labeler's. Malformed generations
/// are counted in `parse_failures`; an unavailable generator is fatal.
RoundResult bootstrap_round(const Corpus& corpus, const Generator& generator,
                            const ConsistencyScorer& phi, const RelevanceJudge& gamma,
                            const ScorerConfig& cfg, const AcceptThresholds& thresholds,
                            int round_index, std::uint64_t seed);

/// Canonical JSON line describing a chain (all chains, accepted or not).
std::string serialize_chain(const Chain& chain);

// ---------------------------------------------------------------------------
// Reflection accuracy
// ---------------------------------------------------------------------------

/// Confusion counts indexed [gold][predicted] by index_of(ErrorType).
struct ReflectionAccuracy {
  std::array<std::array<std::size_t, kErrorTypeCount>, kErrorTypeCount> confusion{};

  std::size_t total() const noexcept;
  std::size_t matches() const noexcept;
  /// Empty when there are no labels.
  std::optional<double> overall() const noexcept;
  /// Empty when the gold annotation has no label of this type.
  std::optional<double> per_type(ErrorType gold) const noexcept;

  ReflectionAccuracy& operator+=(const ReflectionAccuracy& other) noexcept;
};

/// Throws ShapeMismatch unless both annotations label the same positions.
ReflectionAccuracy reflection_accuracy(const ReflectionAnnotation& predicted,
                                       const ReflectionAnnotation& gold);

// ---------------------------------------------------------------------------
// SFT export
// ---------------------------------------------------------------------------

/// {"question_id", "question", "passages", "target", "provenance"} with the
/// target in chain-text form.
std::string sft_record(const Chain& chain, const QAInstance& instance);

/// Writes one record per accepted chain; rejected chains are skipped.
/// Throws UnknownQuestionId if a chain's question is not in `corpus`.
std::size_t serialize_sft_dataset(std::span<const Chain> chains, const Corpus& corpus,
                                  std::ostream& out);
/// Throws IoError when the file cannot be written.
std::size_t serialize_sft_dataset(std::span<const Chain> chains, const Corpus& corpus,
                                  const std::filesystem::path& path);

/// Mean negative log-likelihood of a token sequence. Throws EmptySequence or
/// NonFiniteInput (which also covers positive log-probabilities).
double nll_value(std::span<const double> token_logprobs);

}  // namespace citeforge
