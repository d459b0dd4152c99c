#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citeforge/metrics.hpp"
#include "citeforge/scoring.hpp"

namespace citeforge::rl {

enum class BehaviorKind { Attempt, Reflection, Correction };

/// "attempt", "reflection", "correction".
std::string_view to_string(BehaviorKind kind) noexcept;
std::optional<BehaviorKind> parse_behavior_kind(std::string_view s) noexcept;

enum class BaselineMode { LeaveOneOut, GroupMean };
enum class RewardCombine { Sum, Mean };

std::string_view to_string(BaselineMode mode) noexcept;
std::optional<BaselineMode> parse_baseline_mode(std::string_view s) noexcept;
std::string_view to_string(RewardCombine mode) noexcept;
std::optional<RewardCombine> parse_reward_combine(std::string_view s) noexcept;

struct RlConfig {
  double beta = 0.1;      // KL coefficient
  double epsilon = 0.2;   // clip range
  AcceptThresholds attempt_thresholds{0.7, 0.4};
  AcceptThresholds correction_thresholds{0.8, 0.45};
  BaselineMode baseline_mode = BaselineMode::LeaveOneOut;
  RewardCombine correction_reward_combine = RewardCombine::Sum;

  /// Throws InvalidConfig.
  void validate() const;
};

/// One sub-behavior of a rollout with its reward and summed log-probabilities
/// under the current policy, the sampling policy and the reference model.
struct BehaviorSample {
  std::string chain_id;
  BehaviorKind kind = BehaviorKind::Attempt;
  std::string group_id;
  double reward = 0.0;
  double logprob_policy = 0.0;
  double logprob_old = 0.0;
  double logprob_ref = 0.0;
};

struct AdvantageRecord {
  std::string chain_id;
  BehaviorKind kind = BehaviorKind::Attempt;
  double reward = 0.0;
  double baseline = 0.0;
  double kl_term = 0.0;
  double advantage = 0.0;  // reward - baseline - kl_term

  bool operator==(const AdvantageRecord&) const = default;
};

/// Mean over citations of +1 for a matching label and -1 otherwise.
/// Throws ShapeMismatch or EmptyAnnotation.
double reflection_reward(const ReflectionAnnotation& predicted, const ReflectionAnnotation& gold);

/// +1 if both qualities reach their thresholds (inclusive), else -1.
double threshold_reward(const QualityPair& q, double tau_cite, double tau_ans) noexcept;

/// +1 if the correction is at least as good as the attempt on both
/// qualities, else -1.
double gain_reward(const QualityPair& correction, const QualityPair& attempt) noexcept;

/// Threshold reward (correction thresholds) combined with the gain reward.
double correction_reward(const QualityPair& correction, const QualityPair& attempt,
                         const RlConfig& cfg) noexcept;

/// Per-behavior rewards for one rollout. `reflection` is empty when the
/// attempt has no citations (the mean over zero citations is undefined).
struct BehaviorRewards {
  double attempt = 0.0;
  std::optional<double> reflection;
  double correction = 0.0;
};

/// `predicted` is empty when the model's reflection did not parse or labels
/// different positions than `gold`; such a reflection earns -1.
BehaviorRewards behavior_rewards(const QualityPair& attempt_q, const QualityPair& correction_q,
                                 const std::optional<ReflectionAnnotation>& predicted,
                                 const ReflectionAnnotation& gold, const RlConfig& cfg);

/// Leave-one-out: b_i = mean of the other rewards (group size >= 2).
/// Group mean: b_i = mean of all rewards (group size >= 1).
/// Throws GroupTooSmall.
std::vector<double> group_baseline(std::span<const double> rewards, BaselineMode mode);

/// A = reward - baseline - beta * (logprob_old - logprob_ref).
/// Throws NonFiniteInput.
AdvantageRecord advantage(const BehaviorSample& sample, double baseline, double beta);

/// Groups samples by (kind, group_id), computes baselines within each group
/// and returns one record per sample in input order.
std::vector<AdvantageRecord> compute_advantages(std::span<const BehaviorSample> samples,
                                                const RlConfig& cfg);

struct PolicyTerm {
  double logprob_policy = 0.0;
  double logprob_old = 0.0;
  double advantage = 0.0;
};

struct ClippedObjective {
  double loss = 0.0;
  std::vector<double> ratios;
  std::vector<double> terms;  // min(r*A, clip(r)*A) per sample
};

/// loss = -(1/n) * sum min(r*A, clip(r, 1-eps, 1+eps)*A) with
/// r = exp(logprob_policy - logprob_old). Throws EmptyBatch, NonFiniteRatio,
/// InvalidConfig (epsilon outside (0, 1)).
ClippedObjective clipped_objective(std::span<const PolicyTerm> batch, double epsilon);

/// {"chain_id","kind","reward","baseline","kl_term","advantage"} per line.
std::string serialize_advantage(const AdvantageRecord& record);
AdvantageRecord parse_advantage(std::string_view json_line, std::size_t line = 1);

std::size_t export_advantages(std::span<const AdvantageRecord> records, std::ostream& out);
/// Throws IoError.
std::size_t export_advantages(std::span<const AdvantageRecord> records,
                              const std::filesystem::path& path);
std::vector<AdvantageRecord> read_advantages(std::istream& in);

}  // namespace citeforge::rl
