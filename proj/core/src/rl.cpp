#include "citeforge/rl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "citeforge/error.hpp"
#include "citeforge/text.hpp"
#include "json_util.hpp"

namespace citeforge::rl {
namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::NonFiniteInput, std::string(what) + " is not finite");
  }
}

}  // namespace

std::string_view to_string(BehaviorKind kind) noexcept {
  switch (kind) {
    case BehaviorKind::Attempt: return "attempt";
    case BehaviorKind::Reflection: return "reflection";
    case BehaviorKind::Correction: return "correction";
  }
  return "attempt";
}

std::optional<BehaviorKind> parse_behavior_kind(std::string_view s) noexcept {
  if (s == "attempt") return BehaviorKind::Attempt;
  if (s == "reflection") return BehaviorKind::Reflection;
  if (s == "correction") return BehaviorKind::Correction;
  return std::nullopt;
}

std::string_view to_string(BaselineMode mode) noexcept {
  return mode == BaselineMode::LeaveOneOut ? "leave_one_out" : "group_mean";
}

std::optional<BaselineMode> parse_baseline_mode(std::string_view s) noexcept {
  if (s == "leave_one_out") return BaselineMode::LeaveOneOut;
  if (s == "group_mean") return BaselineMode::GroupMean;
  return std::nullopt;
}

std::string_view to_string(RewardCombine mode) noexcept {
  return mode == RewardCombine::Sum ? "sum" : "mean";
}

std::optional<RewardCombine> parse_reward_combine(std::string_view s) noexcept {
  if (s == "sum") return RewardCombine::Sum;
  if (s == "mean") return RewardCombine::Mean;
  return std::nullopt;
}

void RlConfig::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::InvalidConfig, "beta must be finite and >= 0");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "epsilon must lie strictly in (0, 1)");
  }
  attempt_thresholds.validate();
  correction_thresholds.validate();
}

double reflection_reward(const ReflectionAnnotation& predicted, const ReflectionAnnotation& gold) {
  if (!same_positions(predicted, gold)) {
    throw Error(ErrorCode::ShapeMismatch,
                "predicted and gold reflections label different citation positions");
  }
  const std::size_t n = gold.citation_count();
  if (n == 0) throw Error(ErrorCode::EmptyAnnotation, "reflection has no citations");
  double sum = 0.0;
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    for (std::size_t j = 0; j < gold.sentences[i].labels.size(); ++j) {
      sum += predicted.sentences[i].labels[j].type == gold.sentences[i].labels[j].type ? 1.0 : -1.0;
    }
  }
  return sum / static_cast<double>(n);
}

double threshold_reward(const QualityPair& q, double tau_cite, double tau_ans) noexcept {
  return q.q_cite >= tau_cite && q.q_ans >= tau_ans ? 1.0 : -1.0;
}

double gain_reward(const QualityPair& correction, const QualityPair& attempt) noexcept {
  return correction.q_cite >= attempt.q_cite && correction.q_ans >= attempt.q_ans ? 1.0 : -1.0;
}

double correction_reward(const QualityPair& correction, const QualityPair& attempt,
                         const RlConfig& cfg) noexcept {
  const double quality = threshold_reward(correction, cfg.correction_thresholds.tau_cite,
                                          cfg.correction_thresholds.tau_ans);
  const double gain = gain_reward(correction, attempt);
  return cfg.correction_reward_combine == RewardCombine::Sum ? quality + gain
                                                             : (quality + gain) / 2.0;
}

BehaviorRewards behavior_rewards(const QualityPair& attempt_q, const QualityPair& correction_q,
                                 const std::optional<ReflectionAnnotation>& predicted,
                                 const ReflectionAnnotation& gold, const RlConfig& cfg) {
  BehaviorRewards r;
  r.attempt = threshold_reward(attempt_q, cfg.attempt_thresholds.tau_cite,
                               cfg.attempt_thresholds.tau_ans);
  r.correction = correction_reward(correction_q, attempt_q, cfg);
  if (gold.citation_count() > 0) {
    if (predicted && same_positions(*predicted, gold)) {
      r.reflection = reflection_reward(*predicted, gold);
    } else {
      r.reflection = -1.0;
    }
  }
  return r;
}

std::vector<double> group_baseline(std::span<const double> rewards, BaselineMode mode) {
  const std::size_t n = rewards.size();
  const std::size_t min_size = mode == BaselineMode::LeaveOneOut ? 2 : 1;
  if (n < min_size) {
    throw Error(ErrorCode::GroupTooSmall,
                "group of size " + std::to_string(n) + " is too small for " +
                    std::string(to_string(mode)) + " baseline");
  }
  double total = 0.0;
  for (double r : rewards) {
    require_finite(r, "reward");
    total += r;
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = mode == BaselineMode::LeaveOneOut ? (total - rewards[i]) / static_cast<double>(n - 1)
                                               : total / static_cast<double>(n);
  }
  return out;
}

AdvantageRecord advantage(const BehaviorSample& sample, double baseline, double beta) {
  require_finite(sample.reward, "reward");
  require_finite(baseline, "baseline");
  require_finite(beta, "beta");
  require_finite(sample.logprob_old, "logprob_old");
  require_finite(sample.logprob_ref, "logprob_ref");
  AdvantageRecord rec;
  rec.chain_id = sample.chain_id;
  rec.kind = sample.kind;
  rec.reward = sample.reward;
  rec.baseline = baseline;
  rec.kl_term = beta * (sample.logprob_old - sample.logprob_ref);
  rec.advantage = rec.reward - rec.baseline - rec.kl_term;
  return rec;
}

std::vector<AdvantageRecord> compute_advantages(std::span<const BehaviorSample> samples,
                                                const RlConfig& cfg) {
  std::map<std::pair<BehaviorKind, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    groups[{samples[i].kind, samples[i].group_id}].push_back(i);
  }
  std::vector<AdvantageRecord> out(samples.size());
  for (const auto& [key, members] : groups) {
    std::vector<double> rewards;
    rewards.reserve(members.size());
    for (auto i : members) rewards.push_back(samples[i].reward);
    std::vector<double> baselines;
    try {
      baselines = group_baseline(rewards, cfg.baseline_mode);
    } catch (const Error& e) {
      throw Error(e.code(), "group (" + std::string(to_string(key.first)) + ", '" + key.second +
                                "'): " + e.what());
    }
    for (std::size_t k = 0; k < members.size(); ++k) {
      out[members[k]] = advantage(samples[members[k]], baselines[k], cfg.beta);
    }
  }
  return out;
}

ClippedObjective clipped_objective(std::span<const PolicyTerm> batch, double epsilon) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "empty batch");
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "epsilon must lie strictly in (0, 1)");
  }
  ClippedObjective obj;
  obj.ratios.reserve(batch.size());
  obj.terms.reserve(batch.size());
  double sum = 0.0;
  for (const auto& t : batch) {
    const double r = std::exp(t.logprob_policy - t.logprob_old);
    if (!std::isfinite(r)) {
      throw Error(ErrorCode::NonFiniteRatio, "importance ratio is not finite");
    }
    require_finite(t.advantage, "advantage");
    const double clipped = std::clamp(r, 1.0 - epsilon, 1.0 + epsilon);
    const double term = std::min(r * t.advantage, clipped * t.advantage);
    obj.ratios.push_back(r);
    obj.terms.push_back(term);
    sum += term;
  }
  obj.loss = -sum / static_cast<double>(batch.size());
  return obj;
}

std::string serialize_advantage(const AdvantageRecord& r) {
  detail::ordered_json j;
  j["chain_id"] = r.chain_id;
  j["kind"] = to_string(r.kind);
  j["reward"] = r.reward;
  j["baseline"] = r.baseline;
  j["kl_term"] = r.kl_term;
  j["advantage"] = r.advantage;
  return j.dump();
}

AdvantageRecord parse_advantage(std::string_view json_line, std::size_t line) {
  const auto j = detail::parse_json_line(json_line, line);
  if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, "record is not an object", line);
  AdvantageRecord r;
  r.chain_id = detail::require_string(j, "chain_id", line);
  const auto kind = detail::require_string(j, "kind", line);
  auto k = parse_behavior_kind(kind);
  if (!k) throw Error(ErrorCode::MalformedRecord, "unknown behavior kind '" + kind + "'", line);
  r.kind = *k;
  r.reward = detail::require_number(j, "reward", line);
  r.baseline = detail::require_number(j, "baseline", line);
  r.kl_term = detail::require_number(j, "kl_term", line);
  r.advantage = detail::require_number(j, "advantage", line);
  return r;
}

std::size_t export_advantages(std::span<const AdvantageRecord> records, std::ostream& out) {
  for (const auto& r : records) out << serialize_advantage(r) << '\n';
  return records.size();
}

std::size_t export_advantages(std::span<const AdvantageRecord> records,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  const auto n = export_advantages(records, out);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
  return n;
}

std::vector<AdvantageRecord> read_advantages(std::istream& in) {
  std::vector<AdvantageRecord> out;
  std::string buf;
  std::size_t line = 0;
  while (std::getline(in, buf)) {
    ++line;
    if (text::trim(buf).empty()) continue;
    out.push_back(parse_advantage(buf, line));
  }
  return out;
}

}  // namespace citeforge::rl
