#include "citeforge/metrics.hpp"

#include <algorithm>

#include "citeforge/error.hpp"
#include "citeforge/text.hpp"

namespace citeforge {
namespace {

std::string join_bodies(const QAInstance& instance, const std::vector<int>& cites,
                        int skip = 0) {
  std::string out;
  for (int c : cites) {
    if (c == skip) continue;
    if (!out.empty()) out.push_back('\n');
    out += instance.passage(c).body;
  }
  return out;
}

bool entails(const ConsistencyScorer& phi, std::string_view claim, std::string_view source,
             double threshold) {
  return phi.score(claim, source).value() >= threshold;
}

void require_sentences(const CitedAnswer& answer) {
  if (answer.sentences.empty()) throw Error(ErrorCode::EmptyAnswer, "answer has no sentences");
}

void require_groups(const std::vector<std::vector<std::string>>& groups) {
  if (groups.empty()) throw Error(ErrorCode::NoGoldAnswers, "no gold answer groups");
}

}  // namespace

void AcceptThresholds::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig,
                  std::string(name) + " must lie in [0, 1], got " + std::to_string(v));
    }
  };
  check(tau_cite, "tau_cite");
  check(tau_ans, "tau_ans");
}

double citation_recall(const CitedAnswer& answer, const QAInstance& instance,
                       const ConsistencyScorer& phi, double entail_threshold) {
  require_sentences(answer);
  std::size_t supported = 0;
  for (const auto& s : answer.sentences) {
    if (s.citations.empty()) continue;
    if (entails(phi, s.text, join_bodies(instance, s.citations), entail_threshold)) ++supported;
  }
  return static_cast<double>(supported) / static_cast<double>(answer.sentences.size());
}

double citation_precision(const CitedAnswer& answer, const QAInstance& instance,
                          const ConsistencyScorer& phi, double entail_threshold) {
  require_sentences(answer);
  std::size_t total = 0;
  std::size_t precise = 0;
  for (const auto& s : answer.sentences) {
    if (s.citations.empty()) continue;
    total += s.citations.size();
    if (!entails(phi, s.text, join_bodies(instance, s.citations), entail_threshold)) continue;
    if (s.citations.size() == 1) {
      ++precise;
      continue;
    }
    for (int c : s.citations) {
      if (entails(phi, s.text, instance.passage(c).body, entail_threshold) ||
          !entails(phi, s.text, join_bodies(instance, s.citations, c), entail_threshold)) {
        ++precise;
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(precise) / static_cast<double>(total);
}

double citation_f1(double precision, double recall) noexcept {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

double em_recall(std::string_view answer, const std::vector<std::vector<std::string>>& groups) {
  require_groups(groups);
  const auto norm = text::normalize(answer);
  std::size_t matched = 0;
  for (const auto& group : groups) {
    const bool hit = std::any_of(group.begin(), group.end(), [&](const std::string& alias) {
      return text::contains_phrase(norm, text::normalize(alias));
    });
    matched += hit ? 1 : 0;
  }
  return static_cast<double>(matched) / static_cast<double>(groups.size());
}

double correct_in_p(std::string_view answer,
                    const std::vector<std::vector<std::string>>& groups,
                    const std::vector<Passage>& passages) {
  require_groups(groups);
  const auto norm = text::normalize(answer);
  std::vector<std::string> bodies;
  bodies.reserve(passages.size());
  for (const auto& p : passages) bodies.push_back(text::normalize(p.body));

  std::size_t matched = 0;
  for (const auto& group : groups) {
    const bool hit = std::any_of(group.begin(), group.end(), [&](const std::string& alias) {
      const auto a = text::normalize(alias);
      if (!text::contains_phrase(norm, a)) return false;
      return std::any_of(bodies.begin(), bodies.end(),
                         [&](const std::string& b) { return text::contains_phrase(b, a); });
    });
    matched += hit ? 1 : 0;
  }
  return static_cast<double>(matched) / static_cast<double>(groups.size());
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto ref = text::tokens(reference);
  if (ref.empty()) throw Error(ErrorCode::EmptyReference, "reference has no tokens");
  const auto cand = text::tokens(candidate);
  if (cand.empty()) return 0.0;

  // Single-row LCS table.
  std::vector<std::size_t> row(ref.size() + 1, 0);
  for (const auto& c : cand) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = c == ref[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  const auto lcs = static_cast<double>(row.back());
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(cand.size());
  const double r = lcs / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

QualityPair quality_pair(const CitedAnswer& answer, const QAInstance& instance,
                         const ConsistencyScorer& phi, const ScorerConfig& cfg) {
  const double p = citation_precision(answer, instance, phi, cfg.entail_threshold);
  const double r = citation_recall(answer, instance, phi, cfg.entail_threshold);
  return {citation_f1(p, r), em_recall(strip_citations(answer.raw), instance.gold_answer_groups)};
}

AcceptOutcome accept_outcome(const QualityPair& correction, const QualityPair& attempt,
                             const AcceptThresholds& t) noexcept {
  if (!(correction.q_cite >= t.tau_cite && correction.q_ans >= t.tau_ans)) {
    return AcceptOutcome::RejectedThreshold;
  }
  if (!(correction.q_cite > attempt.q_cite && correction.q_ans > attempt.q_ans)) {
    return AcceptOutcome::RejectedNoGain;
  }
  return AcceptOutcome::Accepted;
}

bool accept(const QualityPair& correction, const QualityPair& attempt,
            const AcceptThresholds& t) noexcept {
  return accept_outcome(correction, attempt, t) == AcceptOutcome::Accepted;
}

AnswerMetrics evaluate_answer(const CitedAnswer& answer, const QAInstance& instance,
                              const ConsistencyScorer& phi, const ScorerConfig& cfg) {
  AnswerMetrics m;
  m.citation_precision = citation_precision(answer, instance, phi, cfg.entail_threshold);
  m.citation_recall = citation_recall(answer, instance, phi, cfg.entail_threshold);
  m.citation_f1 = citation_f1(m.citation_precision, m.citation_recall);
  const auto content = strip_citations(answer.raw);
  m.em_recall = em_recall(content, instance.gold_answer_groups);
  m.correct_in_p = correct_in_p(content, instance.gold_answer_groups, instance.passages);
  if (instance.gold_long_answer && !text::tokens(*instance.gold_long_answer).empty()) {
    m.rouge_l = rouge_l(content, *instance.gold_long_answer);
  }
  m.sentence_count = answer.sentences.size();
  m.citation_count = answer.citation_count();
  m.dropped_citation_count = answer.dropped_citation_count;
  return m;
}

}  // namespace citeforge
