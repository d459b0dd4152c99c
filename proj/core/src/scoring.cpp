#include "citeforge/scoring.hpp"

#include <cmath>

#include "citeforge/error.hpp"
#include "citeforge/text.hpp"

namespace citeforge {

ConsistencyScore::ConsistencyScore(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "consistency score must lie in [0, 1], got " + std::to_string(value));
  }
}

std::string_view label_of(ErrorType t) noexcept {
  switch (t) {
    case ErrorType::Mismatch: return "MISMATCH";
    case ErrorType::Irrelevance: return "IRRELEVANT";
    case ErrorType::Correct: return "CORRECT";
  }
  return "CORRECT";
}

std::optional<ErrorType> parse_label(std::string_view label) noexcept {
  if (label == "MISMATCH") return ErrorType::Mismatch;
  if (label == "IRRELEVANT") return ErrorType::Irrelevance;
  if (label == "CORRECT") return ErrorType::Correct;
  return std::nullopt;
}

void ScorerConfig::validate() const {
  auto check = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) {
      throw Error(ErrorCode::InvalidConfig,
                  std::string(name) + " must lie strictly in (0, 1), got " + std::to_string(v));
    }
  };
  check(mismatch_threshold, "mismatch_threshold");
  check(relevance_threshold, "relevance_threshold");
  check(entail_threshold, "entail_threshold");
}

std::size_t ReflectionAnnotation::citation_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.labels.size();
  return n;
}

bool same_positions(const ReflectionAnnotation& a, const ReflectionAnnotation& b) noexcept {
  if (a.sentences.size() != b.sentences.size()) return false;
  for (std::size_t i = 0; i < a.sentences.size(); ++i) {
    const auto& sa = a.sentences[i];
    const auto& sb = b.sentences[i];
    if (sa.sentence != sb.sentence || sa.labels.size() != sb.labels.size()) return false;
    for (std::size_t j = 0; j < sa.labels.size(); ++j) {
      if (sa.labels[j].passage != sb.labels[j].passage) return false;
    }
  }
  return true;
}

bool covers(const ReflectionAnnotation& annotation, const CitedAnswer& answer) noexcept {
  if (annotation.sentences.size() != answer.sentences.size()) return false;
  for (std::size_t i = 0; i < answer.sentences.size(); ++i) {
    const auto& refl = annotation.sentences[i];
    const auto& cites = answer.sentences[i].citations;
    if (refl.sentence != i + 1 || refl.labels.size() != cites.size()) return false;
    for (std::size_t j = 0; j < cites.size(); ++j) {
      if (refl.labels[j].passage != cites[j]) return false;
    }
  }
  return true;
}

ConsistencyScore lexical_consistency_score(std::string_view claim, std::string_view source) {
  const auto claim_tokens = text::token_set(claim);
  if (claim_tokens.empty()) throw Error(ErrorCode::EmptyClaim, "claim has no tokens");
  const auto source_tokens = text::token_set(source);
  std::size_t hit = 0;
  for (const auto& t : claim_tokens) hit += source_tokens.contains(t) ? 1 : 0;
  return ConsistencyScore(static_cast<double>(hit) / static_cast<double>(claim_tokens.size()));
}

bool lexical_relevance_judge(std::string_view question, std::string_view passage,
                             double threshold) {
  auto q_tokens = text::token_set(question);
  if (q_tokens.empty()) throw Error(ErrorCode::EmptyQuestion, "question has no tokens");
  std::unordered_set<std::string> content;
  for (const auto& t : q_tokens) {
    if (!text::stopwords().contains(t)) content.insert(t);
  }
  const auto& keys = content.empty() ? q_tokens : content;
  const auto p_tokens = text::token_set(passage);
  std::size_t hit = 0;
  for (const auto& t : keys) hit += p_tokens.contains(t) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(keys.size()) >= threshold;
}

ErrorType classify_citation(ConsistencyScore consistency, bool relevant,
                            const ScorerConfig& cfg) noexcept {
  if (consistency.value() < cfg.mismatch_threshold) return ErrorType::Mismatch;
  if (!relevant) return ErrorType::Irrelevance;
  return ErrorType::Correct;
}

ReflectionAnnotation label_answer(const CitedAnswer& answer, const QAInstance& instance,
                                  const ConsistencyScorer& phi, const RelevanceJudge& gamma,
                                  const ScorerConfig& cfg) {
  ReflectionAnnotation out;
  out.sentences.reserve(answer.sentences.size());
  for (std::size_t i = 0; i < answer.sentences.size(); ++i) {
    const auto& sentence = answer.sentences[i];
    SentenceReflection refl{i + 1, {}};
    for (int c : sentence.citations) {
      try {
        const auto& body = instance.passage(c).body;
        const auto score = phi.score(sentence.text, body);
        bool relevant = true;
        if (score.value() >= cfg.mismatch_threshold) {
          relevant = gamma.judge(instance.question, body);
        }
        refl.labels.push_back({c, classify_citation(score, relevant, cfg)});
      } catch (const Error& e) {
        throw Error(e.code(),
                    instance.question_id + " sentence " + std::to_string(i + 1) + " citation [" +
                        std::to_string(c) + "]: " + e.what());
      }
    }
    out.sentences.push_back(std::move(refl));
  }
  return out;
}

}  // namespace citeforge
