#include "citeforge/chains.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "citeforge/error.hpp"
#include "citeforge/text.hpp"
#include "json_util.hpp"

namespace citeforge {
namespace {

constexpr std::string_view kNoCitation = "NO-CITATION";

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::MalformedReflection,
              "reflection line " + std::to_string(line) + ": " + why, line);
}

// Strict decimal, no sign, no leading zeros.
std::optional<std::size_t> parse_index(std::string_view s) {
  if (s.empty() || s.size() > 9 || (s.size() > 1 && s[0] == '0')) return std::nullopt;
  std::size_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  return v;
}

SentenceReflection parse_reflection_line(std::string_view line, std::size_t lineno) {
  constexpr std::string_view kPrefix = "Sentence ";
  if (line.substr(0, kPrefix.size()) != kPrefix) malformed(lineno, "expected 'Sentence <i>: '");
  line.remove_prefix(kPrefix.size());
  const auto colon = line.find(": ");
  if (colon == std::string_view::npos) malformed(lineno, "expected ': ' after sentence index");
  const auto idx = parse_index(line.substr(0, colon));
  if (!idx || *idx == 0) malformed(lineno, "invalid sentence index");
  line.remove_prefix(colon + 2);

  SentenceReflection refl{*idx, {}};
  if (line == kNoCitation) return refl;

  for (;;) {
    if (line.empty() || line[0] != '[') malformed(lineno, "expected '[<passage>]'");
    const auto close = line.find("] ");
    if (close == std::string_view::npos) malformed(lineno, "expected '] ' after passage index");
    const auto passage = parse_index(line.substr(1, close - 1));
    if (!passage || *passage == 0) malformed(lineno, "invalid passage index");
    if (!refl.labels.empty() && static_cast<int>(*passage) <= refl.labels.back().passage) {
      malformed(lineno, "passage indices must be strictly increasing");
    }
    line.remove_prefix(close + 2);
    const auto sep = line.find("; ");
    const auto label_text = line.substr(0, sep);
    const auto label = parse_label(label_text);
    if (!label) malformed(lineno, "unknown label '" + std::string(label_text) + "'");
    refl.labels.push_back({static_cast<int>(*passage), *label});
    if (sep == std::string_view::npos) break;
    line.remove_prefix(sep + 2);
  }
  return refl;
}

// Finds `<tag>body</tag>` at or after `pos`, requiring only whitespace before it.
std::string extract_section(std::string_view text, std::size_t& pos, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto start = text.find(open, pos);
  if (start == std::string_view::npos || !text::trim(text.substr(pos, start - pos)).empty()) {
    throw Error(ErrorCode::MalformedChain, "missing " + open + " section");
  }
  const auto body_start = start + open.size();
  const auto end = text.find(close, body_start);
  if (end == std::string_view::npos) {
    throw Error(ErrorCode::MalformedChain, "unterminated " + open + " section");
  }
  pos = end + close.size();
  return std::string(text::trim(text.substr(body_start, end - body_start)));
}

std::string_view outcome_name(AcceptOutcome o) {
  switch (o) {
    case AcceptOutcome::Accepted: return "accepted";
    case AcceptOutcome::RejectedThreshold: return "rejected_threshold";
    case AcceptOutcome::RejectedNoGain: return "rejected_no_gain";
  }
  return "rejected_threshold";
}

detail::ordered_json provenance_json(const ChainProvenance& p) {
  detail::ordered_json j;
  j["origin"] = p.origin == ChainOrigin::Seeded ? "seeded" : "bootstrapped";
  j["round"] = p.round;
  return j;
}

detail::ordered_json quality_json(const QualityPair& q) {
  detail::ordered_json j;
  j["q_cite"] = q.q_cite;
  j["q_ans"] = q.q_ans;
  return j;
}

bool is_content_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedChain:
    case ErrorCode::MalformedRecord:
    case ErrorCode::EmptyText:
    case ErrorCode::EmptyClaim:
    case ErrorCode::EmptyAnswer:
    case ErrorCode::RemoteProtocolError:
      return true;
    default:
      return false;
  }
}

std::uint64_t mix_seed(std::uint64_t seed, int round, std::size_t index) {
  // splitmix64 finalizer over (seed, round, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(round) * 1'000'003ULL +
                                                    static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string build_reflection_text(const ReflectionAnnotation& annotation) {
  std::string out;
  for (const auto& s : annotation.sentences) {
    if (!out.empty()) out.push_back('\n');
    out += "Sentence " + std::to_string(s.sentence) + ": ";
    if (s.labels.empty()) {
      out += kNoCitation;
      continue;
    }
    for (std::size_t j = 0; j < s.labels.size(); ++j) {
      if (j > 0) out += "; ";
      out += "[" + std::to_string(s.labels[j].passage) + "] ";
      out += label_of(s.labels[j].type);
    }
  }
  return out;
}

ReflectionAnnotation parse_reflection_text(std::string_view text) {
  ReflectionAnnotation out;
  if (text.empty()) return out;
  if (text.back() == '\n') text.remove_suffix(1);

  std::size_t lineno = 0;
  std::size_t pos = 0;
  for (;;) {
    ++lineno;
    const auto nl = text.find('\n', pos);
    const auto line = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
    auto refl = parse_reflection_line(line, lineno);
    if (!out.sentences.empty() && refl.sentence <= out.sentences.back().sentence) {
      malformed(lineno, "sentence indices must be strictly increasing");
    }
    out.sentences.push_back(std::move(refl));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::string render_chain_text(const ChainSections& s) {
  return "<attempt>" + s.attempt + "</attempt><reflect>" + s.reflection + "</reflect><correct>" +
         s.correction + "</correct>";
}

ChainSections parse_chain_text(std::string_view text) {
  ChainSections s;
  std::size_t pos = 0;
  s.attempt = extract_section(text, pos, "attempt");
  s.reflection = extract_section(text, pos, "reflect");
  s.correction = extract_section(text, pos, "correct");
  if (!text::trim(text.substr(pos)).empty()) {
    throw Error(ErrorCode::MalformedChain, "trailing text after </correct>");
  }
  return s;
}

Chain assemble_chain(const CitedAnswer& attempt, const ReflectionAnnotation& annotation,
                     const CitedAnswer& correction, const QAInstance& instance,
                     const ConsistencyScorer& phi, const ScorerConfig& cfg,
                     const AcceptThresholds& thresholds, ChainProvenance provenance) {
  if (!covers(annotation, attempt)) {
    throw Error(ErrorCode::AnnotationMismatch,
                "reflection annotation does not cover the attempt's citations for " +
                    instance.question_id);
  }
  Chain chain;
  chain.question_id = instance.question_id;
  chain.attempt = attempt;
  chain.reflection = annotation;
  chain.reflection_text = build_reflection_text(annotation);
  chain.correction = correction;
  chain.attempt_quality = quality_pair(attempt, instance, phi, cfg);
  chain.correction_quality = quality_pair(correction, instance, phi, cfg);
  chain.outcome = accept_outcome(chain.correction_quality, chain.attempt_quality, thresholds);
  chain.accepted = chain.outcome == AcceptOutcome::Accepted;
  chain.provenance = provenance;
  return chain;
}

Chain build_seed_chain(std::string_view attempt_text, const QAInstance& instance,
                       const Generator& generator, const ConsistencyScorer& phi,
                       const RelevanceJudge& gamma, const ScorerConfig& cfg,
                       const AcceptThresholds& thresholds) {
  const auto m = instance.passage_count();
  const auto attempt = parse_cited_answer(attempt_text, m);
  const auto annotation = label_answer(attempt, instance, phi, gamma, cfg);

  GeneratorRequest req;
  req.question_id = instance.question_id;
  req.question = instance.question;
  req.passages = instance.passages;
  req.mode = GenerationMode::CorrectionGivenReflection;
  req.attempt = render_cited_answer(attempt);
  req.reflection = build_reflection_text(annotation);
  auto res = generator.generate(req);
  res.validate();

  const auto correction = parse_cited_answer(res.text, m);
  return assemble_chain(attempt, annotation, correction, instance, phi, cfg, thresholds,
                        {ChainOrigin::Seeded, 0});
}

RoundStats& RoundStats::operator+=(const RoundStats& o) noexcept {
  generated += o.generated;
  parse_failures += o.parse_failures;
  accepted += o.accepted;
  rejected_threshold += o.rejected_threshold;
  rejected_no_gain += o.rejected_no_gain;
  return *this;
}

RoundResult bootstrap_round(const Corpus& corpus, const Generator& generator,
                            const ConsistencyScorer& phi, const RelevanceJudge& gamma,
                            const ScorerConfig& cfg, const AcceptThresholds& thresholds,
                            int round_index, std::uint64_t seed) {
  RoundResult result;
  const auto& instances = corpus.instances();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    GeneratorRequest req;
    req.question_id = inst.question_id;
    req.question = inst.question;
    req.passages = inst.passages;
    req.mode = GenerationMode::FullChain;
    req.seed = mix_seed(seed, round_index, i);

    auto res = generator.generate(req);
    ++result.stats.generated;

    try {
      res.validate();
      const auto sections = parse_chain_text(res.text);
      const auto m = inst.passage_count();
      const auto attempt = parse_cited_answer(sections.attempt, m);
      const auto correction = parse_cited_answer(sections.correction, m);
      // The model's own reflection (sections.reflection) is discarded; the
      // stored reflection always comes from the labeler.
      const auto gold = label_answer(attempt, inst, phi, gamma, cfg);
      auto chain = assemble_chain(attempt, gold, correction, inst, phi, cfg, thresholds,
                                  {ChainOrigin::Bootstrapped, round_index});
      switch (chain.outcome) {
        case AcceptOutcome::Accepted:
          ++result.stats.accepted;
          result.accepted.push_back(std::move(chain));
          break;
        case AcceptOutcome::RejectedThreshold:
          ++result.stats.rejected_threshold;
          break;
        case AcceptOutcome::RejectedNoGain:
          ++result.stats.rejected_no_gain;
          break;
      }
    } catch (const Error& e) {
      if (!is_content_failure(e.code())) throw;
      ++result.stats.parse_failures;
    }
  }
  return result;
}

std::string serialize_chain(const Chain& chain) {
  detail::ordered_json j;
  j["question_id"] = chain.question_id;
  j["provenance"] = provenance_json(chain.provenance);
  j["attempt"] = render_cited_answer(chain.attempt);
  j["reflection"] = chain.reflection_text;
  j["correction"] = render_cited_answer(chain.correction);
  j["attempt_quality"] = quality_json(chain.attempt_quality);
  j["correction_quality"] = quality_json(chain.correction_quality);
  j["accepted"] = chain.accepted;
  j["outcome"] = outcome_name(chain.outcome);
  return j.dump();
}

std::size_t ReflectionAccuracy::total() const noexcept {
  std::size_t n = 0;
  for (const auto& row : confusion)
    for (auto v : row) n += v;
  return n;
}

std::size_t ReflectionAccuracy::matches() const noexcept {
  std::size_t n = 0;
  for (std::size_t i = 0; i < kErrorTypeCount; ++i) n += confusion[i][i];
  return n;
}

std::optional<double> ReflectionAccuracy::overall() const noexcept {
  const auto n = total();
  if (n == 0) return std::nullopt;
  return static_cast<double>(matches()) / static_cast<double>(n);
}

std::optional<double> ReflectionAccuracy::per_type(ErrorType gold) const noexcept {
  const auto& row = confusion[index_of(gold)];
  std::size_t n = 0;
  for (auto v : row) n += v;
  if (n == 0) return std::nullopt;
  return static_cast<double>(row[index_of(gold)]) / static_cast<double>(n);
}

ReflectionAccuracy& ReflectionAccuracy::operator+=(const ReflectionAccuracy& o) noexcept {
  for (std::size_t i = 0; i < kErrorTypeCount; ++i)
    for (std::size_t j = 0; j < kErrorTypeCount; ++j) confusion[i][j] += o.confusion[i][j];
  return *this;
}

ReflectionAccuracy reflection_accuracy(const ReflectionAnnotation& predicted,
                                       const ReflectionAnnotation& gold) {
  if (!same_positions(predicted, gold)) {
    throw Error(ErrorCode::ShapeMismatch,
                "predicted and gold reflections label different citation positions");
  }
  ReflectionAccuracy acc;
  for (std::size_t i = 0; i < gold.sentences.size(); ++i) {
    for (std::size_t j = 0; j < gold.sentences[i].labels.size(); ++j) {
      const auto g = gold.sentences[i].labels[j].type;
      const auto p = predicted.sentences[i].labels[j].type;
      ++acc.confusion[index_of(g)][index_of(p)];
    }
  }
  return acc;
}

std::string sft_record(const Chain& chain, const QAInstance& instance) {
  detail::ordered_json j;
  j["question_id"] = instance.question_id;
  j["question"] = instance.question;
  j["passages"] = detail::passages_to_json(instance.passages);
  j["target"] = render_chain_text({render_cited_answer(chain.attempt), chain.reflection_text,
                                   render_cited_answer(chain.correction)});
  j["provenance"] = provenance_json(chain.provenance);
  return j.dump();
}

std::size_t serialize_sft_dataset(std::span<const Chain> chains, const Corpus& corpus,
                                  std::ostream& out) {
  std::size_t written = 0;
  for (const auto& chain : chains) {
    if (!chain.accepted) continue;
    out << sft_record(chain, corpus.at(chain.question_id)) << '\n';
    ++written;
  }
  return written;
}

std::size_t serialize_sft_dataset(std::span<const Chain> chains, const Corpus& corpus,
                                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  const auto n = serialize_sft_dataset(chains, corpus, out);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
  return n;
}

double nll_value(std::span<const double> token_logprobs) {
  if (token_logprobs.empty()) throw Error(ErrorCode::EmptySequence, "empty token sequence");
  double sum = 0.0;
  for (double lp : token_logprobs) {
    if (!std::isfinite(lp) || lp > 0.0) {
      throw Error(ErrorCode::NonFiniteInput,
                  "token log-probability must be finite and <= 0, got " + std::to_string(lp));
    }
    sum += lp;
  }
  return -sum / static_cast<double>(token_logprobs.size());
}

}  // namespace citeforge
