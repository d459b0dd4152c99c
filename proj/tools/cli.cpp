#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "citeforge/chains.hpp"
#include "citeforge/citext.hpp"
#include "citeforge/corpus.hpp"
#include "citeforge/error.hpp"
#include "citeforge/generator.hpp"
#include "citeforge/metrics.hpp"
#include "citeforge/remote.hpp"
#include "citeforge/remote_scorer.hpp"
#include "citeforge/rl.hpp"
#include "citeforge/scoring.hpp"
#include "citeforge/text.hpp"

namespace citeforge::cli {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Raw flag values. Unset optionals fall back to the config file, then to the
// environment (scorer URL only), then to built-in defaults.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> scorer;
  std::optional<std::string> scorer_url;
  std::optional<std::string> generator;
  std::optional<std::string> generator_url;
  std::optional<std::string> script;
  std::optional<double> mismatch_threshold;
  std::optional<double> relevance_threshold;
  std::optional<double> entail_threshold;
  std::optional<double> tau_cite;
  std::optional<double> tau_ans;
  std::optional<double> tau_cite_attempt;
  std::optional<double> tau_ans_attempt;
  std::optional<double> beta;
  std::optional<double> epsilon;
  std::optional<std::string> baseline_mode;
  std::optional<std::string> correction_reward_combine;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  bool summary = false;

  std::optional<std::string> corpus;
  std::optional<std::string> answers;
  std::optional<std::string> attempts;
  std::optional<std::string> rollouts;
  std::optional<std::string> rewards;
  std::optional<std::string> logprobs;
  std::optional<std::string> predicted;
  std::optional<std::string> gold;
  std::optional<std::string> question_id;
  std::optional<std::string> out;
  std::optional<std::string> sft_out;
  std::optional<std::string> chains_out;
};

enum class ScorerKind { Builtin, Remote };
enum class GeneratorKind { Mock, Remote };

struct RunConfig {
  ScorerKind scorer = ScorerKind::Builtin;
  std::string scorer_url;
  GeneratorKind generator = GeneratorKind::Mock;
  std::string generator_url;
  std::string script;
  ScorerConfig scoring;
  AcceptThresholds accept;
  rl::RlConfig rl;
  std::uint64_t seed = 0;
  int rounds = 3;
  bool summary = false;

  std::string corpus;
  std::string answers;
  std::string attempts;
  std::string rollouts;
  std::string rewards;
  std::string logprobs;
  std::string predicted;
  std::string gold;
  std::string question_id;
  std::string out;
  std::string sft_out;
  std::string chains_out;
};

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorCode::InvalidConfig, msg);
}

class Resolver {
 public:
  explicit Resolver(json file) : file_(std::move(file)) {}

  template <typename T>
  T pick(const std::optional<T>& flag, const char* key, T fallback) const {
    if (flag) return *flag;
    if (auto it = file_.find(key); it != file_.end() && !it->is_null()) {
      try {
        return it->get<T>();
      } catch (const json::exception&) {
        config_error(std::string("config key '") + key + "' has the wrong type");
      }
    }
    return fallback;
  }

 private:
  json file_;
};

json load_config_file(const std::optional<std::string>& path) {
  if (!path) return json::object();
  std::ifstream in(*path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open config file " + *path);
  try {
    auto j = json::parse(in);
    if (!j.is_object()) config_error("config file must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    config_error("config file " + *path + " is not valid JSON: " + e.what());
  }
}

RunConfig resolve(const Flags& f) {
  Resolver r(load_config_file(f.config));
  RunConfig c;

  const auto scorer = r.pick<std::string>(f.scorer, "scorer", "builtin");
  if (scorer == "builtin") {
    c.scorer = ScorerKind::Builtin;
  } else if (scorer == "remote") {
    c.scorer = ScorerKind::Remote;
  } else {
    config_error("scorer must be 'builtin' or 'remote', got '" + scorer + "'");
  }
  const char* env_url = std::getenv(kScorerUrlEnv);
  c.scorer_url = r.pick<std::string>(f.scorer_url, "scorer_url", env_url ? env_url : "");

  const auto generator = r.pick<std::string>(f.generator, "generator", "mock");
  if (generator == "mock") {
    c.generator = GeneratorKind::Mock;
  } else if (generator == "remote") {
    c.generator = GeneratorKind::Remote;
  } else {
    config_error("generator must be 'mock' or 'remote', got '" + generator + "'");
  }
  c.generator_url = r.pick<std::string>(f.generator_url, "generator_url", "");
  c.script = r.pick<std::string>(f.script, "script", "");

  c.scoring.mismatch_threshold =
      r.pick(f.mismatch_threshold, "mismatch_threshold", c.scoring.mismatch_threshold);
  c.scoring.relevance_threshold =
      r.pick(f.relevance_threshold, "relevance_threshold", c.scoring.relevance_threshold);
  c.scoring.entail_threshold =
      r.pick(f.entail_threshold, "entail_threshold", c.scoring.entail_threshold);
  c.accept.tau_cite = r.pick(f.tau_cite, "tau_cite", c.accept.tau_cite);
  c.accept.tau_ans = r.pick(f.tau_ans, "tau_ans", c.accept.tau_ans);
  c.rl.correction_thresholds = c.accept;
  c.rl.attempt_thresholds.tau_cite =
      r.pick(f.tau_cite_attempt, "tau_cite_attempt", c.rl.attempt_thresholds.tau_cite);
  c.rl.attempt_thresholds.tau_ans =
      r.pick(f.tau_ans_attempt, "tau_ans_attempt", c.rl.attempt_thresholds.tau_ans);
  c.rl.beta = r.pick(f.beta, "beta", c.rl.beta);
  c.rl.epsilon = r.pick(f.epsilon, "epsilon", c.rl.epsilon);

  const auto baseline = r.pick<std::string>(f.baseline_mode, "baseline_mode", "leave_one_out");
  auto bm = rl::parse_baseline_mode(baseline);
  if (!bm) config_error("baseline_mode must be 'leave_one_out' or 'group_mean'");
  c.rl.baseline_mode = *bm;
  const auto combine =
      r.pick<std::string>(f.correction_reward_combine, "correction_reward_combine", "sum");
  auto cm = rl::parse_reward_combine(combine);
  if (!cm) config_error("correction_reward_combine must be 'sum' or 'mean'");
  c.rl.correction_reward_combine = *cm;

  c.seed = r.pick<std::uint64_t>(f.seed, "seed", 0);
  c.rounds = r.pick(f.rounds, "rounds", 3);
  if (c.rounds < 1) config_error("rounds must be >= 1");
  c.summary = f.summary || r.pick<bool>(std::nullopt, "summary", false);

  c.corpus = r.pick<std::string>(f.corpus, "corpus", "");
  c.answers = r.pick<std::string>(f.answers, "answers", "");
  c.attempts = r.pick<std::string>(f.attempts, "attempts", "");
  c.rollouts = r.pick<std::string>(f.rollouts, "rollouts", "");
  c.rewards = r.pick<std::string>(f.rewards, "rewards", "");
  c.logprobs = r.pick<std::string>(f.logprobs, "logprobs", "");
  c.predicted = r.pick<std::string>(f.predicted, "predicted", "");
  c.gold = r.pick<std::string>(f.gold, "gold", "");
  c.question_id = r.pick<std::string>(f.question_id, "question_id", "");
  c.out = r.pick<std::string>(f.out, "out", "");
  c.sft_out = r.pick<std::string>(f.sft_out, "sft_out", "");
  c.chains_out = r.pick<std::string>(f.chains_out, "chains_out", "");

  c.scoring.validate();
  c.accept.validate();
  c.rl.validate();
  return c;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) config_error(std::string("missing required option --") + flag);
}

// ---------------------------------------------------------------------------
// Scorers and generators
// ---------------------------------------------------------------------------

struct Scorers {
  std::unique_ptr<ConsistencyScorer> phi_owner;
  std::unique_ptr<RelevanceJudge> gamma_owner;
  std::shared_ptr<RemoteScorer> remote;
  const ConsistencyScorer* phi = nullptr;
  const RelevanceJudge* gamma = nullptr;
};

Scorers make_scorers(const RunConfig& c) {
  Scorers s;
  if (c.scorer == ScorerKind::Remote) {
    if (c.scorer_url.empty()) {
      config_error("remote scorer requires --scorer-url or " + std::string(kScorerUrlEnv));
    }
    s.remote = std::make_shared<RemoteScorer>(c.scorer_url);
    s.phi = s.remote.get();
    s.gamma = s.remote.get();
  } else {
    s.phi_owner = std::make_unique<LexicalConsistencyScorer>();
    s.gamma_owner = std::make_unique<LexicalRelevanceJudge>(c.scoring.relevance_threshold);
    s.phi = s.phi_owner.get();
    s.gamma = s.gamma_owner.get();
  }
  return s;
}

std::unique_ptr<Generator> make_generator(const RunConfig& c) {
  if (c.generator == GeneratorKind::Remote) {
    if (c.generator_url.empty()) config_error("remote generator requires --generator-url");
    return std::make_unique<RemoteGenerator>(c.generator_url);
  }
  if (c.script.empty()) config_error("mock generator requires --script");
  return std::make_unique<MockGenerator>(MockGenerator::load(c.script));
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

struct JsonLine {
  std::size_t line;
  json value;
};

std::vector<JsonLine> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path);
  std::vector<JsonLine> out;
  std::string buf;
  std::size_t line = 0;
  while (std::getline(in, buf)) {
    ++line;
    if (text::trim(buf).empty()) continue;
    json j;
    try {
      j = json::parse(buf);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord,
                  path + " line " + std::to_string(line) + ": invalid JSON: " + e.what(), line);
    }
    if (!j.is_object()) {
      throw Error(ErrorCode::MalformedRecord,
                  path + " line " + std::to_string(line) + ": record is not an object", line);
    }
    out.push_back({line, std::move(j)});
  }
  return out;
}

std::string field_string(const JsonLine& rec, const char* key, const std::string& path) {
  auto it = rec.value.find(key);
  if (it == rec.value.end() || !it->is_string()) {
    throw Error(ErrorCode::MalformedRecord,
                path + " line " + std::to_string(rec.line) + ": field '" + key +
                    "' must be a string",
                rec.line);
  }
  return it->get<std::string>();
}

double field_number(const JsonLine& rec, const char* key, const std::string& path) {
  auto it = rec.value.find(key);
  if (it == rec.value.end() || !it->is_number()) {
    throw Error(ErrorCode::MalformedRecord,
                path + " line " + std::to_string(rec.line) + ": field '" + key +
                    "' must be a number",
                rec.line);
  }
  return it->get<double>();
}

void check_unique(std::unordered_set<std::string>& seen, const std::string& key,
                  const JsonLine& rec, const std::string& path) {
  if (!seen.insert(key).second) {
    throw Error(ErrorCode::MalformedRecord,
                path + " line " + std::to_string(rec.line) + ": duplicate key '" + key + "'",
                rec.line);
  }
}

struct AnswerRecord {
  std::string question_id;
  std::string text;
};

std::vector<AnswerRecord> read_answers(const std::string& path, const Corpus& corpus) {
  std::vector<AnswerRecord> out;
  std::unordered_set<std::string> seen;
  for (const auto& rec : read_jsonl(path)) {
    AnswerRecord a{field_string(rec, "question_id", path), field_string(rec, "answer", path)};
    check_unique(seen, a.question_id, rec, path);
    corpus.at(a.question_id);
    out.push_back(std::move(a));
  }
  return out;
}

// Outputs are staged in memory and written only after all work succeeded.
class OutputSet {
 public:
  void stage(const std::string& path, std::string content) {
    if (!path.empty()) files_.emplace_back(path, std::move(content));
  }
  void commit() const {
    for (const auto& [path, content] : files_) {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
      out << content;
      out.flush();
      if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

ojson optional_number(const std::optional<double>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

ojson annotation_json(const ReflectionAnnotation& a) {
  ojson arr = ojson::array();
  for (const auto& s : a.sentences) {
    ojson cites = ojson::array();
    for (const auto& l : s.labels) {
      ojson c;
      c["passage"] = l.passage;
      c["label"] = label_of(l.type);
      cites.push_back(std::move(c));
    }
    ojson js;
    js["sentence"] = s.sentence;
    js["citations"] = std::move(cites);
    arr.push_back(std::move(js));
  }
  return arr;
}

ojson confusion_json(const ReflectionAccuracy& acc) {
  ojson rows = ojson::object();
  for (auto gold : {ErrorType::Mismatch, ErrorType::Irrelevance, ErrorType::Correct}) {
    ojson row = ojson::object();
    for (auto pred : {ErrorType::Mismatch, ErrorType::Irrelevance, ErrorType::Correct}) {
      row[std::string(label_of(pred))] = acc.confusion[index_of(gold)][index_of(pred)];
    }
    rows[std::string(label_of(gold))] = std::move(row);
  }
  return rows;
}

ojson accuracy_json(const ReflectionAccuracy& acc) {
  ojson j;
  j["citations"] = acc.total();
  j["matches"] = acc.matches();
  j["accuracy"] = optional_number(acc.overall());
  ojson per = ojson::object();
  for (auto t : {ErrorType::Mismatch, ErrorType::Irrelevance, ErrorType::Correct}) {
    per[std::string(label_of(t))] = optional_number(acc.per_type(t));
  }
  j["per_type_accuracy"] = std::move(per);
  j["confusion"] = confusion_json(acc);
  return j;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_label(const RunConfig& c, std::ostream& out) {
  require(c.corpus, "corpus");
  require(c.answers, "answers");
  require(c.out, "out");
  const auto corpus = load_corpus(c.corpus);
  const auto answers = read_answers(c.answers, corpus);
  const auto scorers = make_scorers(c);

  std::string report;
  std::array<std::size_t, kErrorTypeCount> counts{};
  for (const auto& a : answers) {
    const auto& inst = corpus.at(a.question_id);
    const auto parsed = parse_cited_answer(a.text, inst.passage_count());
    const auto ann = label_answer(parsed, inst, *scorers.phi, *scorers.gamma, c.scoring);
    for (const auto& s : ann.sentences)
      for (const auto& l : s.labels) ++counts[index_of(l.type)];
    ojson j;
    j["question_id"] = a.question_id;
    j["annotation"] = annotation_json(ann);
    j["reflection"] = build_reflection_text(ann);
    j["dropped_citations"] = parsed.dropped_citation_count;
    report += j.dump() + "\n";
  }
  OutputSet outputs;
  outputs.stage(c.out, std::move(report));
  outputs.commit();

  if (c.summary) {
    ojson s;
    s["answers"] = answers.size();
    for (auto t : {ErrorType::Mismatch, ErrorType::Irrelevance, ErrorType::Correct}) {
      s[std::string(label_of(t))] = counts[index_of(t)];
    }
    out << s.dump() << '\n';
  }
  return kExitOk;
}

int cmd_metrics(const RunConfig& c, std::ostream& out) {
  require(c.corpus, "corpus");
  require(c.answers, "answers");
  require(c.out, "out");
  const auto corpus = load_corpus(c.corpus);
  const auto answers = read_answers(c.answers, corpus);
  const auto scorers = make_scorers(c);

  std::string report;
  double sum_p = 0, sum_r = 0, sum_f1 = 0, sum_em = 0, sum_cip = 0, sum_rouge = 0;
  std::size_t rouge_n = 0;
  for (const auto& a : answers) {
    const auto& inst = corpus.at(a.question_id);
    const auto parsed = parse_cited_answer(a.text, inst.passage_count());
    const auto m = evaluate_answer(parsed, inst, *scorers.phi, c.scoring);
    ojson j;
    j["kind"] = "instance";
    j["question_id"] = a.question_id;
    j["citation_precision"] = m.citation_precision;
    j["citation_recall"] = m.citation_recall;
    j["citation_f1"] = m.citation_f1;
    j["em_recall"] = m.em_recall;
    j["correct_in_p"] = m.correct_in_p;
    j["rouge_l"] = optional_number(m.rouge_l);
    j["sentences"] = m.sentence_count;
    j["citations"] = m.citation_count;
    j["dropped_citations"] = m.dropped_citation_count;
    report += j.dump() + "\n";
    sum_p += m.citation_precision;
    sum_r += m.citation_recall;
    sum_f1 += m.citation_f1;
    sum_em += m.em_recall;
    sum_cip += m.correct_in_p;
    if (m.rouge_l) {
      sum_rouge += *m.rouge_l;
      ++rouge_n;
    }
  }
  const double n = static_cast<double>(answers.size());
  auto mean = [&](double s) { return answers.empty() ? ojson(nullptr) : ojson(s / n); };
  ojson summary;
  summary["kind"] = "summary";
  summary["instances"] = answers.size();
  summary["citation_precision"] = mean(sum_p);
  summary["citation_recall"] = mean(sum_r);
  summary["citation_f1"] = mean(sum_f1);
  summary["em_recall"] = mean(sum_em);
  summary["correct_in_p"] = mean(sum_cip);
  summary["rouge_l"] =
      rouge_n == 0 ? ojson(nullptr) : ojson(sum_rouge / static_cast<double>(rouge_n));
  report += summary.dump() + "\n";

  OutputSet outputs;
  outputs.stage(c.out, std::move(report));
  outputs.commit();
  if (c.summary) out << summary.dump() << '\n';
  return kExitOk;
}

int cmd_build_chains(const RunConfig& c, std::ostream& out) {
  require(c.corpus, "corpus");
  require(c.out, "out");
  const auto corpus = load_corpus(c.corpus);
  const auto scorers = make_scorers(c);
  const auto generator = make_generator(c);

  std::vector<AnswerRecord> attempts;
  if (!c.attempts.empty()) {
    attempts = read_answers(c.attempts, corpus);
  } else {
    for (const auto& inst : corpus.instances()) {
      GeneratorRequest req;
      req.question_id = inst.question_id;
      req.question = inst.question;
      req.passages = inst.passages;
      req.mode = GenerationMode::AttemptOnly;
      req.seed = c.seed;
      auto res = generator->generate(req);
      res.validate();
      attempts.push_back({inst.question_id, res.text});
    }
  }

  std::vector<Chain> chains;
  std::string chains_report;
  for (const auto& a : attempts) {
    chains.push_back(build_seed_chain(a.text, corpus.at(a.question_id), *generator, *scorers.phi,
                                      *scorers.gamma, c.scoring, c.accept));
    chains_report += serialize_chain(chains.back()) + "\n";
  }

  std::ostringstream sft;
  const auto accepted = serialize_sft_dataset(chains, corpus, sft);

  OutputSet outputs;
  outputs.stage(c.out, std::move(chains_report));
  outputs.stage(c.sft_out, sft.str());
  outputs.commit();
  if (c.summary) {
    ojson s;
    s["chains"] = chains.size();
    s["accepted"] = accepted;
    out << s.dump() << '\n';
  }
  return kExitOk;
}

ojson stats_json(const RoundStats& s) {
  ojson j;
  j["generated"] = s.generated;
  j["parse_failures"] = s.parse_failures;
  j["accepted"] = s.accepted;
  j["rejected_threshold"] = s.rejected_threshold;
  j["rejected_no_gain"] = s.rejected_no_gain;
  return j;
}

int cmd_bootstrap(const RunConfig& c, std::ostream& out) {
  require(c.corpus, "corpus");
  require(c.out, "out");
  const auto corpus = load_corpus(c.corpus);
  const auto scorers = make_scorers(c);
  const auto generator = make_generator(c);

  std::vector<Chain> all;
  std::vector<RoundStats> per_round;
  for (int round = 1; round <= c.rounds; ++round) {
    auto result = bootstrap_round(corpus, *generator, *scorers.phi, *scorers.gamma, c.scoring,
                                  c.accept, round, c.seed);
    per_round.push_back(result.stats);
    for (auto& chain : result.accepted) all.push_back(std::move(chain));
  }

  std::ostringstream sft;
  serialize_sft_dataset(all, corpus, sft);
  std::string chains_report;
  for (const auto& chain : all) chains_report += serialize_chain(chain) + "\n";

  OutputSet outputs;
  outputs.stage(c.out, sft.str());
  outputs.stage(c.chains_out, std::move(chains_report));
  outputs.commit();
  if (c.summary) {
    for (std::size_t i = 0; i < per_round.size(); ++i) {
      ojson j;
      j["round"] = i + 1;
      j["stats"] = stats_json(per_round[i]);
      out << j.dump() << '\n';
    }
  }
  return kExitOk;
}

int cmd_rewards(const RunConfig& c, std::ostream& out) {
  require(c.corpus, "corpus");
  require(c.rollouts, "rollouts");
  require(c.out, "out");
  const auto corpus = load_corpus(c.corpus);
  const auto scorers = make_scorers(c);

  std::string report;
  std::size_t malformed = 0;
  std::size_t rollouts = 0;
  std::unordered_set<std::string> seen;
  for (const auto& rec : read_jsonl(c.rollouts)) {
    const auto chain_id = field_string(rec, "chain_id", c.rollouts);
    check_unique(seen, chain_id, rec, c.rollouts);
    const auto& inst = corpus.at(field_string(rec, "question_id", c.rollouts));
    std::string group_id;
    if (auto it = rec.value.find("group_id"); it != rec.value.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw Error(ErrorCode::MalformedRecord,
                    c.rollouts + " line " + std::to_string(rec.line) + ": group_id must be a string",
                    rec.line);
      }
      group_id = it->get<std::string>();
    }
    const auto text = field_string(rec, "text", c.rollouts);
    ++rollouts;

    rl::BehaviorRewards rewards;
    try {
      const auto sections = parse_chain_text(text);
      const auto m = inst.passage_count();
      const auto attempt = parse_cited_answer(sections.attempt, m);
      const auto correction = parse_cited_answer(sections.correction, m);
      const auto gold = label_answer(attempt, inst, *scorers.phi, *scorers.gamma, c.scoring);
      std::optional<ReflectionAnnotation> predicted;
      try {
        predicted = parse_reflection_text(sections.reflection);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedReflection) throw;
      }
      rewards = rl::behavior_rewards(quality_pair(attempt, inst, *scorers.phi, c.scoring),
                                     quality_pair(correction, inst, *scorers.phi, c.scoring),
                                     predicted, gold, c.rl);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MalformedChain && e.code() != ErrorCode::EmptyText &&
          e.code() != ErrorCode::EmptyClaim) {
        throw;
      }
      // A rollout that does not follow the chain format earns the minimum
      // reward for every behavior.
      ++malformed;
      rewards.attempt = -1.0;
      rewards.reflection = -1.0;
      rewards.correction = c.rl.correction_reward_combine == rl::RewardCombine::Sum ? -2.0 : -1.0;
    }

    auto emit = [&](rl::BehaviorKind kind, double reward) {
      ojson j;
      j["chain_id"] = chain_id;
      j["group_id"] = group_id;
      j["kind"] = rl::to_string(kind);
      j["reward"] = reward;
      report += j.dump() + "\n";
    };
    emit(rl::BehaviorKind::Attempt, rewards.attempt);
    if (rewards.reflection) emit(rl::BehaviorKind::Reflection, *rewards.reflection);
    emit(rl::BehaviorKind::Correction, rewards.correction);
  }

  OutputSet outputs;
  outputs.stage(c.out, std::move(report));
  outputs.commit();
  if (c.summary) {
    ojson s;
    s["rollouts"] = rollouts;
    s["malformed"] = malformed;
    out << s.dump() << '\n';
  }
  return kExitOk;
}

int cmd_advantages(const RunConfig& c, std::ostream& out) {
  require(c.rewards, "rewards");
  require(c.logprobs, "logprobs");
  require(c.out, "out");

  struct Lp {
    double policy, old, ref;
  };
  std::map<std::pair<std::string, rl::BehaviorKind>, Lp> lps;
  for (const auto& rec : read_jsonl(c.logprobs)) {
    const auto id = field_string(rec, "chain_id", c.logprobs);
    const auto kind_s = field_string(rec, "kind", c.logprobs);
    auto kind = rl::parse_behavior_kind(kind_s);
    if (!kind) {
      throw Error(ErrorCode::MalformedRecord,
                  c.logprobs + " line " + std::to_string(rec.line) + ": unknown kind '" + kind_s + "'",
                  rec.line);
    }
    Lp lp{field_number(rec, "policy", c.logprobs), field_number(rec, "old", c.logprobs),
          field_number(rec, "ref", c.logprobs)};
    for (double v : {lp.policy, lp.old, lp.ref}) {
      if (!std::isfinite(v) || v > 0.0) {
        throw Error(ErrorCode::MalformedRecord,
                    c.logprobs + " line " + std::to_string(rec.line) +
                        ": log-probabilities must be finite and <= 0",
                    rec.line);
      }
    }
    if (!lps.emplace(std::make_pair(id, *kind), lp).second) {
      throw Error(ErrorCode::MalformedRecord,
                  c.logprobs + " line " + std::to_string(rec.line) + ": duplicate (chain_id, kind)",
                  rec.line);
    }
  }

  std::vector<rl::BehaviorSample> samples;
  for (const auto& rec : read_jsonl(c.rewards)) {
    rl::BehaviorSample s;
    s.chain_id = field_string(rec, "chain_id", c.rewards);
    const auto kind_s = field_string(rec, "kind", c.rewards);
    auto kind = rl::parse_behavior_kind(kind_s);
    if (!kind) {
      throw Error(ErrorCode::MalformedRecord,
                  c.rewards + " line " + std::to_string(rec.line) + ": unknown kind '" + kind_s + "'",
                  rec.line);
    }
    s.kind = *kind;
    if (auto it = rec.value.find("group_id"); it != rec.value.end() && it->is_string()) {
      s.group_id = it->get<std::string>();
    }
    s.reward = field_number(rec, "reward", c.rewards);
    auto lp = lps.find({s.chain_id, s.kind});
    if (lp == lps.end()) {
      throw Error(ErrorCode::MalformedRecord,
                  c.rewards + " line " + std::to_string(rec.line) + ": no log-probabilities for (" +
                      s.chain_id + ", " + kind_s + ")",
                  rec.line);
    }
    s.logprob_policy = lp->second.policy;
    s.logprob_old = lp->second.old;
    s.logprob_ref = lp->second.ref;
    samples.push_back(std::move(s));
  }

  const auto records = rl::compute_advantages(samples, c.rl);
  std::ostringstream report;
  rl::export_advantages(records, report);

  OutputSet outputs;
  outputs.stage(c.out, report.str());
  outputs.commit();
  if (c.summary) {
    ojson s;
    s["records"] = records.size();
    if (!records.empty()) {
      std::vector<rl::PolicyTerm> batch;
      batch.reserve(records.size());
      for (std::size_t i = 0; i < records.size(); ++i) {
        batch.push_back({samples[i].logprob_policy, samples[i].logprob_old, records[i].advantage});
      }
      s["clipped_objective"] = rl::clipped_objective(batch, c.rl.epsilon).loss;
    } else {
      s["clipped_objective"] = nullptr;
    }
    out << s.dump() << '\n';
  }
  return kExitOk;
}

std::uint64_t instance_seed(std::uint64_t seed, std::size_t index) {
  return seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1));
}

int cmd_inject_noise(const RunConfig& c, std::ostream& out) {
  require(c.corpus, "corpus");
  require(c.out, "out");
  const auto corpus = load_corpus(c.corpus);
  std::string report;
  std::size_t n = 0;
  if (!c.question_id.empty()) {
    report += serialize_instance(inject_noise(corpus, c.question_id, c.seed)) + "\n";
    n = 1;
  } else {
    const auto& instances = corpus.instances();
    for (std::size_t i = 0; i < instances.size(); ++i) {
      report += serialize_instance(
                    inject_noise(corpus, instances[i].question_id, instance_seed(c.seed, i))) +
                "\n";
      ++n;
    }
  }
  OutputSet outputs;
  outputs.stage(c.out, std::move(report));
  outputs.commit();
  if (c.summary) out << ojson{{"perturbed", n}}.dump() << '\n';
  return kExitOk;
}

// Reads {"question_id", "reflection"} records; a record may instead carry a
// full chain in "text", whose <reflect> section is used.
std::vector<std::pair<std::string, std::string>> read_reflections(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  std::unordered_set<std::string> seen;
  for (const auto& rec : read_jsonl(path)) {
    auto qid = field_string(rec, "question_id", path);
    check_unique(seen, qid, rec, path);
    std::string reflection;
    if (rec.value.contains("reflection")) {
      reflection = field_string(rec, "reflection", path);
    } else {
      try {
        reflection = parse_chain_text(field_string(rec, "text", path)).reflection;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedChain) throw;
        reflection = "\x01";  // forces a MalformedReflection downstream
      }
    }
    out.emplace_back(std::move(qid), std::move(reflection));
  }
  return out;
}

int cmd_eval_reflection(const RunConfig& c, std::ostream& out) {
  require(c.predicted, "predicted");
  require(c.gold, "gold");
  require(c.out, "out");

  std::unordered_map<std::string, ReflectionAnnotation> gold;
  for (const auto& [qid, text] : read_reflections(c.gold)) {
    try {
      gold.emplace(qid, parse_reflection_text(text));
    } catch (const Error& e) {
      throw Error(e.code(), c.gold + " (" + qid + "): " + e.what(), e.line());
    }
  }

  ReflectionAccuracy total;
  std::size_t unparseable = 0;
  std::size_t shape_mismatch = 0;
  std::size_t evaluated = 0;
  std::string report;
  for (const auto& [qid, text] : read_reflections(c.predicted)) {
    auto g = gold.find(qid);
    if (g == gold.end()) {
      throw Error(ErrorCode::UnknownQuestionId, "no gold reflection for " + qid);
    }
    ojson j;
    j["kind"] = "instance";
    j["question_id"] = qid;
    try {
      const auto acc = reflection_accuracy(parse_reflection_text(text), g->second);
      total += acc;
      ++evaluated;
      j["status"] = "ok";
      j.update(accuracy_json(acc));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MalformedReflection) {
        ++unparseable;
        j["status"] = "unparseable";
      } else if (e.code() == ErrorCode::ShapeMismatch) {
        ++shape_mismatch;
        j["status"] = "shape_mismatch";
      } else {
        throw;
      }
    }
    report += j.dump() + "\n";
  }
  ojson summary;
  summary["kind"] = "summary";
  summary["evaluated"] = evaluated;
  summary["unparseable"] = unparseable;
  summary["shape_mismatch"] = shape_mismatch;
  summary.update(accuracy_json(total));
  report += summary.dump() + "\n";

  OutputSet outputs;
  outputs.stage(c.out, std::move(report));
  outputs.commit();
  if (c.summary) out << summary.dump() << '\n';
  return kExitOk;
}

void emit_error(std::ostream& err, std::string_view code, const std::string& message,
                std::optional<std::size_t> line = std::nullopt) {
  ojson j;
  j["error"] = code;
  j["message"] = message;
  if (line) j["line"] = *line;
  err << j.dump() << '\n';
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"citeforge: citation error labeling, chain construction, metrics and RL rewards"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;

  app.add_option("--config", f.config, "JSON config file keyed by option name (dashes as underscores)");
  app.add_option("--seed", f.seed, "Seed for every random choice");
  app.add_flag("--summary", f.summary, "Print corpus-level summary on standard output");
  app.add_option("--scorer", f.scorer, "builtin | remote");
  app.add_option("--scorer-url", f.scorer_url, "Base URL of the scoring service");
  app.add_option("--generator", f.generator, "mock | remote");
  app.add_option("--generator-url", f.generator_url, "Base URL of the generation service");
  app.add_option("--script", f.script, "Mock generator script (JSONL)");
  app.add_option("--mismatch-threshold", f.mismatch_threshold, "Consistency score below which a citation is a mismatch");
  app.add_option("--relevance-threshold", f.relevance_threshold, "Built-in relevance judge threshold");
  app.add_option("--entail-threshold", f.entail_threshold, "Consistency score counted as entailment by the metrics");
  app.add_option("--tau-cite", f.tau_cite, "Citation F1 acceptance threshold");
  app.add_option("--tau-ans", f.tau_ans, "EM recall acceptance threshold");
  app.add_option("--tau-cite-attempt", f.tau_cite_attempt, "Citation F1 threshold for attempt rewards");
  app.add_option("--tau-ans-attempt", f.tau_ans_attempt, "EM recall threshold for attempt rewards");
  app.add_option("--beta", f.beta, "KL coefficient");
  app.add_option("--epsilon", f.epsilon, "Clip range");
  app.add_option("--baseline-mode", f.baseline_mode, "leave_one_out | group_mean");
  app.add_option("--correction-reward-combine", f.correction_reward_combine, "sum | mean");

  auto* label = app.add_subcommand("label", "Label every citation as CORRECT, MISMATCH or IRRELEVANT");
  label->add_option("--corpus", f.corpus, "Corpus JSONL");
  label->add_option("--answers", f.answers, "Answers JSONL {question_id, answer}");
  label->add_option("--out", f.out, "Annotation JSONL");

  auto* metrics = app.add_subcommand("metrics", "Citation, correctness and ROUGE-L metrics");
  metrics->add_option("--corpus", f.corpus, "Corpus JSONL");
  metrics->add_option("--answers", f.answers, "Answers JSONL {question_id, answer}");
  metrics->add_option("--out", f.out, "Metric report JSONL");

  auto* build = app.add_subcommand("build-chains", "Seed-stage attempt-reflection-correction chains");
  build->add_option("--corpus", f.corpus, "Corpus JSONL");
  build->add_option("--attempts", f.attempts, "Attempts JSONL {question_id, answer}; generated if omitted");
  build->add_option("--out", f.out, "Chain JSONL (all chains)");
  build->add_option("--sft-out", f.sft_out, "SFT JSONL (accepted chains)");

  auto* boot = app.add_subcommand("bootstrap", "Online self-reflective bootstrapping rounds");
  boot->add_option("--corpus", f.corpus, "Corpus JSONL");
  boot->add_option("--rounds", f.rounds, "Number of rounds (default 3)");
  boot->add_option("--out", f.out, "SFT JSONL of accepted chains");
  boot->add_option("--chains-out", f.chains_out, "Chain JSONL of accepted chains");

  auto* rewards = app.add_subcommand("rewards", "Per-behavior rewards for chain rollouts");
  rewards->add_option("--corpus", f.corpus, "Corpus JSONL");
  rewards->add_option("--rollouts", f.rollouts, "Rollouts JSONL {chain_id, question_id, group_id, text}");
  rewards->add_option("--out", f.out, "Reward JSONL");

  auto* adv = app.add_subcommand("advantages", "Baselines, KL-penalized advantages and clipped objective");
  adv->add_option("--rewards", f.rewards, "Reward JSONL");
  adv->add_option("--logprobs", f.logprobs, "Log-probability JSONL {chain_id, kind, policy, old, ref}");
  adv->add_option("--out", f.out, "Advantage JSONL");

  auto* noise = app.add_subcommand("inject-noise", "Replace one passage with a distractor");
  noise->add_option("--corpus", f.corpus, "Corpus JSONL");
  noise->add_option("--question-id", f.question_id, "Perturb only this question");
  noise->add_option("--out", f.out, "Perturbed corpus JSONL");

  auto* evalr = app.add_subcommand("eval-reflection", "Accuracy of predicted reflections against gold");
  evalr->add_option("--predicted", f.predicted, "JSONL {question_id, reflection} or {question_id, text}");
  evalr->add_option("--gold", f.gold, "JSONL {question_id, reflection}");
  evalr->add_option("--out", f.out, "Report JSONL");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  using Handler = std::function<int(const RunConfig&, std::ostream&)>;
  const std::vector<std::pair<CLI::App*, Handler>> handlers = {
      {label, cmd_label},       {metrics, cmd_metrics}, {build, cmd_build_chains},
      {boot, cmd_bootstrap},    {rewards, cmd_rewards}, {adv, cmd_advantages},
      {noise, cmd_inject_noise}, {evalr, cmd_eval_reflection},
  };

  try {
    const auto cfg = resolve(f);
    for (const auto& [sub, handler] : handlers) {
      if (sub->parsed()) return handler(cfg, out);
    }
    err << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    emit_error(err, to_string(e.code()), e.what(), e.line());
    if (e.code() == ErrorCode::InvalidConfig) {
      err << app.help();
      return kExitUsage;
    }
    return kExitRuntime;
  } catch (const std::exception& e) {
    emit_error(err, "InternalError", e.what());
    return kExitRuntime;
  }
}

}  // namespace citeforge::cli
