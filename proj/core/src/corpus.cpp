#include "citeforge/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "citeforge/error.hpp"
#include "citeforge/prng.hpp"
#include "citeforge/text.hpp"
#include "json_util.hpp"

namespace citeforge {
namespace {

std::string where(std::optional<std::size_t> line) {
  return line ? "line " + std::to_string(*line) + ": " : std::string{};
}

}  // namespace

const Passage& QAInstance::passage(int index) const {
  if (index < 1 || static_cast<std::size_t>(index) > passages.size()) {
    throw Error(ErrorCode::InvalidCitation,
                "citation [" + std::to_string(index) + "] out of range for " + question_id +
                    " with " + std::to_string(passages.size()) + " passages");
  }
  return passages[static_cast<std::size_t>(index - 1)];
}

void validate_instance(const QAInstance& instance, std::optional<std::size_t> line) {
  const auto prefix = where(line);
  if (instance.question_id.empty()) {
    throw Error(ErrorCode::MalformedRecord, prefix + "empty question_id", line);
  }
  if (instance.passages.empty()) {
    throw Error(ErrorCode::EmptyPassageList,
                prefix + "question " + instance.question_id + " has no passages", line);
  }
  std::unordered_set<std::string> ids;
  for (const auto& p : instance.passages) {
    if (text::trim(p.body).empty()) {
      throw Error(ErrorCode::MalformedRecord,
                  prefix + "passage '" + p.id + "' has an empty body", line);
    }
    if (!ids.insert(p.id).second) {
      throw Error(ErrorCode::MalformedRecord,
                  prefix + "duplicate passage id '" + p.id + "' in " + instance.question_id, line);
    }
  }
  for (const auto& group : instance.gold_answer_groups) {
    if (group.empty()) {
      throw Error(ErrorCode::MalformedRecord, prefix + "empty gold answer group", line);
    }
    for (const auto& alias : group) {
      if (text::normalize(alias).empty()) {
        throw Error(ErrorCode::MalformedRecord,
                    prefix + "alias '" + alias + "' is empty after normalization", line);
      }
    }
  }
}

Corpus::Corpus(std::vector<QAInstance> instances, std::string source_tag)
    : instances_(std::move(instances)), source_tag_(std::move(source_tag)) {
  index_.reserve(instances_.size());
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    validate_instance(instances_[i]);
    if (!index_.emplace(instances_[i].question_id, i).second) {
      throw Error(ErrorCode::DuplicateQuestionId,
                  "duplicate question_id " + instances_[i].question_id);
    }
  }
}

const QAInstance* Corpus::find(std::string_view question_id) const {
  auto it = index_.find(std::string(question_id));
  return it == index_.end() ? nullptr : &instances_[it->second];
}

const QAInstance& Corpus::at(std::string_view question_id) const {
  if (const auto* inst = find(question_id)) return *inst;
  throw Error(ErrorCode::UnknownQuestionId,
              "unknown question_id " + std::string(question_id));
}

QAInstance parse_instance(std::string_view json_line, std::size_t line) {
  const auto j = detail::parse_json_line(json_line, line);
  if (!j.is_object()) {
    throw Error(ErrorCode::MalformedRecord, where(line) + "record is not an object", line);
  }
  QAInstance inst;
  inst.question_id = detail::require_string(j, "question_id", line);
  inst.question = detail::require_string(j, "question", line);

  auto ps = j.find("passages");
  if (ps == j.end() || !ps->is_array()) {
    throw Error(ErrorCode::MalformedRecord, where(line) + "field 'passages' must be an array", line);
  }
  for (const auto& p : *ps) {
    if (!p.is_object()) {
      throw Error(ErrorCode::MalformedRecord, where(line) + "passage is not an object", line);
    }
    inst.passages.push_back(Passage{detail::require_string(p, "id", line),
                                    detail::require_string(p, "title", line),
                                    detail::require_string(p, "text", line)});
  }

  auto groups = j.find("gold_answer_groups");
  if (groups == j.end() || !groups->is_array()) {
    throw Error(ErrorCode::MalformedRecord,
                where(line) + "field 'gold_answer_groups' must be an array", line);
  }
  for (const auto& g : *groups) {
    if (!g.is_array()) {
      throw Error(ErrorCode::MalformedRecord,
                  where(line) + "gold answer group must be an array", line);
    }
    std::vector<std::string> aliases;
    for (const auto& a : g) {
      if (!a.is_string()) {
        throw Error(ErrorCode::MalformedRecord, where(line) + "alias must be a string", line);
      }
      aliases.push_back(a.get<std::string>());
    }
    inst.gold_answer_groups.push_back(std::move(aliases));
  }

  if (auto la = j.find("gold_long_answer"); la != j.end() && !la->is_null()) {
    if (!la->is_string()) {
      throw Error(ErrorCode::MalformedRecord,
                  where(line) + "field 'gold_long_answer' must be a string or null", line);
    }
    inst.gold_long_answer = la->get<std::string>();
  }

  validate_instance(inst, line);
  return inst;
}

Corpus read_corpus(std::istream& in, std::string source_tag) {
  std::vector<QAInstance> instances;
  std::unordered_set<std::string> seen;
  std::string buf;
  std::size_t line = 0;
  while (std::getline(in, buf)) {
    ++line;
    if (text::trim(buf).empty()) continue;
    auto inst = parse_instance(buf, line);
    if (!seen.insert(inst.question_id).second) {
      throw Error(ErrorCode::DuplicateQuestionId,
                  "line " + std::to_string(line) + ": duplicate question_id " + inst.question_id,
                  line);
    }
    instances.push_back(std::move(inst));
  }
  return Corpus(std::move(instances), std::move(source_tag));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MissingFile, "cannot open corpus file " + path.string());
  }
  return read_corpus(in, path.filename().string());
}

std::string serialize_instance(const QAInstance& instance) {
  detail::ordered_json j;
  j["question_id"] = instance.question_id;
  j["question"] = instance.question;
  j["passages"] = detail::passages_to_json(instance.passages);
  j["gold_answer_groups"] = instance.gold_answer_groups;
  j["gold_long_answer"] = instance.gold_long_answer
                              ? detail::ordered_json(*instance.gold_long_answer)
                              : detail::ordered_json(nullptr);
  return j.dump();
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& inst : corpus.instances()) out << serialize_instance(inst) << '\n';
}

QAInstance inject_noise(const Corpus& corpus, std::string_view target_id, std::uint64_t seed) {
  const QAInstance& target = corpus.at(target_id);

  std::unordered_set<std::string> own_ids;
  std::unordered_set<std::string> own_bodies;
  for (const auto& p : target.passages) {
    own_ids.insert(p.id);
    own_bodies.insert(p.body);
  }

  // Donor pool: every passage of every other instance, in corpus order,
  // minus anything that duplicates one of the target's passages.
  std::vector<const Passage*> pool;
  for (const auto& inst : corpus.instances()) {
    if (inst.question_id == target.question_id) continue;
    for (const auto& p : inst.passages) {
      if (own_ids.contains(p.id) || own_bodies.contains(p.body)) continue;
      pool.push_back(&p);
    }
  }
  if (pool.empty()) {
    throw Error(ErrorCode::NoDistractorAvailable,
                "no distractor passage available for " + target.question_id);
  }

  DeterministicRng rng(seed);
  const std::size_t position = rng.below(target.passages.size());
  const std::size_t donor = rng.below(pool.size());

  QAInstance out = target;
  out.passages[position] = *pool[donor];
  return out;
}

}  // namespace citeforge
