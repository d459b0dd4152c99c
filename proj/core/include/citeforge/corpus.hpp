#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace citeforge {

struct Passage {
  std::string id;
  std::string title;
  std::string body;

  bool operator==(const Passage&) const = default;
};

/// A question with its retrieved passages (positions 1..m) and the gold
/// short-answer alias groups.
struct QAInstance {
  std::string question_id;
  std::string question;
  std::vector<Passage> passages;
  std::vector<std::vector<std::string>> gold_answer_groups;
  std::optional<std::string> gold_long_answer;

  std::size_t passage_count() const noexcept { return passages.size(); }
  /// 1-based passage access; throws InvalidCitation when out of range.
  const Passage& passage(int index) const;

  bool operator==(const QAInstance&) const = default;
};

/// Immutable, validated collection of instances with unique question ids.
class Corpus {
 public:
  Corpus() = default;
  /// Validates every instance; throws Error on the first violation.
  Corpus(std::vector<QAInstance> instances, std::string source_tag);

  const std::vector<QAInstance>& instances() const noexcept { return instances_; }
  const std::string& source_tag() const noexcept { return source_tag_; }
  std::size_t size() const noexcept { return instances_.size(); }

  const QAInstance* find(std::string_view question_id) const;
  /// Throws UnknownQuestionId.
  const QAInstance& at(std::string_view question_id) const;

 private:
  std::vector<QAInstance> instances_;
  std::string source_tag_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Checks the per-instance invariants (non-empty passages and bodies, unique
/// passage ids, non-empty aliases). Throws Error; `line` is attached if given.
void validate_instance(const QAInstance& instance,
                       std::optional<std::size_t> line = std::nullopt);

/// Reads line-delimited JSON records. Blank lines are skipped but still count
/// toward line numbers in error messages.
Corpus read_corpus(std::istream& in, std::string source_tag);
Corpus load_corpus(const std::filesystem::path& path);

/// One JSON object, no trailing newline. Field order is fixed.
std::string serialize_instance(const QAInstance& instance);
QAInstance parse_instance(std::string_view json_line, std::size_t line = 1);
void write_corpus(const Corpus& corpus, std::ostream& out);

/// Copy of the target instance with one passage position replaced by a
/// passage drawn from another instance. The replaced position and the donor
/// are pure functions of `seed`.
QAInstance inject_noise(const Corpus& corpus, std::string_view target_id,
                        std::uint64_t seed);

}  // namespace citeforge
