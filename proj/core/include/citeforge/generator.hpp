#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "citeforge/corpus.hpp"
#include "citeforge/remote.hpp"

namespace citeforge {

enum class GenerationMode { AttemptOnly, FullChain, CorrectionGivenReflection };

/// Wire names: "attempt_only", "full_chain", "correction_given_reflection".
std::string_view to_string(GenerationMode mode) noexcept;
std::optional<GenerationMode> parse_generation_mode(std::string_view s) noexcept;

/// Summed log-probabilities of each behavior's tokens.
struct BehaviorLogprobs {
  double attempt = 0.0;
  double reflection = 0.0;
  double correction = 0.0;
  bool operator==(const BehaviorLogprobs&) const = default;
};

struct GeneratorRequest {
  std::string question_id;
  std::string question;
  std::vector<Passage> passages;
  GenerationMode mode = GenerationMode::FullChain;
  bool return_logprobs = false;
  // Only meaningful in CorrectionGivenReflection mode.
  std::string attempt;
  std::string reflection;
  // Sampling seed for generators that honor one; not sent over the wire.
  std::uint64_t seed = 0;
};

struct GeneratorResponse {
  std::string text;
  std::optional<BehaviorLogprobs> logprobs;

  /// Throws MalformedRecord if the text is empty or a log-probability is
  /// non-finite or positive.
  void validate() const;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual GeneratorResponse generate(const GeneratorRequest& request) const = 0;
};

/// JSON body for POST /v1/generate.
std::string encode_generate_request(const GeneratorRequest& request);
GeneratorResponse decode_generate_response(std::string_view body);

/// Scripted generator: responses keyed by (question_id, mode). An unscripted
/// request throws GeneratorUnavailable.
///
/// Script files hold one JSON object per line:
///   {"question_id": str, "mode": str, "text": str, "logprobs": {...} | null}
class MockGenerator final : public Generator {
 public:
  MockGenerator() = default;

  static MockGenerator load(const std::filesystem::path& path);
  static MockGenerator read(std::istream& in);

  void add(std::string question_id, GenerationMode mode, GeneratorResponse response);
  std::size_t size() const noexcept { return script_.size(); }
  void write(std::ostream& out) const;

  GeneratorResponse generate(const GeneratorRequest& request) const override;

 private:
  std::map<std::pair<std::string, GenerationMode>, GeneratorResponse> script_;
};

/// HTTP client for POST /v1/generate. Transport failures surface as
/// GeneratorUnavailable once the retry policy is exhausted.
class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(std::string_view base_url, RetryPolicy retry = {});
  GeneratorResponse generate(const GeneratorRequest& request) const override;

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
};

}  // namespace citeforge
