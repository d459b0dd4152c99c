#include "citeforge/generator.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "citeforge/error.hpp"
#include "citeforge/text.hpp"
#include "http_client.hpp"
#include "json_util.hpp"

namespace citeforge {
namespace {

std::optional<BehaviorLogprobs> logprobs_from_json(const nlohmann::json& j, std::size_t line) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_object()) {
    throw Error(ErrorCode::MalformedRecord, "logprobs must be an object or null", line);
  }
  return BehaviorLogprobs{detail::require_number(j, "attempt", line),
                          detail::require_number(j, "reflection", line),
                          detail::require_number(j, "correction", line)};
}

detail::ordered_json logprobs_to_json(const std::optional<BehaviorLogprobs>& lp) {
  if (!lp) return nullptr;
  detail::ordered_json j;
  j["attempt"] = lp->attempt;
  j["reflection"] = lp->reflection;
  j["correction"] = lp->correction;
  return j;
}

}  // namespace

std::string_view to_string(GenerationMode mode) noexcept {
  switch (mode) {
    case GenerationMode::AttemptOnly: return "attempt_only";
    case GenerationMode::FullChain: return "full_chain";
    case GenerationMode::CorrectionGivenReflection: return "correction_given_reflection";
  }
  return "full_chain";
}

std::optional<GenerationMode> parse_generation_mode(std::string_view s) noexcept {
  if (s == "attempt_only") return GenerationMode::AttemptOnly;
  if (s == "full_chain") return GenerationMode::FullChain;
  if (s == "correction_given_reflection") return GenerationMode::CorrectionGivenReflection;
  return std::nullopt;
}

void GeneratorResponse::validate() const {
  if (text::trim(text).empty()) {
    throw Error(ErrorCode::MalformedRecord, "generator returned empty text");
  }
  if (logprobs) {
    for (double v : {logprobs->attempt, logprobs->reflection, logprobs->correction}) {
      if (!std::isfinite(v) || v > 0.0) {
        throw Error(ErrorCode::MalformedRecord,
                    "generator log-probability must be finite and <= 0, got " + std::to_string(v));
      }
    }
  }
}

std::string encode_generate_request(const GeneratorRequest& request) {
  detail::ordered_json j;
  j["question"] = request.question;
  j["passages"] = detail::passages_to_json(request.passages);
  j["mode"] = to_string(request.mode);
  j["return_logprobs"] = request.return_logprobs;
  if (request.mode == GenerationMode::CorrectionGivenReflection) {
    j["attempt"] = request.attempt;
    j["reflection"] = request.reflection;
  }
  return j.dump();
}

GeneratorResponse decode_generate_response(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body.begin(), body.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::RemoteProtocolError,
                std::string("/v1/generate: malformed response body: ") + e.what());
  }
  try {
    if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, "response is not an object");
    GeneratorResponse res;
    res.text = detail::require_string(j, "text", 1);
    if (auto it = j.find("logprobs"); it != j.end()) res.logprobs = logprobs_from_json(*it, 1);
    res.validate();
    return res;
  } catch (const Error& e) {
    throw Error(ErrorCode::RemoteProtocolError, std::string("/v1/generate: ") + e.what());
  }
}

MockGenerator MockGenerator::read(std::istream& in) {
  MockGenerator gen;
  std::string buf;
  std::size_t line = 0;
  while (std::getline(in, buf)) {
    ++line;
    if (text::trim(buf).empty()) continue;
    const auto j = detail::parse_json_line(buf, line);
    if (!j.is_object()) throw Error(ErrorCode::MalformedRecord, "script record is not an object", line);
    auto qid = detail::require_string(j, "question_id", line);
    auto mode_str = detail::require_string(j, "mode", line);
    auto mode = parse_generation_mode(mode_str);
    if (!mode) {
      throw Error(ErrorCode::MalformedRecord,
                  "line " + std::to_string(line) + ": unknown mode '" + mode_str + "'", line);
    }
    GeneratorResponse res;
    res.text = detail::require_string(j, "text", line);
    if (auto it = j.find("logprobs"); it != j.end()) res.logprobs = logprobs_from_json(*it, line);
    try {
      res.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line) + ": " + e.what(), line);
    }
    gen.add(std::move(qid), *mode, std::move(res));
  }
  return gen;
}

MockGenerator MockGenerator::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open generator script " + path.string());
  return read(in);
}

void MockGenerator::add(std::string question_id, GenerationMode mode, GeneratorResponse response) {
  script_.insert_or_assign({std::move(question_id), mode}, std::move(response));
}

void MockGenerator::write(std::ostream& out) const {
  for (const auto& [key, res] : script_) {
    detail::ordered_json j;
    j["question_id"] = key.first;
    j["mode"] = to_string(key.second);
    j["text"] = res.text;
    j["logprobs"] = logprobs_to_json(res.logprobs);
    out << j.dump() << '\n';
  }
}

GeneratorResponse MockGenerator::generate(const GeneratorRequest& request) const {
  auto it = script_.find({request.question_id, request.mode});
  if (it == script_.end()) {
    throw Error(ErrorCode::GeneratorUnavailable,
                "no scripted response for " + request.question_id + " in mode " +
                    std::string(to_string(request.mode)));
  }
  GeneratorResponse res = it->second;
  if (!request.return_logprobs) res.logprobs.reset();
  return res;
}

RemoteGenerator::RemoteGenerator(std::string_view base_url, RetryPolicy retry)
    : endpoint_(HttpEndpoint::parse(base_url)), retry_(retry) {}

GeneratorResponse RemoteGenerator::generate(const GeneratorRequest& request) const {
  const auto body = detail::post_json(endpoint_, "/v1/generate", encode_generate_request(request),
                                      retry_, ErrorCode::GeneratorUnavailable);
  return decode_generate_response(body);
}

}  // namespace citeforge
