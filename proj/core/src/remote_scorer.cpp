#include "citeforge/remote_scorer.hpp"

#include <json.hpp>

#include <cmath>

#include "http_client.hpp"

namespace citeforge {
namespace {

nlohmann::json parse_response(const std::string& body, const char* route) {
  try {
    auto j = nlohmann::json::parse(body);
    if (!j.is_object()) throw std::runtime_error("not an object");
    return j;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::RemoteProtocolError,
                std::string(route) + ": malformed response body: " + e.what());
  }
}

}  // namespace

RemoteScorer::RemoteScorer(std::string_view base_url, RetryPolicy retry)
    : endpoint_(HttpEndpoint::parse(base_url)), retry_(retry) {}

ConsistencyScore RemoteScorer::score(std::string_view claim, std::string_view source) const {
  nlohmann::json req = {{"claim", claim}, {"source", source}};
  auto j = parse_response(detail::post_json(endpoint_, "/v1/consistency", req.dump(), retry_,
                                            ErrorCode::RemoteScorerUnavailable),
                          "/v1/consistency");
  auto it = j.find("score");
  if (it == j.end() || !it->is_number()) {
    throw Error(ErrorCode::RemoteProtocolError, "/v1/consistency: missing numeric 'score'");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    throw Error(ErrorCode::RemoteProtocolError,
                "/v1/consistency: score outside [0, 1]: " + std::to_string(v));
  }
  return ConsistencyScore(v);
}

bool RemoteScorer::judge(std::string_view question, std::string_view passage) const {
  nlohmann::json req = {{"question", question}, {"passage", passage}};
  auto j = parse_response(detail::post_json(endpoint_, "/v1/relevance", req.dump(), retry_,
                                            ErrorCode::RemoteScorerUnavailable),
                          "/v1/relevance");
  auto it = j.find("relevant");
  if (it == j.end() || !it->is_boolean()) {
    throw Error(ErrorCode::RemoteProtocolError, "/v1/relevance: missing boolean 'relevant'");
  }
  return it->get<bool>();
}

}  // namespace citeforge
