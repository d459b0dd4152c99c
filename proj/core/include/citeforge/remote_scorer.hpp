#pragma once

#include <string_view>

#include "citeforge/remote.hpp"
#include "citeforge/scoring.hpp"

namespace citeforge {

/// Client for a scoring service speaking
///   POST /v1/consistency {"claim", "source"}     -> {"score": float}
///   POST /v1/relevance   {"question", "passage"} -> {"relevant": bool}
/// Transport failures surface as RemoteScorerUnavailable once the retry
/// policy is exhausted; schema violations as RemoteProtocolError.
class RemoteScorer final : public ConsistencyScorer, public RelevanceJudge {
 public:
  explicit RemoteScorer(std::string_view base_url, RetryPolicy retry = {});

  ConsistencyScore score(std::string_view claim, std::string_view source) const override;
  bool judge(std::string_view question, std::string_view passage) const override;

  const HttpEndpoint& endpoint() const noexcept { return endpoint_; }

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
};

}  // namespace citeforge
