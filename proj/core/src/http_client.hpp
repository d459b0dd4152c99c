#pragma once

#include <string>

#include "citeforge/error.hpp"
#include "citeforge/remote.hpp"

namespace citeforge::detail {

/// POSTs a JSON body, retrying connection failures and 5xx responses with
/// exponential backoff. A 4xx response fails immediately with
/// RemoteProtocolError; exhausting the attempts throws `unavailable`.
std::string post_json(const HttpEndpoint& endpoint, const std::string& route,
                      const std::string& body, const RetryPolicy& retry,
                      ErrorCode unavailable);

}  // namespace citeforge::detail
