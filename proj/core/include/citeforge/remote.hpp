#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace citeforge {

/// Parsed `http://host[:port][/prefix]` base URL.
struct HttpEndpoint {
  std::string host;
  int port = 80;
  std::string path_prefix;  // no trailing slash; empty for root

  /// Throws InvalidConfig on anything but a plain http URL.
  static HttpEndpoint parse(std::string_view url);
  std::string origin() const;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::milliseconds connect_timeout{2000};
  std::chrono::milliseconds read_timeout{30000};
};

/// Environment variable consulted for the scorer base URL.
inline constexpr const char* kScorerUrlEnv = "CITEFORGE_SCORER_URL";

}  // namespace citeforge
