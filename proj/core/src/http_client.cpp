#include "http_client.hpp"

#include <httplib.h>

#include <thread>

namespace citeforge {

HttpEndpoint HttpEndpoint::parse(std::string_view url) {
  constexpr std::string_view kScheme = "http://";
  if (url.substr(0, kScheme.size()) != kScheme) {
    throw Error(ErrorCode::InvalidConfig,
                "unsupported URL '" + std::string(url) + "': only http:// is supported");
  }
  std::string_view rest = url.substr(kScheme.size());
  HttpEndpoint ep;
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  if (slash != std::string_view::npos) {
    std::string_view path = rest.substr(slash);
    while (!path.empty() && path.back() == '/') path.remove_suffix(1);
    ep.path_prefix = std::string(path);
  }
  const auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    const auto port_str = std::string(authority.substr(colon + 1));
    try {
      std::size_t used = 0;
      ep.port = std::stoi(port_str, &used);
      if (used != port_str.size() || ep.port <= 0 || ep.port > 65535) throw std::out_of_range("");
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "invalid port in URL '" + std::string(url) + "'");
    }
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) {
    throw Error(ErrorCode::InvalidConfig, "missing host in URL '" + std::string(url) + "'");
  }
  ep.host = std::string(authority);
  return ep;
}

std::string HttpEndpoint::origin() const {
  return "http://" + host + ":" + std::to_string(port);
}

namespace detail {

std::string post_json(const HttpEndpoint& endpoint, const std::string& route,
                      const std::string& body, const RetryPolicy& retry,
                      ErrorCode unavailable) {
  httplib::Client client(endpoint.host, endpoint.port);
  client.set_connection_timeout(retry.connect_timeout);
  client.set_read_timeout(retry.read_timeout);
  const std::string path = endpoint.path_prefix + route;

  std::string last_error = "no attempts made";
  auto backoff = retry.initial_backoff;
  for (int attempt = 0; attempt < retry.attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    if (res->status >= 400 && res->status < 500) {
      throw Error(ErrorCode::RemoteProtocolError,
                  endpoint.origin() + path + " returned HTTP " + std::to_string(res->status) +
                      ": " + res->body);
    }
    last_error = "HTTP " + std::to_string(res->status);
  }
  throw Error(unavailable, endpoint.origin() + path + " unavailable after " +
                               std::to_string(retry.attempts) + " attempts: " + last_error);
}

}  // namespace detail
}  // namespace citeforge
