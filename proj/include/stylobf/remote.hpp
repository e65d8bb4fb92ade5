#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
// <resolv.h> defines _res as a macro, which collides with Eigen parameter names.
#ifdef _res
#undef _res
#endif
#include <json.hpp>

#include "replace.hpp"

namespace stylobf {

struct RemoteOptions {
  std::chrono::milliseconds timeout{5000};
  int retries = 2;
  std::chrono::milliseconds backoff{100};  // doubled after every failed attempt
  int max_in_flight = 8;
};

struct Endpoint {
  std::string host;
  int port = 80;
  std::string base_path;
};

// Accepts "http://host[:port][/prefix]" or "host:port".
inline Endpoint parse_endpoint(std::string_view url) {
  std::string rest(url);
  if (rest.starts_with("https://")) throw Error(ErrorCode::kInvalidArgument, "https endpoints are not supported");
  if (rest.starts_with("http://")) rest = rest.substr(7);
  Endpoint ep;
  const auto slash = rest.find('/');
  if (slash != std::string::npos) {
    ep.base_path = rest.substr(slash);
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
    rest = rest.substr(0, slash);
  }
  const auto colon = rest.rfind(':');
  if (colon != std::string::npos) {
    try {
      ep.port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidArgument, "bad port in endpoint '" + std::string(url) + "'");
    }
    rest = rest.substr(0, colon);
  }
  if (rest.empty()) throw Error(ErrorCode::kInvalidArgument, "endpoint has no host");
  ep.host = rest;
  return ep;
}

inline nlohmann::json fill_request_body(const FillRequest& req) {
  return {{"tokens", req.tokens}, {"mask_indices", req.mask_indices}};
}

// Parses a 200 response body and checks it against the request.
inline FillResponse parse_fill_response(const FillRequest& req, std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw FillError(ErrorCode::kFillProtocol, "response is not JSON");
  }
  if (!j.is_object() || !j.contains("replacements") || !j["replacements"].is_array()) {
    throw FillError(ErrorCode::kFillProtocol, "missing replacements array");
  }
  FillResponse resp;
  for (const auto& r : j["replacements"]) {
    if (!r.is_string()) throw FillError(ErrorCode::kFillProtocol, "replacement is not a string");
    resp.replacements.push_back(r.get<std::string>());
  }
  resp.generator_id = j.contains("model") && j["model"].is_string() ? j["model"].get<std::string>() : "remote";
  validate_fill(req, resp);
  return resp;
}

// POST /v1/fill with bounded retries. Connection failures and timeouts retry with
// exponential backoff and end in Timeout; 5xx retries and ends in ServerError;
// 4xx and malformed bodies fail immediately.
inline FillResponse remote_fill(const FillRequest& req, const Endpoint& ep, const RemoteOptions& opt,
                                std::string_view correlation_id = {}) {
  req.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::string body = fill_request_body(req).dump();
  const std::string path = ep.base_path + "/v1/fill";
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opt.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opt.timeout - secs);

  int last_status = 0;
  std::string last_error;
  auto delay = opt.backoff;
  const int attempts = std::max(0, opt.retries) + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client client(ep.host, ep.port);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!correlation_id.empty()) headers.emplace("X-Request-Id", std::string(correlation_id));
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      auto resp = parse_fill_response(req, res->body);
      resp.latency = std::chrono::steady_clock::now() - start;
      return resp;
    }
    last_status = res->status;
    last_error = res->body;
    if (res->status < 500) break;
  }
  if (last_status == 0) {
    throw FillError(ErrorCode::kFillTimeout,
                    "no response after " + std::to_string(attempts) + " attempts (" + last_error + ")");
  }
  throw FillError(ErrorCode::kFillServer, "status " + std::to_string(last_status) + ": " + last_error, last_status);
}

class RemoteGenerator final : public ReplacementGenerator {
 public:
  RemoteGenerator(std::string url, RemoteOptions opt = {})
      : url_(std::move(url)),
        endpoint_(parse_endpoint(url_)),
        opt_(opt),
        slots_(std::make_unique<std::counting_semaphore<>>(std::max(1, opt.max_in_flight))) {}

  std::string id() const override { return "remote:" + url_; }

  FillResponse fill(const FillRequest& req) const override {
    slots_->acquire();
    struct Release {
      std::counting_semaphore<>* s;
      ~Release() { s->release(); }
    } release{slots_.get()};
    return remote_fill(req, endpoint_, opt_, std::to_string(next_id_.fetch_add(1)));
  }

 private:
  std::string url_;
  Endpoint endpoint_;
  RemoteOptions opt_;
  std::unique_ptr<std::counting_semaphore<>> slots_;
  mutable std::atomic<std::uint64_t> next_id_{1};
};

}  // namespace stylobf
