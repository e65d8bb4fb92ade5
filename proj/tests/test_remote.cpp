#include <catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include "stylobf/remote.hpp"
#include "support.hpp"

using namespace stylobf;
using nlohmann::json;
using Strings = std::vector<std::string>;

namespace {

// In-process /v1/fill stand-in whose behaviour is chosen per test.
class FakeService {
 public:
  enum class Mode { kHealthy, kShortArity, kBadRequest, kUnavailable, kGarbage };

  explicit FakeService(Mode mode) : mode_(mode) {
    server_.Post("/v1/fill", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      last_request_id_ = req.get_header_value("X-Request-Id");
      switch (mode_) {
        case Mode::kBadRequest:
          res.status = 400;
          res.set_content(R"({"error":"mask index out of range"})", "application/json");
          return;
        case Mode::kUnavailable:
          res.status = 503;
          res.set_content("overloaded", "text/plain");
          return;
        case Mode::kGarbage:
          res.set_content("<html>", "text/html");
          return;
        default:
          break;
      }
      const auto body = json::parse(req.body);
      json replacements = json::array();
      for (const auto& idx : body.at("mask_indices")) {
        replacements.push_back("R" + body.at("tokens")[idx.get<std::size_t>()].get<std::string>());
      }
      if (mode_ == Mode::kShortArity) replacements.erase(replacements.end() - 1);
      res.set_content(json{{"replacements", replacements}, {"model", "fake-mlm"}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeService() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const { return calls_; }
  std::string last_request_id() const { return last_request_id_; }

 private:
  Mode mode_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
  std::string last_request_id_;
};

FillRequest request() {
  FillRequest r;
  r.tokens = {"the", "dog", "runs", "."};
  r.mask_indices = {1, 2};
  return r;
}

RemoteOptions fast_options() {
  RemoteOptions o;
  o.timeout = std::chrono::milliseconds(500);
  o.backoff = std::chrono::milliseconds(5);
  o.retries = 2;
  return o;
}

}  // namespace

TEST_CASE("endpoint parsing") {
  const auto ep = parse_endpoint("http://localhost:8080/api/");
  CHECK(ep.host == "localhost");
  CHECK(ep.port == 8080);
  CHECK(ep.base_path == "/api");
  CHECK(parse_endpoint("example.org").port == 80);
  CHECK_THROWS_AS(parse_endpoint("https://secure"), Error);
  CHECK_THROWS_AS(parse_endpoint("http://host:abc"), Error);
}

TEST_CASE("request body carries tokens and masks only") {
  auto r = request();
  r.tags = {"DT", "NN", "VBZ", "."};
  const auto body = fill_request_body(r);
  CHECK(body["tokens"] == json(r.tokens));
  CHECK(body["mask_indices"] == json(r.mask_indices));
  CHECK_FALSE(body.contains("tags"));
}

TEST_CASE("healthy service returns one replacement per mask") {
  FakeService svc(FakeService::Mode::kHealthy);
  const RemoteGenerator gen(svc.url(), fast_options());
  const auto resp = gen.fill(request());
  CHECK(resp.replacements == Strings{"Rdog", "Rruns"});
  CHECK(resp.generator_id == "fake-mlm");
  CHECK(svc.calls() == 1);
  CHECK_FALSE(svc.last_request_id().empty());
  CHECK(gen.id() == "remote:" + svc.url());
}

TEST_CASE("arity mismatch is a protocol error") {
  FakeService svc(FakeService::Mode::kShortArity);
  try {
    RemoteGenerator(svc.url(), fast_options()).fill(request());
    FAIL("expected FillError");
  } catch (const FillError& e) {
    CHECK(e.code() == ErrorCode::kFillProtocol);
  }
}

TEST_CASE("non-JSON body is a protocol error") {
  FakeService svc(FakeService::Mode::kGarbage);
  try {
    RemoteGenerator(svc.url(), fast_options()).fill(request());
    FAIL("expected FillError");
  } catch (const FillError& e) {
    CHECK(e.code() == ErrorCode::kFillProtocol);
  }
}

TEST_CASE("4xx fails without retrying") {
  FakeService svc(FakeService::Mode::kBadRequest);
  try {
    RemoteGenerator(svc.url(), fast_options()).fill(request());
    FAIL("expected FillError");
  } catch (const FillError& e) {
    CHECK(e.code() == ErrorCode::kFillServer);
    CHECK(e.status() == 400);
  }
  CHECK(svc.calls() == 1);
}

TEST_CASE("5xx is retried then reported") {
  FakeService svc(FakeService::Mode::kUnavailable);
  try {
    RemoteGenerator(svc.url(), fast_options()).fill(request());
    FAIL("expected FillError");
  } catch (const FillError& e) {
    CHECK(e.code() == ErrorCode::kFillServer);
    CHECK(e.status() == 503);
  }
  CHECK(svc.calls() == 3);
}

TEST_CASE("unreachable service times out after all attempts") {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  try {
    remote_fill(request(), parse_endpoint("127.0.0.1:" + std::to_string(port)), fast_options());
    FAIL("expected FillError");
  } catch (const FillError& e) {
    CHECK(e.code() == ErrorCode::kFillTimeout);
    CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
  }
}

TEST_CASE("invalid requests never reach the wire") {
  FakeService svc(FakeService::Mode::kHealthy);
  auto bad = request();
  bad.mask_indices = {7};
  CHECK_THROWS_AS(RemoteGenerator(svc.url(), fast_options()).fill(bad), Error);
  CHECK(svc.calls() == 0);
}

TEST_CASE("remote generator drives obfuscation and is safe across threads") {
  FakeService svc(FakeService::Mode::kHealthy);
  const RemoteGenerator gen(svc.url(), fast_options());
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 5; ++i) ok += gen.fill(request()).replacements.size() == 2;
    });
  }
  for (auto& t : threads) t.join();
  CHECK(ok == 20);
}
