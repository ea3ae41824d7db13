#pragma once

// Chat-completion client for external model endpoints: bounded retries with
// exponential backoff, token-bucket rate limiting, and distinct error kinds.
// The HTTP layer sits behind `Transport` so tests can substitute a stub.

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace behavcal {

struct LlmEndpointConfig {
  std::string base_url;                       // e.g. https://api.example.com
  std::string path = "/v1/chat/completions";
  std::string model_id;
  double temperature = 0.7;                   // [0, 1]
  int max_retries = 3;                        // [0, 10]
  std::chrono::milliseconds timeout{60'000};
  double rate_limit = 1.0;                    // requests per second; 0 = unlimited
  int burst = 1;
  int max_in_flight = 4;
  std::string auth_env = "BEHAVCAL_API_KEY";  // token is read from this variable only
  std::chrono::milliseconds backoff_base{500};
  std::chrono::milliseconds backoff_max{30'000};

  void validate() const;
};

enum class LlmErrorKind { none, timeout, auth, rate_limited, malformed_response, server, network, request };
std::string_view to_string(LlmErrorKind k);

struct HttpRequest {
  std::string path;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
  std::chrono::milliseconds timeout{60'000};
};

struct HttpResponse {
  int status = 0;  // 0 when no response arrived
  std::string body;
  LlmErrorKind transport_error = LlmErrorKind::none;  // timeout or network when status == 0
  std::string message;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& req) = 0;
};

// cpp-httplib transport; supports http:// and https:// base URLs.
std::unique_ptr<Transport> make_http_transport(const std::string& base_url);

// Thread-safe token bucket. `acquire` blocks via the supplied sleeper.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;
  using Sleeper = std::function<void(std::chrono::nanoseconds)>;

  TokenBucket(double rate_per_second, int burst, Sleeper sleeper = {});
  void acquire();

 private:
  double rate_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
  Sleeper sleep_;
  std::mutex mu_;
};

struct LlmResult {
  bool ok = false;
  std::string text;
  int retries = 0;
  LlmErrorKind error = LlmErrorKind::none;
  std::string message;
  int http_status = 0;
};

class LlmClient {
 public:
  using Sleeper = std::function<void(std::chrono::nanoseconds)>;

  LlmClient(LlmEndpointConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper = {});

  // One prompt, one completion. The prompt is sent unmodified.
  LlmResult complete(const std::string& prompt);

  const LlmEndpointConfig& config() const { return cfg_; }

  static std::string request_body(const LlmEndpointConfig& cfg, const std::string& prompt);
  // Extracts choices[0].message.content (or choices[0].text).
  static bool extract_text(const std::string& body, std::string& out);

 private:
  LlmEndpointConfig cfg_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleep_;
  TokenBucket bucket_;
};

// Convenience wrapper using the HTTP transport.
LlmResult respond_llm(const LlmEndpointConfig& cfg, const std::string& prompt);

}  // namespace behavcal
