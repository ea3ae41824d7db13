#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "behavcal/llm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "json.hpp"

#include "behavcal/error.hpp"

namespace behavcal {

void LlmEndpointConfig::validate() const {
  if (base_url.empty()) throw InvalidArgument("llm endpoint: base_url is required");
  if (model_id.empty()) throw InvalidArgument("llm endpoint: model_id is required");
  if (!(temperature >= 0.0 && temperature <= 1.0)) throw InvalidArgument("llm endpoint: temperature must lie in [0, 1]");
  if (max_retries < 0 || max_retries > 10) throw InvalidArgument("llm endpoint: max_retries must lie in [0, 10]");
  if (timeout.count() <= 0) throw InvalidArgument("llm endpoint: timeout must be positive");
  if (!(rate_limit >= 0.0)) throw InvalidArgument("llm endpoint: rate_limit must be >= 0");
  if (burst < 1 || max_in_flight < 1) throw InvalidArgument("llm endpoint: burst and max_in_flight must be >= 1");
}

std::string_view to_string(LlmErrorKind k) {
  switch (k) {
    case LlmErrorKind::none: return "none";
    case LlmErrorKind::timeout: return "timeout";
    case LlmErrorKind::auth: return "auth";
    case LlmErrorKind::rate_limited: return "rate_limited";
    case LlmErrorKind::malformed_response: return "malformed_response";
    case LlmErrorKind::server: return "server";
    case LlmErrorKind::network: return "network";
    case LlmErrorKind::request: return "request";
  }
  return "?";
}

namespace {

class HttplibTransport final : public Transport {
 public:
  explicit HttplibTransport(std::string base_url) : base_url_(std::move(base_url)) {}

  HttpResponse post(const HttpRequest& req) override {
    httplib::Client cli(base_url_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(req.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(req.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    for (const auto& [k, v] : req.headers) headers.emplace(k, v);
    HttpResponse out;
    auto res = cli.Post(req.path, headers, req.body, "application/json");
    if (!res) {
      const auto err = res.error();
      out.transport_error = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read
                                ? LlmErrorKind::timeout
                                : LlmErrorKind::network;
      out.message = httplib::to_string(err);
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  std::string base_url_;
};

void real_sleep(std::chrono::nanoseconds d) { std::this_thread::sleep_for(d); }

}  // namespace

std::unique_ptr<Transport> make_http_transport(const std::string& base_url) {
  return std::make_unique<HttplibTransport>(base_url);
}

TokenBucket::TokenBucket(double rate, int burst, Sleeper sleeper)
    : rate_(rate),
      capacity_(std::max(1, burst)),
      tokens_(capacity_),
      last_(Clock::now()),
      sleep_(sleeper ? std::move(sleeper) : Sleeper(real_sleep)) {}

void TokenBucket::acquire() {
  if (rate_ <= 0.0) return;
  std::chrono::nanoseconds wait{0};
  {
    std::lock_guard lk(mu_);
    const auto now = Clock::now();
    tokens_ = std::min(capacity_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
    last_ = now;
    tokens_ -= 1.0;
    // A negative balance is a reservation: this caller waits until it is repaid.
    if (tokens_ < 0.0)
      wait = std::chrono::nanoseconds(static_cast<long long>(-tokens_ / rate_ * 1e9));
  }
  if (wait.count() > 0) sleep_(wait);
}

LlmClient::LlmClient(LlmEndpointConfig cfg, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      sleep_(sleeper ? std::move(sleeper) : Sleeper(real_sleep)),
      bucket_(cfg_.rate_limit, cfg_.burst, sleep_) {
  cfg_.validate();
  if (!transport_) throw InvalidArgument("LlmClient: transport is required");
}

std::string LlmClient::request_body(const LlmEndpointConfig& cfg, const std::string& prompt) {
  nlohmann::json j = {{"model", cfg.model_id},
                      {"temperature", cfg.temperature},
                      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
  return j.dump();
}

bool LlmClient::extract_text(const std::string& body, std::string& out) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return false;
  const auto it = j.find("choices");
  if (it == j.end() || !it->is_array() || it->empty()) return false;
  const auto& c = (*it)[0];
  if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string()) {
    out = c["message"]["content"].get<std::string>();
    return true;
  }
  if (c.contains("text") && c["text"].is_string()) {
    out = c["text"].get<std::string>();
    return true;
  }
  return false;
}

LlmResult LlmClient::complete(const std::string& prompt) {
  HttpRequest req;
  req.path = cfg_.path;
  req.body = request_body(cfg_, prompt);
  req.timeout = cfg_.timeout;
  req.headers.emplace_back("Content-Type", "application/json");
  if (const char* tok = std::getenv(cfg_.auth_env.c_str()); tok && *tok)
    req.headers.emplace_back("Authorization", std::string("Bearer ") + tok);

  LlmResult result;
  for (int attempt = 0;; ++attempt) {
    bucket_.acquire();
    const auto res = transport_->post(req);
    result.http_status = res.status;
    bool transient = false;
    if (res.status == 0) {
      result.error = res.transport_error == LlmErrorKind::none ? LlmErrorKind::network : res.transport_error;
      result.message = res.message;
      transient = true;
    } else if (res.status == 401 || res.status == 403) {
      result.error = LlmErrorKind::auth;
      result.message = "HTTP " + std::to_string(res.status);
    } else if (res.status == 429) {
      result.error = LlmErrorKind::rate_limited;
      result.message = "HTTP 429";
      transient = true;
    } else if (res.status == 408 || res.status >= 500) {
      result.error = res.status == 408 ? LlmErrorKind::timeout : LlmErrorKind::server;
      result.message = "HTTP " + std::to_string(res.status);
      transient = true;
    } else if (res.status < 200 || res.status >= 300) {
      result.error = LlmErrorKind::request;
      result.message = "HTTP " + std::to_string(res.status);
    } else if (std::string text; extract_text(res.body, text)) {
      result.ok = true;
      result.text = std::move(text);
      result.error = LlmErrorKind::none;
      result.message.clear();
      return result;
    } else {
      result.error = LlmErrorKind::malformed_response;
      result.message = "response has no completion text";
    }
    if (!transient || attempt >= cfg_.max_retries) return result;
    ++result.retries;
    const double factor = std::pow(2.0, attempt);
    const auto delay = std::min<double>(cfg_.backoff_max.count(), cfg_.backoff_base.count() * factor);
    sleep_(std::chrono::milliseconds(static_cast<long long>(delay)));
  }
}

LlmResult respond_llm(const LlmEndpointConfig& cfg, const std::string& prompt) {
  LlmClient client(cfg, make_http_transport(cfg.base_url));
  return client.complete(prompt);
}

}  // namespace behavcal
