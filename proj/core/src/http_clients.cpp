#include <chrono>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mixrl/pipeline.hpp"
#include "mixrl/reward.hpp"
#include "mixrl/scorers.hpp"

namespace mixrl {

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos || url.compare(0, scheme_end, "http") != 0) {
    throw std::invalid_argument("unsupported endpoint '" + url + "' (expected http://host[:port]/path)");
  }
  auto path_begin = url.find('/', scheme_end + 3);
  Endpoint e;
  e.base = url.substr(0, path_begin);
  e.path = path_begin == std::string::npos ? "/" : url.substr(path_begin);
  if (e.base.size() <= scheme_end + 3) throw std::invalid_argument("endpoint '" + url + "' has no host");
  return e;
}

// One connection per request keeps concurrent callers independent.
// Returns the parsed body or an error description.
std::variant<nlohmann::json, std::string> post_json(const Endpoint& ep, double timeout_s,
                                                    const nlohmann::json& body) {
  httplib::Client cli(ep.base);
  auto timeout = std::chrono::duration<double>(timeout_s);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  auto res = cli.Post(ep.path, body.dump(), "application/json");
  if (!res) return "request to " + ep.base + ep.path + " failed: " + httplib::to_string(res.error());
  if (res->status != 200) return "HTTP " + std::to_string(res->status) + " from " + ep.base + ep.path;
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error&) {
    return "malformed JSON from " + ep.base + ep.path;
  }
}

}  // namespace

namespace pipeline {

struct HttpModelClient::Impl {
  Endpoint endpoint;
  double timeout_s;
};

HttpModelClient::HttpModelClient(std::string url, double timeout_s)
    : impl_(std::make_unique<Impl>(Impl{parse_url(url), timeout_s})) {}

HttpModelClient::~HttpModelClient() = default;

std::string HttpModelClient::post(std::string_view role, const Request& req) {
  nlohmann::json body{{"role", role}, {"prompt", req.prompt}, {"request_id", req.request_id}};
  auto reply = post_json(impl_->endpoint, impl_->timeout_s, body);
  // Transport errors and non-200s are worth another attempt.
  if (auto* err = std::get_if<std::string>(&reply)) throw ClientError(*err, true);
  const auto& j = std::get<nlohmann::json>(reply);
  auto it = j.find("text");
  if (it == j.end() || !it->is_string()) throw ClientError("response has no \"text\" string", false);
  return it->get<std::string>();
}

std::string HttpModelClient::caption(const Request& req, std::string_view) { return post("caption", req); }

Distillation HttpModelClient::distill(const Request& req, std::string_view, std::string_view, std::string_view) {
  auto text = post("distill", req);
  auto ext = reward::extract_structured_answer(text, TaskKind::OpenEnded);
  if (!ext.ok()) throw ClientError("distillation reply is not <think>...</think> answer", false);
  return {ext.think.value_or(""), ext.answer};
}

std::string HttpModelClient::rewrite(const Request& req, std::string_view) { return post("rewrite", req); }

std::string HttpModelClient::verify(const Request& req, std::string_view, std::string_view) {
  return post("verify", req);
}

}  // namespace pipeline

namespace reward {

struct HttpScorer::Impl {
  Endpoint endpoint;
  double timeout_s;
};

HttpScorer::HttpScorer(std::string url, double timeout_s)
    : impl_(std::make_unique<Impl>(Impl{parse_url(url), timeout_s})) {}

HttpScorer::~HttpScorer() = default;

double HttpScorer::score(const ScoringContext& context, std::string_view answer) {
  nlohmann::json body{
      {"role", "score"}, {"question", context.question}, {"image", context.image_ref}, {"answer", answer}};
  auto reply = post_json(impl_->endpoint, impl_->timeout_s, body);
  if (auto* err = std::get_if<std::string>(&reply)) throw ScorerError(*err);
  const auto& j = std::get<nlohmann::json>(reply);
  auto it = j.find("score");
  if (it == j.end() || !it->is_number()) throw ScorerError("response has no numeric \"score\"");
  return it->get<double>();
}

}  // namespace reward
}  // namespace mixrl
