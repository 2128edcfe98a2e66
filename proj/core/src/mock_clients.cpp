#include <array>
#include <mutex>

#include "mixrl/pipeline.hpp"
#include "mixrl/text.hpp"

namespace mixrl::pipeline {

namespace {

constexpr std::array<std::string_view, 4> kCannedCaptions = {
    "A tabletop scene with several small geometric objects in different colors.",
    "A diagram with labeled points, line segments and a marked angle.",
    "A chart with labeled axes and a handful of bars of different heights.",
    "A photograph of an everyday indoor scene with a few clearly visible objects.",
};

std::string_view id_of(const Request& req) {
  auto slash = req.request_id.find('/');
  return slash == std::string::npos ? std::string_view(req.request_id)
                                    : std::string_view(req.request_id).substr(slash + 1);
}

std::string normalize(std::string_view s) {
  std::string out;
  for (auto w : text::split_whitespace(text::to_lower(s))) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  while (!out.empty() && (out.back() == '.' || out.back() == '!')) out.pop_back();
  return out;
}

}  // namespace

struct MockModelClient::FlakyState {
  std::mutex mutex;
  std::set<std::string> tripped;  // request ids that already failed once
};

MockModelClient::MockModelClient(MockOptions options)
    : options_(std::move(options)), flaky_(std::make_shared<FlakyState>()) {}

void MockModelClient::maybe_fail(const Request& req) {
  std::string id(id_of(req));
  if (options_.failing_ids.count(id)) throw ClientError("mock failure for " + req.request_id, false);
  if (options_.flaky_ids.count(id)) {
    std::lock_guard lock(flaky_->mutex);
    if (flaky_->tripped.insert(req.request_id).second) {
      throw ClientError("transient mock failure for " + req.request_id, true);
    }
  }
}

std::string MockModelClient::caption(const Request& req, std::string_view image_ref) {
  maybe_fail(req);
  return std::string(kCannedCaptions[text::fnv1a(image_ref) % kCannedCaptions.size()]);
}

Distillation MockModelClient::distill(const Request& req, std::string_view caption, std::string_view question,
                                      std::string_view extra) {
  maybe_fail(req);
  std::string reasoning = "The question asks: " + std::string(text::trim(question)) + " ";
  if (!caption.empty()) reasoning += "The caption describes: " + std::string(text::trim(caption)) + " ";
  if (text::fnv1a(id_of(req)) % 3 == 0) reasoning += std::string(kMockAhaPhrase) + " ";
  reasoning += "So the answer follows.";
  return {reasoning, std::string(extra)};
}

std::string MockModelClient::rewrite(const Request& req, std::string_view input) {
  maybe_fail(req);
  std::string out(input);
  if (options_.inflate_ids.count(std::string(id_of(req)))) {
    // Padding goes inside the think block so the answer region is untouched.
    auto close = out.find("</think>");
    std::string pad;
    for (std::size_t i = 0; i < options_.inflate_words; ++i) pad += " indeed";
    out.insert(close == std::string::npos ? out.size() : close, pad);
  }
  return out;
}

std::string MockModelClient::verify(const Request& req, std::string_view gold, std::string_view pred) {
  maybe_fail(req);
  if (options_.reject_ids.count(std::string(id_of(req)))) return "No";
  return normalize(gold) == normalize(pred) ? "Yes" : "No";
}

}  // namespace mixrl::pipeline
