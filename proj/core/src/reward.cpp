#include "mixrl/reward.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "mixrl/mathverify.hpp"
#include "mixrl/parallel.hpp"
#include "mixrl/text.hpp"

namespace mixrl::reward {

namespace {
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_word_char(char c) { return is_digit(c) || is_alpha(c) || c == '_'; }
}  // namespace

double SerializedScorer::score(const ScoringContext& context, std::string_view answer) {
  std::lock_guard lock(mutex_);
  return inner_.score(context, answer);
}

Extraction extract_structured_answer(std::string_view raw, TaskKind /*task*/) {
  Extraction out;
  auto open = raw.find(kThinkOpen);
  auto close = raw.find(kThinkClose);
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return out;
  if (raw.find(kThinkOpen, open + 1) != std::string_view::npos ||
      raw.find(kThinkClose, close + 1) != std::string_view::npos) {
    return out;
  }
  auto answer = text::trim(raw.substr(close + kThinkClose.size()));
  if (answer.empty()) return out;
  auto think_begin = open + kThinkOpen.size();
  out.think = std::string(text::trim(raw.substr(think_begin, close - think_begin)));
  out.answer = std::string(answer);
  out.status = ExtractionStatus::Ok;
  return out;
}

std::optional<std::int64_t> last_integer(std::string_view s) {
  std::optional<std::int64_t> last;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    std::size_t end = i;
    bool glued_before = start > 0 && (is_word_char(s[start - 1]) || s[start - 1] == '.');
    bool glued_after = end < s.size() && (is_word_char(s[end]) ||
                                          (s[end] == '.' && end + 1 < s.size() && is_digit(s[end + 1])));
    if (glued_before || glued_after) continue;
    bool negative = start > 0 && s[start - 1] == '-' && (start < 2 || !is_word_char(s[start - 2]));
    std::int64_t v = 0;
    auto res = std::from_chars(s.data() + start, s.data() + end, v);
    if (res.ec != std::errc{}) continue;
    last = negative ? -v : v;
  }
  return last;
}

double reward_digit(std::string_view answer, std::int64_t gold) {
  auto v = last_integer(answer);
  return v && *v == gold ? 1.0 : 0.0;
}

std::optional<char> extract_option_letter(std::string_view answer) {
  std::optional<char> strong;
  std::optional<char> weak;
  for (auto word : text::split_whitespace(answer)) {
    auto letter = normalize_option_letter(word);
    if (!letter) continue;
    bool bare = word.size() == 1;
    bool is_weak = bare && (is_alpha(word[0]) && (word[0] >= 'a' || word[0] == 'I'));
    (is_weak ? weak : strong) = letter;
  }
  return strong ? strong : weak;
}

double reward_mcq(std::string_view answer, char gold) {
  auto letter = extract_option_letter(answer);
  return letter && *letter == gold ? 1.0 : 0.0;
}

double reward_math(std::string_view answer, std::string_view gold) {
  auto candidate = mathverify::extract_final_expression(answer);
  return mathverify::equivalent(candidate, gold) ? 1.0 : 0.0;
}

std::optional<BBox> parse_bbox(std::string_view s) {
  double coords[4];
  int found = 0;
  std::size_t i = 0;
  while (i < s.size() && found < 4) {
    std::size_t start = i;
    bool sign = (s[i] == '-' || s[i] == '+') && i + 1 < s.size() &&
                (is_digit(s[i + 1]) || (s[i + 1] == '.' && i + 2 < s.size() && is_digit(s[i + 2])));
    bool lead = is_digit(s[i]) || (s[i] == '.' && i + 1 < s.size() && is_digit(s[i + 1]));
    if (!(sign || lead) || (start > 0 && is_alpha(s[start - 1]))) {
      ++i;
      continue;
    }
    const char* first = s.data() + start + (s[start] == '+' ? 1 : 0);
    double v = 0.0;
    auto res = std::from_chars(first, s.data() + s.size(), v);
    if (res.ec != std::errc{}) {
      ++i;
      continue;
    }
    i = static_cast<std::size_t>(res.ptr - s.data());
    if (std::isfinite(v)) coords[found++] = v;
  }
  if (found < 4) return std::nullopt;
  return BBox::make(coords[0], coords[1], coords[2], coords[3]);
}

double iou(const BBox& a, const BBox& b) {
  double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  double inter = iw * ih;
  double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double reward_iou(std::string_view answer, const BBox& gold) {
  auto box = parse_bbox(answer);
  return box ? iou(*box, gold) : 0.0;
}

double open_ended_value(double delta, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigurationError("open-ended beta must be > 0");
  if (!(delta > 0.0)) return 0.0;
  return -std::expm1(-delta * beta);
}

double reward_open_ended(std::string_view candidate, std::string_view reference,
                         const ScoringContext& context, ScorerClient& scorer, double beta) {
  double s_candidate = 0.0;
  double s_reference = 0.0;
  try {
    s_candidate = scorer.score(context, candidate);
    s_reference = scorer.score(context, reference);
  } catch (const ScorerError& e) {
    throw RewardUnavailable(std::string("scorer failed: ") + e.what());
  }
  if (!std::isfinite(s_candidate) || !std::isfinite(s_reference)) {
    throw RewardUnavailable("scorer returned a non-finite score");
  }
  return open_ended_value(s_candidate - s_reference, beta);
}

RewardOutcome mixed_reward(const SampleRecord& sample, std::string_view raw, ScorerClient* scorer,
                           double beta) {
  validate_gold(sample.task, sample.gold);
  if (sample.task == TaskKind::OpenEnded && scorer == nullptr) {
    throw ConfigurationError("open-ended sample '" + sample.id + "' requires a scorer");
  }
  RewardOutcome out;
  out.source = sample.task;
  out.extraction = extract_structured_answer(raw, sample.task);
  if (!out.extraction.ok()) return out;
  const std::string& answer = out.extraction.answer;
  switch (sample.task) {
    case TaskKind::Digit: out.value = reward_digit(answer, std::get<std::int64_t>(sample.gold)); break;
    case TaskKind::Mcq: out.value = reward_mcq(answer, std::get<char>(sample.gold)); break;
    case TaskKind::MathExpr: out.value = reward_math(answer, std::get<std::string>(sample.gold)); break;
    case TaskKind::BBox: out.value = reward_iou(answer, std::get<BBox>(sample.gold)); break;
    case TaskKind::OpenEnded:
      out.value = reward_open_ended(answer, std::get<std::string>(sample.gold),
                                    ScoringContext{sample.question, sample.image_ref}, *scorer, beta);
      break;
  }
  return out;
}

std::vector<BatchItem> mixed_reward_batch(const std::vector<const SampleRecord*>& samples,
                                          const std::vector<std::string>& raws,
                                          ScorerClient* scorer, double beta, std::size_t workers) {
  if (samples.size() != raws.size()) throw std::invalid_argument("samples and raws differ in length");
  std::optional<SerializedScorer> serialized;
  ScorerClient* effective = scorer;
  if (scorer != nullptr && !scorer->thread_safe() && workers > 1) {
    serialized.emplace(*scorer);
    effective = &*serialized;
  }
  std::vector<BatchItem> out(samples.size(), std::string());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    try {
      out[i] = mixed_reward(*samples[i], raws[i], effective, beta);
    } catch (const std::exception& e) {
      out[i] = std::string(e.what());
    }
  });
  return out;
}

}  // namespace mixrl::reward
