#include "mixrl/curation.hpp"

#include <algorithm>
#include <stdexcept>

#include "mixrl/text.hpp"

namespace mixrl::curation {

bool detect_aha(std::string_view text) {
  const std::string lowered = text::to_lower(text);
  return std::any_of(kAhaKeywords.begin(), kAhaKeywords.end(),
                     [&](std::string_view k) { return text::contains(lowered, k); });
}

Split split_sft_rl(std::vector<SampleRecord> samples) {
  Split out;
  for (auto& s : samples) (detect_aha(s.reasoning) ? out.rl : out.sft).push_back(std::move(s));
  return out;
}

double mean_answer_ppl(const SampleRecord& sample, const LmScorer& first, const LmScorer& second) {
  return 0.5 * (first.perplexity(sample.answer) + second.perplexity(sample.answer));
}

std::vector<SampleRecord> filter_by_ppl(const std::vector<SampleRecord>& samples, const LmScorer& first,
                                        const LmScorer& second, std::size_t keep_n) {
  keep_n = std::min(keep_n, samples.size());
  struct Ranked {
    double ppl;
    const SampleRecord* sample;
  };
  std::vector<Ranked> ranked;
  ranked.reserve(samples.size());
  for (const auto& s : samples) ranked.push_back({mean_answer_ppl(s, first, second), &s});
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.ppl != b.ppl) return a.ppl > b.ppl;
    return a.sample->id < b.sample->id;
  });
  std::vector<SampleRecord> kept;
  kept.reserve(keep_n);
  for (std::size_t i = 0; i < keep_n; ++i) kept.push_back(*ranked[i].sample);
  return kept;
}

bool length_gap_filter(std::string_view original, std::string_view rewritten, std::size_t max_gap) {
  const auto a = text::word_count(original);
  const auto b = text::word_count(rewritten);
  return (a > b ? a - b : b - a) <= max_gap;
}

}  // namespace mixrl::curation
