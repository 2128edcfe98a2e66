#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mixrl/sample_record.hpp"

namespace mixrl::curation {

// Self-reflection cues; matching is a raw substring test on lowercased text,
// so "check" also fires inside "checking".
inline constexpr std::array<std::string_view, 8> kAhaKeywords = {
    "wait", "again", "double-check", "hmm", "mistake", "alternatively", "check", "i should confirm"};

bool detect_aha(std::string_view text);

struct Split {
  std::vector<SampleRecord> sft;  // no aha cue in the reasoning
  std::vector<SampleRecord> rl;   // at least one aha cue
};

// Order-preserving partition on detect_aha(reasoning).
Split split_sft_rl(std::vector<SampleRecord> samples);

// Perplexity oracle for answers.
class LmScorer {
 public:
  virtual ~LmScorer() = default;
  // Throws std::invalid_argument on text with no tokens.
  virtual double perplexity(std::string_view text) const = 0;
};

// Add-one smoothed n-gram model over whitespace tokens. Contexts are padded
// with n-1 start markers; V is the number of distinct training tokens.
//   p(w | h) = (c(h, w) + 1) / (c(h) + V)
class NgramModel final : public LmScorer {
 public:
  NgramModel(int order, std::map<std::vector<std::string>, std::size_t> ngram_counts,
             std::map<std::vector<std::string>, std::size_t> context_counts, std::size_t vocab_size);

  double perplexity(std::string_view text) const override;
  double log_prob(const std::vector<std::string>& context, const std::string& word) const;

  int order() const { return order_; }
  std::size_t vocab_size() const { return vocab_size_; }

 private:
  int order_;
  std::map<std::vector<std::string>, std::size_t> ngram_counts_;
  std::map<std::vector<std::string>, std::size_t> context_counts_;
  std::size_t vocab_size_;
};

// Throws std::invalid_argument for order outside {1,2,3} or an empty corpus.
std::unique_ptr<NgramModel> ngram_train(const std::vector<std::string>& corpus, int order);

// Keeps the keep_n (at most all) samples whose answers have the highest mean perplexity under
// the two scorers; ties go to the lexicographically smaller id. Output is in
// ranking order (highest first).
std::vector<SampleRecord> filter_by_ppl(const std::vector<SampleRecord>& samples, const LmScorer& first,
                                        const LmScorer& second, std::size_t keep_n);

// Mean of the two perplexities of sample.answer.
double mean_answer_ppl(const SampleRecord& sample, const LmScorer& first, const LmScorer& second);

inline constexpr std::size_t kDefaultMaxWordGap = 15;

// Keep iff the whitespace word counts differ by at most max_gap.
bool length_gap_filter(std::string_view original, std::string_view rewritten,
                       std::size_t max_gap = kDefaultMaxWordGap);

}  // namespace mixrl::curation
