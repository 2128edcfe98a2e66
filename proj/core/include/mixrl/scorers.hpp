#pragma once

#include <map>
#include <memory>
#include <string>

#include "mixrl/reward.hpp"

namespace mixrl::reward {

// Looks answers up in a fixed table (trimmed text); unknown answers score `fallback`.
class TableScorer final : public ScorerClient {
 public:
  TableScorer() = default;
  explicit TableScorer(std::map<std::string, double> table, double fallback = 0.0);

  void set(std::string answer, double score);
  double score(const ScoringContext& context, std::string_view answer) override;
  bool thread_safe() const override { return true; }

 private:
  std::map<std::string, double> table_;
  double fallback_ = 0.0;
};

// Deterministic pseudo-score in [0, scale) from an FNV-1a hash of question and answer.
class HashScorer final : public ScorerClient {
 public:
  explicit HashScorer(double scale = 10.0) : scale_(scale) {}
  double score(const ScoringContext& context, std::string_view answer) override;
  bool thread_safe() const override { return true; }

 private:
  double scale_;
};

// Remote scorer: POST {"role": "score", "question", "image", "answer"} and
// read {"score": number}. Transport or protocol problems raise ScorerError.
class HttpScorer final : public ScorerClient {
 public:
  explicit HttpScorer(std::string url, double timeout_s = 60.0);
  ~HttpScorer() override;

  double score(const ScoringContext& context, std::string_view answer) override;
  bool thread_safe() const override { return true; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mixrl::reward
