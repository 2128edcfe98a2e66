#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mixrl::grpo {

// One row of logits per query.
using ParamTable = std::vector<std::vector<double>>;

// Tabular softmax policy over a fixed candidate set per query. The same type
// holds the current, old and reference snapshots.
class SoftmaxPolicy {
 public:
  SoftmaxPolicy() = default;
  explicit SoftmaxPolicy(ParamTable logits);

  static SoftmaxPolicy uniform(std::span<const std::size_t> candidates_per_query);

  std::size_t num_queries() const { return logits_.size(); }
  std::size_t num_candidates(std::size_t query) const { return logits_.at(query).size(); }

  const ParamTable& logits() const { return logits_; }
  std::span<const double> logits(std::size_t query) const { return logits_.at(query); }

  // softmax(logits / temperature), computed with log-sum-exp.
  std::vector<double> probs(std::size_t query, double temperature = 1.0) const;
  std::vector<double> log_probs(std::size_t query, double temperature = 1.0) const;
  double entropy(std::size_t query) const;

  // logits += step * direction (same shape required).
  void apply(const ParamTable& direction, double step);

  friend bool operator==(const SoftmaxPolicy&, const SoftmaxPolicy&) = default;

 private:
  ParamTable logits_;
};

ParamTable zeros_like(const ParamTable& table);

}  // namespace mixrl::grpo
