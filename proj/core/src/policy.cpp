#include "mixrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mixrl::grpo {

SoftmaxPolicy::SoftmaxPolicy(ParamTable logits) : logits_(std::move(logits)) {
  for (const auto& row : logits_) {
    if (row.size() < 2) throw std::invalid_argument("every query needs at least 2 candidates");
    for (double v : row) {
      if (!std::isfinite(v)) throw std::invalid_argument("policy logits must be finite");
    }
  }
}

SoftmaxPolicy SoftmaxPolicy::uniform(std::span<const std::size_t> candidates_per_query) {
  ParamTable table;
  table.reserve(candidates_per_query.size());
  for (auto k : candidates_per_query) table.emplace_back(k, 0.0);
  return SoftmaxPolicy(std::move(table));
}

std::vector<double> SoftmaxPolicy::log_probs(std::size_t query, double temperature) const {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  const auto& row = logits_.at(query);
  std::vector<double> out(row.size());
  double hi = *std::max_element(row.begin(), row.end()) / temperature;
  double sum = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    out[k] = row[k] / temperature - hi;
    sum += std::exp(out[k]);
  }
  double log_z = std::log(sum);
  for (auto& v : out) v -= log_z;
  return out;
}

std::vector<double> SoftmaxPolicy::probs(std::size_t query, double temperature) const {
  auto out = log_probs(query, temperature);
  for (auto& v : out) v = std::exp(v);
  return out;
}

double SoftmaxPolicy::entropy(std::size_t query) const {
  auto lp = log_probs(query);
  double h = 0.0;
  for (double l : lp) {
    double p = std::exp(l);
    if (p > 0.0) h -= p * l;
  }
  return h;
}

void SoftmaxPolicy::apply(const ParamTable& direction, double step) {
  if (direction.size() != logits_.size()) throw std::invalid_argument("direction shape mismatch");
  for (std::size_t q = 0; q < logits_.size(); ++q) {
    if (direction[q].size() != logits_[q].size()) throw std::invalid_argument("direction shape mismatch");
    for (std::size_t k = 0; k < logits_[q].size(); ++k) logits_[q][k] += step * direction[q][k];
  }
}

ParamTable zeros_like(const ParamTable& table) {
  ParamTable out;
  out.reserve(table.size());
  for (const auto& row : table) out.emplace_back(row.size(), 0.0);
  return out;
}

}  // namespace mixrl::grpo
