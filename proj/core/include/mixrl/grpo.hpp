#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mixrl/policy.hpp"

namespace mixrl::grpo {

// G responses sampled for one query. For the tabular policy, choices[i] is the
// candidate index behind responses[i].
struct RolloutGroup {
  std::size_t query = 0;
  std::vector<std::size_t> choices;
  std::vector<std::vector<int>> responses;
  std::vector<double> rewards;
  std::vector<std::vector<double>> logp_old;  // per token, under the sampling policy
  std::vector<std::vector<double>> logp_ref;  // per token, under the reference policy

  std::size_t size() const { return responses.size(); }
  // Throws std::invalid_argument on G < 2, ragged shapes, empty responses or
  // log-probabilities that are positive or non-finite.
  void validate() const;
};

struct GrpoConfig {
  double epsilon = 0.2;
  double beta_kl = 1e-2;
  std::size_t group_size = 4;
  double temperature = 0.8;

  void validate() const;
};

// Linear interpolation of the KL coefficient from `initial` (step 0) to
// `target` (step == total_steps).
struct KlSchedule {
  double initial = 1e-2;
  double target = 5e-3;
  std::size_t total_steps = 1;

  void validate() const;
};

double kl_coef_at(const KlSchedule& schedule, std::size_t step);

inline constexpr double kAdvantageDelta = 1e-8;

// (r_i - mean) / (population std + delta).
std::vector<double> group_advantages(std::span<const double> rewards);

// Repeats each response-level advantage over that response's tokens.
std::vector<std::vector<double>> broadcast_advantages(std::span<const double> advantages,
                                                      std::span<const std::size_t> lengths);

// exp(logp_new - logp_old), elementwise.
std::vector<double> prob_ratio(std::span<const double> logp_new, std::span<const double> logp_old);

// min(r * A, clip(r, 1 - eps, 1 + eps) * A) for one token.
double clipped_term(double ratio, double advantage, double epsilon);

// (1/G) sum_i (1/|o_i|) sum_t clipped_term(r_it, A_it).
double clipped_surrogate(const std::vector<std::vector<double>>& ratios,
                         const std::vector<std::vector<double>>& advantages, double epsilon);

// Exact sum p ln(p/q) over a shared finite support. Throws std::invalid_argument
// on size mismatch or q == 0 where p > 0.
double kl_penalty(std::span<const double> p, std::span<const double> q);

// The tabular policy scores whole candidates; the sequence log-probability is
// spread evenly over its tokens so per-token values sum to it.
std::vector<double> token_log_probs(double sequence_logp, std::size_t length);

struct ObjectiveResult {
  double value = 0.0;
  double surrogate = 0.0;  // mean clipped surrogate over groups
  double kl = 0.0;         // mean KL(pi || ref) over groups
  ParamTable gradient;     // d value / d logits
};

// Mean over groups of clipped_surrogate - beta * KL(policy || ref), with the
// analytic gradient for the softmax parametrization.
ObjectiveResult grpo_objective(std::span<const RolloutGroup> groups, const SoftmaxPolicy& policy,
                               const SoftmaxPolicy& ref, const GrpoConfig& config);

}  // namespace mixrl::grpo
