#include "mixrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace mixrl::grpo {

void RolloutGroup::validate() const {
  const std::size_t g = responses.size();
  if (g < 2) throw std::invalid_argument("rollout group needs G >= 2");
  if (rewards.size() != g || logp_old.size() != g || logp_ref.size() != g ||
      (!choices.empty() && choices.size() != g)) {
    throw std::invalid_argument("rollout group fields disagree on G");
  }
  for (std::size_t i = 0; i < g; ++i) {
    if (responses[i].empty()) throw std::invalid_argument("empty response in rollout group");
    if (logp_old[i].size() != responses[i].size() || logp_ref[i].size() != responses[i].size()) {
      throw std::invalid_argument("per-token log-probabilities do not match response length");
    }
    if (!std::isfinite(rewards[i])) throw std::invalid_argument("non-finite reward");
    for (const auto* row : {&logp_old[i], &logp_ref[i]}) {
      for (double lp : *row) {
        if (!std::isfinite(lp) || lp > 0.0) {
          throw std::invalid_argument("log-probabilities must be finite and <= 0");
        }
      }
    }
  }
}

void GrpoConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!(beta_kl >= 0.0)) throw std::invalid_argument("beta_kl must be >= 0");
  if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
}

void KlSchedule::validate() const {
  if (!(initial > 0.0) || !(target > 0.0)) throw std::invalid_argument("KL coefficients must be > 0");
  if (total_steps < 1) throw std::invalid_argument("schedule needs total_steps >= 1");
}

double kl_coef_at(const KlSchedule& schedule, std::size_t step) {
  schedule.validate();
  if (step > schedule.total_steps) {
    throw std::out_of_range("step " + std::to_string(step) + " beyond schedule length " +
                            std::to_string(schedule.total_steps));
  }
  if (step == schedule.total_steps) return schedule.target;
  double t = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  return schedule.initial + (schedule.target - schedule.initial) * t;
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw std::invalid_argument("group_advantages needs G >= 2");
  const double n = static_cast<double>(rewards.size());
  double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  double std_dev = std::sqrt(var / n);
  std::vector<double> out(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / (std_dev + kAdvantageDelta);
  return out;
}

std::vector<std::vector<double>> broadcast_advantages(std::span<const double> advantages,
                                                      std::span<const std::size_t> lengths) {
  if (advantages.size() != lengths.size()) throw std::invalid_argument("advantage/length mismatch");
  std::vector<std::vector<double>> out;
  out.reserve(advantages.size());
  for (std::size_t i = 0; i < advantages.size(); ++i) out.emplace_back(lengths[i], advantages[i]);
  return out;
}

std::vector<double> prob_ratio(std::span<const double> logp_new, std::span<const double> logp_old) {
  if (logp_new.size() != logp_old.size()) throw std::invalid_argument("prob_ratio shape mismatch");
  std::vector<double> out(logp_new.size());
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = std::exp(logp_new[t] - logp_old[t]);
  return out;
}

double clipped_term(double ratio, double advantage, double epsilon) {
  double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double clipped_surrogate(const std::vector<std::vector<double>>& ratios,
                         const std::vector<std::vector<double>>& advantages, double epsilon) {
  if (ratios.size() != advantages.size() || ratios.empty()) {
    throw std::invalid_argument("clipped_surrogate shape mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i].size() != advantages[i].size() || ratios[i].empty()) {
      throw std::invalid_argument("clipped_surrogate shape mismatch");
    }
    double per_response = 0.0;
    for (std::size_t t = 0; t < ratios[i].size(); ++t) {
      per_response += clipped_term(ratios[i][t], advantages[i][t], epsilon);
    }
    total += per_response / static_cast<double>(ratios[i].size());
  }
  return total / static_cast<double>(ratios.size());
}

double kl_penalty(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_penalty: support mismatch");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    if (q[k] <= 0.0) throw std::invalid_argument("kl_penalty: reference has zero mass on policy support");
    kl += p[k] * std::log(p[k] / q[k]);
  }
  return std::max(0.0, kl);
}

std::vector<double> token_log_probs(double sequence_logp, std::size_t length) {
  if (length == 0) throw std::invalid_argument("token_log_probs: empty response");
  return std::vector<double>(length, sequence_logp / static_cast<double>(length));
}

ObjectiveResult grpo_objective(std::span<const RolloutGroup> groups, const SoftmaxPolicy& policy,
                               const SoftmaxPolicy& ref, const GrpoConfig& config) {
  config.validate();
  if (groups.empty()) throw std::invalid_argument("grpo_objective needs at least one group");
  ObjectiveResult out;
  out.gradient = zeros_like(policy.logits());
  const double inv_groups = 1.0 / static_cast<double>(groups.size());

  for (const auto& group : groups) {
    group.validate();
    if (group.choices.size() != group.size()) throw std::invalid_argument("group lacks candidate choices");
    const std::size_t q = group.query;
    if (q >= policy.num_queries() || q >= ref.num_queries() ||
        policy.num_candidates(q) != ref.num_candidates(q)) {
      throw std::invalid_argument("group query outside the policy table");
    }
    const auto probs = policy.probs(q);
    const auto logp = policy.log_probs(q);
    const auto advantages = group_advantages(group.rewards);
    const double inv_g = 1.0 / static_cast<double>(group.size());
    auto& grad = out.gradient[q];

    double surrogate = 0.0;
    for (std::size_t i = 0; i < group.size(); ++i) {
      const std::size_t k = group.choices[i];
      if (k >= probs.size()) throw std::invalid_argument("choice outside the candidate set");
      const std::size_t len = group.responses[i].size();
      const auto logp_new = token_log_probs(logp[k], len);
      const auto ratios = prob_ratio(logp_new, group.logp_old[i]);
      const double a = advantages[i];
      const double inv_len = 1.0 / static_cast<double>(len);
      double per_response = 0.0;
      double active_weight = 0.0;  // sum over tokens of d(term)/d(log pi_k)
      for (double r : ratios) {
        const double clipped = std::clamp(r, 1.0 - config.epsilon, 1.0 + config.epsilon);
        const double unclipped_term = r * a;
        const double clipped_term_v = clipped * a;
        per_response += std::min(unclipped_term, clipped_term_v);
        // d r / d log pi_k = r / |o_i|; the clipped branch is flat outside the band.
        if (unclipped_term <= clipped_term_v) active_weight += a * r * inv_len;
      }
      surrogate += per_response * inv_len;
      const double coeff = inv_groups * inv_g * inv_len * active_weight;
      if (coeff != 0.0) {
        for (std::size_t m = 0; m < grad.size(); ++m) grad[m] += coeff * ((m == k ? 1.0 : 0.0) - probs[m]);
      }
    }
    surrogate *= inv_g;

    const auto ref_probs = ref.probs(q);
    const double kl = kl_penalty(probs, ref_probs);
    if (config.beta_kl > 0.0) {
      const auto ref_logp = ref.log_probs(q);
      for (std::size_t m = 0; m < grad.size(); ++m) {
        // d KL / d z_m = p_m (log p_m - log q_m - KL)
        grad[m] -= inv_groups * config.beta_kl * probs[m] * (logp[m] - ref_logp[m] - kl);
      }
    }
    out.surrogate += surrogate * inv_groups;
    out.kl += kl * inv_groups;
  }
  out.value = out.surrogate - config.beta_kl * out.kl;
  return out;
}

}  // namespace mixrl::grpo
