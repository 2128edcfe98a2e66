#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixrl/grpo.hpp"
#include "mixrl/policy.hpp"
#include "mixrl/sample_record.hpp"

namespace mixrl::toy {

struct Candidate {
  std::string text;
  std::optional<double> score;  // mock open-ended scorer value for this candidate's answer
  std::vector<int> tokens;      // filled by Scenario::finalize
};

struct ScenarioQuery {
  SampleRecord sample;  // task + gold (+ question) drive the reward
  std::vector<Candidate> candidates;
  std::size_t expert = 0;        // SFT target, index into candidates
  double reference_score = 0.0;  // mock scorer value of the reference answer
  std::vector<double> rewards;   // filled by Scenario::finalize
};

// A fixed candidate set per query with deterministic rewards.
struct Scenario {
  std::vector<ScenarioQuery> queries;
  double open_beta = 0.5;
  std::map<std::string, int> vocabulary;

  // Tokenizes candidates (whitespace, ids in order of first appearance) and
  // scores each one with the mixed reward under a per-query table scorer.
  // Throws std::invalid_argument if an invariant does not hold.
  void finalize();

  std::vector<std::size_t> candidate_counts() const;
  std::vector<std::size_t> expert_indices() const;
};

// One query per line:
//   {"id", "question", "task", "gold", "expert", "reference_score",
//    "candidates": [{"text", "score"?}, ...]}
Scenario read_scenario_jsonl(std::istream& in);
Scenario load_scenario(const std::string& path);
void write_scenario_jsonl(const Scenario& scenario, std::ostream& out);

// 32 open-ended queries with K=8 candidates: one correct and concise (reward 1),
// one long well-formatted pseudo reasoning path with a wrong answer (reward 0.3,
// the SFT target), two malformatted (0) and four well-formatted wrong (0).
Scenario bundled_pseudo_path_scenario(std::size_t num_queries = 32);

inline constexpr std::size_t kCorrectCandidate = 0;
inline constexpr std::size_t kPseudoPathCandidate = 1;

struct StepStats {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double mean_length = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  double objective = 0.0;
};

using TrainLog = std::vector<StepStats>;

// CSV with header step,reward,length,entropy,kl,objective.
void write_train_log_csv(const TrainLog& log, std::ostream& out);

enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
  grpo::GrpoConfig grpo;
  std::optional<grpo::KlSchedule> kl_schedule;  // when set, replaces grpo.beta_kl per step
  double lr = 64.0;
  double lr_floor = 0.0;  // Cosine only
  LrSchedule lr_schedule = LrSchedule::Constant;
  double sft_lr = 32.0;
  std::size_t steps = 200;
  std::size_t workers = 1;

  void validate() const;
};

struct Regimen {
  enum class Kind { GrpoOnly, SftThenGrpo };
  Kind kind = Kind::GrpoOnly;
  std::size_t sft_steps = 0;

  static Regimen grpo_only() { return {}; }
  static Regimen sft_then_grpo(std::size_t steps) { return {Kind::SftThenGrpo, steps}; }
};

double lr_at(const TrainConfig& config, std::size_t step);
double kl_coef_for_step(const TrainConfig& config, std::size_t step);

// G i.i.d. draws from softmax(logits / temperature); log-probabilities are
// recorded under the untempered policy and the reference.
grpo::RolloutGroup sample_rollouts(const grpo::SoftmaxPolicy& policy, const grpo::SoftmaxPolicy& ref,
                                   const Scenario& scenario, std::size_t query, std::size_t group_size,
                                   double temperature, std::uint64_t seed);

// One gradient step on -mean_q log p(expert_q | q).
grpo::SoftmaxPolicy sft_step(const grpo::SoftmaxPolicy& policy, const std::vector<std::size_t>& expert,
                             double lr);
double sft_loss(const grpo::SoftmaxPolicy& policy, const std::vector<std::size_t>& expert);

struct GrpoStepResult {
  grpo::SoftmaxPolicy policy;
  StepStats stats;  // measured on the pre-update (sampling) policy
};

// Samples fresh groups from `policy` (= pi_old) and takes one ascent step.
GrpoStepResult grpo_step(const grpo::SoftmaxPolicy& policy, const grpo::SoftmaxPolicy& ref,
                         const Scenario& scenario, const grpo::GrpoConfig& config, double lr,
                         std::uint64_t seed, std::size_t step = 0, std::size_t workers = 1);

// Expected reward under the untempered policy, averaged over queries.
double expected_reward(const grpo::SoftmaxPolicy& policy, const Scenario& scenario);

struct ExperimentResult {
  TrainLog log;
  grpo::SoftmaxPolicy initial;  // policy entering the GRPO phase (also pi_ref)
  grpo::SoftmaxPolicy final;
};

ExperimentResult run_experiment(const Scenario& scenario, const Regimen& regimen,
                                const TrainConfig& config, std::uint64_t seed);

}  // namespace mixrl::toy
