#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "mixrl/toy_trainer.hpp"

using namespace mixrl;
using namespace mixrl::toy;

namespace {

const Scenario& scenario() {
  static const Scenario s = bundled_pseudo_path_scenario();
  return s;
}

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST(Scenario, BundledLayout) {
  const auto& s = scenario();
  ASSERT_EQ(s.queries.size(), 32u);
  for (const auto& q : s.queries) {
    ASSERT_EQ(q.candidates.size(), 8u);
    EXPECT_EQ(q.rewards[kCorrectCandidate], 1.0);
    EXPECT_NEAR(q.rewards[kPseudoPathCandidate], 0.3, 1e-12);
    EXPECT_EQ(q.expert, kPseudoPathCandidate);
    for (std::size_t k = 2; k < 8; ++k) EXPECT_EQ(q.rewards[k], 0.0);
  }
}

TEST(Scenario, JsonlRoundTrip) {
  std::stringstream buf;
  write_scenario_jsonl(scenario(), buf);
  auto back = read_scenario_jsonl(buf);
  ASSERT_EQ(back.queries.size(), scenario().queries.size());
  for (std::size_t i = 0; i < back.queries.size(); ++i) EXPECT_EQ(back.queries[i].rewards, scenario().queries[i].rewards);
}

TEST(Rollouts, GroupShapeAndDeterminism) {
  auto p = grpo::SoftmaxPolicy::uniform(scenario().candidate_counts());
  auto a = sample_rollouts(p, p, scenario(), 0, 4, 0.8, 42);
  auto b = sample_rollouts(p, p, scenario(), 0, 4, 0.8, 42);
  EXPECT_EQ(a.size(), 4u);
  EXPECT_EQ(a.choices, b.choices);
  EXPECT_EQ(a.rewards, b.rewards);
  EXPECT_NO_THROW(a.validate());
}

TEST(Rollouts, DominantLogitAlwaysSampled) {
  grpo::ParamTable logits(scenario().queries.size(), std::vector<double>(8, 0.0));
  logits[0][3] = 20.0;
  grpo::SoftmaxPolicy p(logits);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto g = sample_rollouts(p, p, scenario(), 0, 4, 0.8, seed);
    for (auto c : g.choices) EXPECT_EQ(c, 3u);
  }
}

TEST(Sft, ZeroLrIsNoop) {
  auto p = grpo::SoftmaxPolicy::uniform(scenario().candidate_counts());
  EXPECT_EQ(sft_step(p, scenario().expert_indices(), 0.0), p);
}

TEST(Sft, ExpertProbabilityRisesAndEntropyFalls) {
  auto p = grpo::SoftmaxPolicy::uniform(scenario().candidate_counts());
  auto expert = scenario().expert_indices();
  double prev_prob = p.probs(0)[expert[0]], prev_entropy = p.entropy(0);
  EXPECT_GT(sft_step(p, expert, 0.1).probs(0)[expert[0]], 1.0 / 8.0);
  for (int i = 0; i < 30; ++i) {
    p = sft_step(p, expert, 1.0);
    double prob = p.probs(0)[expert[0]], h = p.entropy(0);
    EXPECT_GT(prob, prev_prob);
    EXPECT_LT(h, prev_entropy);
    EXPECT_NEAR(total(p.probs(0)), 1.0, 1e-9);
    prev_prob = prob;
    prev_entropy = h;
  }
}

TEST(GrpoStep, EqualRewardsAtReferenceDoNotMove) {
  auto s = scenario();
  for (auto& q : s.queries) std::fill(q.rewards.begin(), q.rewards.end(), 0.5);
  auto p = grpo::SoftmaxPolicy::uniform(s.candidate_counts());
  grpo::GrpoConfig cfg;
  cfg.beta_kl = 0.1;
  auto r = grpo_step(p, p, s, cfg, 1.0, 7);
  EXPECT_EQ(r.policy, p);
}

TEST(GrpoStep, EqualRewardsMoveOnlyThroughKl) {
  auto s = scenario();
  for (auto& q : s.queries) std::fill(q.rewards.begin(), q.rewards.end(), 0.5);
  grpo::ParamTable logits(s.queries.size(), std::vector<double>(8, 0.0));
  logits[0][2] = 1.0;
  grpo::SoftmaxPolicy p(logits);
  auto ref = grpo::SoftmaxPolicy::uniform(s.candidate_counts());
  grpo::GrpoConfig cfg;
  cfg.beta_kl = 0.0;
  EXPECT_EQ(grpo_step(p, ref, s, cfg, 1.0, 7).policy, p);
  cfg.beta_kl = 0.1;
  auto moved = grpo_step(p, ref, s, cfg, 1.0, 7).policy;
  EXPECT_LT(moved.logits(0)[2], 1.0);  // pulled back toward the reference
}

TEST(GrpoStep, HighRewardLogitIncreases) {
  auto p = grpo::SoftmaxPolicy::uniform(scenario().candidate_counts());
  grpo::GrpoConfig cfg;
  cfg.beta_kl = 0.0;
  cfg.group_size = 16;
  auto r = grpo_step(p, p, scenario(), cfg, 1.0, 3);
  double up = 0;
  for (std::size_t q = 0; q < scenario().queries.size(); ++q) {
    up += r.policy.logits(q)[kCorrectCandidate] - p.logits(q)[kCorrectCandidate];
  }
  EXPECT_GT(up, 0.0);
}

TEST(Experiment, ReproducibleAndRegimenDegenerate) {
  TrainConfig cfg;
  cfg.steps = 30;
  auto a = run_experiment(scenario(), Regimen::grpo_only(), cfg, 9);
  auto b = run_experiment(scenario(), Regimen::grpo_only(), cfg, 9);
  auto c = run_experiment(scenario(), Regimen::sft_then_grpo(0), cfg, 9);
  EXPECT_EQ(a.final, b.final);
  EXPECT_EQ(a.final, c.final);
  ASSERT_EQ(a.log.size(), c.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].mean_reward, c.log[i].mean_reward);
}

TEST(Experiment, DirectionalClaims) {
  TrainConfig cfg;
  auto grpo = run_experiment(scenario(), Regimen::grpo_only(), cfg, 0);
  auto sft = run_experiment(scenario(), Regimen::sft_then_grpo(50), cfg, 0);
  EXPECT_GT(expected_reward(sft.initial, scenario()), expected_reward(grpo.initial, scenario()));
  EXPECT_GE(expected_reward(grpo.final, scenario()), expected_reward(sft.final, scenario()));
  EXPECT_GE(expected_reward(grpo.final, scenario()), 0.9);
  for (std::size_t q = 0; q < scenario().queries.size(); ++q) EXPECT_NEAR(total(grpo.final.probs(q)), 1.0, 1e-9);
}

TEST(Experiment, SmoothedMonotoneWithoutKl) {
  TrainConfig cfg;
  cfg.grpo.beta_kl = 0.0;
  auto r = run_experiment(scenario(), Regimen::grpo_only(), cfg, 0);
  double prev = -1;
  for (std::size_t start = 20; start + 50 <= r.log.size(); start += 50) {
    double m = 0;
    for (std::size_t i = start; i < start + 50; ++i) m += r.log[i].mean_reward;
    m /= 50;
    EXPECT_GE(m, prev);
    prev = m;
  }
  EXPECT_GT(expected_reward(r.final, scenario()), 0.9);
}

TEST(TrainLog, CsvHeader) {
  std::ostringstream out;
  write_train_log_csv({StepStats{0, 0.5, 3, 2, 0, 0.1}}, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "step,reward,length,entropy,kl,objective");
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  cfg.steps = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
