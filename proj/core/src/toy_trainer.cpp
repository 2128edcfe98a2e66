#include "mixrl/toy_trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mixrl/parallel.hpp"
#include "mixrl/reward.hpp"
#include "mixrl/rng.hpp"
#include "mixrl/scorers.hpp"
#include "mixrl/text.hpp"

namespace mixrl::toy {

using grpo::SoftmaxPolicy;

void Scenario::finalize() {
  if (queries.empty()) throw std::invalid_argument("scenario has no queries");
  vocabulary.clear();
  for (auto& q : queries) {
    if (q.candidates.size() < 2) throw std::invalid_argument("query '" + q.sample.id + "' needs K >= 2");
    if (q.expert >= q.candidates.size()) {
      throw std::invalid_argument("query '" + q.sample.id + "' expert index out of range");
    }
    validate_gold(q.sample.task, q.sample.gold);

    reward::TableScorer scorer;
    std::map<std::string, double> seen;
    auto add_score = [&](const std::string& answer, double score) {
      auto key = std::string(text::trim(answer));
      auto [it, inserted] = seen.emplace(key, score);
      if (!inserted && it->second != score) {
        throw std::invalid_argument("query '" + q.sample.id + "' assigns two scores to one answer");
      }
      scorer.set(key, score);
    };
    if (q.sample.task == TaskKind::OpenEnded) add_score(std::get<std::string>(q.sample.gold), q.reference_score);

    for (auto& c : q.candidates) {
      c.tokens.clear();
      for (auto word : text::split_whitespace(c.text)) {
        auto [it, _] = vocabulary.emplace(std::string(word), static_cast<int>(vocabulary.size()));
        c.tokens.push_back(it->second);
      }
      if (c.tokens.empty()) throw std::invalid_argument("query '" + q.sample.id + "' has an empty candidate");
      if (c.score && q.sample.task == TaskKind::OpenEnded) {
        auto ex = reward::extract_structured_answer(c.text, q.sample.task);
        if (ex.ok()) add_score(ex.answer, *c.score);
      }
    }
    q.rewards.clear();
    for (const auto& c : q.candidates) {
      q.rewards.push_back(reward::mixed_reward(q.sample, c.text, &scorer, open_beta).value);
    }
  }
}

std::vector<std::size_t> Scenario::candidate_counts() const {
  std::vector<std::size_t> out;
  for (const auto& q : queries) out.push_back(q.candidates.size());
  return out;
}

std::vector<std::size_t> Scenario::expert_indices() const {
  std::vector<std::size_t> out;
  for (const auto& q : queries) out.push_back(q.expert);
  return out;
}

Scenario read_scenario_jsonl(std::istream& in) {
  Scenario scenario;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      ScenarioQuery q;
      q.sample = sample_from_json(j);
      if (!j.contains("task")) throw RecordError("missing field 'task'");
      q.expert = j.at("expert").get<std::size_t>();
      q.reference_score = j.value("reference_score", 0.0);
      for (const auto& c : j.at("candidates")) {
        Candidate cand;
        cand.text = c.at("text").get<std::string>();
        if (c.contains("score") && !c["score"].is_null()) cand.score = c["score"].get<double>();
        q.candidates.push_back(std::move(cand));
      }
      scenario.queries.push_back(std::move(q));
    } catch (const std::exception& e) {
      throw std::invalid_argument("scenario line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  scenario.finalize();
  return scenario;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open scenario file '" + path + "'");
  return read_scenario_jsonl(in);
}

void write_scenario_jsonl(const Scenario& scenario, std::ostream& out) {
  for (const auto& q : scenario.queries) {
    nlohmann::json j;
    j["id"] = q.sample.id;
    j["question"] = q.sample.question;
    j["task"] = std::string(to_string(q.sample.task));
    j["gold"] = gold_to_json(q.sample.gold);
    j["expert"] = q.expert;
    j["reference_score"] = q.reference_score;
    auto& cands = j["candidates"] = nlohmann::json::array();
    for (const auto& c : q.candidates) {
      nlohmann::json cj;
      cj["text"] = c.text;
      if (c.score) cj["score"] = *c.score;
      cands.push_back(std::move(cj));
    }
    out << j.dump() << '\n';
  }
}

void write_train_log_csv(const TrainLog& log, std::ostream& out) {
  out << "step,reward,length,entropy,kl,objective\n";
  char buf[256];
  for (const auto& s : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.10f,%.6f,%.10f,%.10e,%.10e\n", s.step, s.mean_reward,
                  s.mean_length, s.entropy, s.kl, s.objective);
    out << buf;
  }
}

void TrainConfig::validate() const {
  grpo.validate();
  if (kl_schedule) kl_schedule->validate();
  if (!(lr >= 0.0) || !(sft_lr >= 0.0) || !(lr_floor >= 0.0)) {
    throw std::invalid_argument("learning rates must be >= 0");
  }
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
}

double lr_at(const TrainConfig& config, std::size_t step) {
  if (config.lr_schedule == LrSchedule::Constant || config.steps <= 1) return config.lr;
  double t = static_cast<double>(std::min(step, config.steps - 1)) / static_cast<double>(config.steps - 1);
  return config.lr_floor + (config.lr - config.lr_floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

double kl_coef_for_step(const TrainConfig& config, std::size_t step) {
  if (!config.kl_schedule) return config.grpo.beta_kl;
  grpo::KlSchedule schedule = *config.kl_schedule;
  schedule.total_steps = std::max<std::size_t>(1, config.steps - 1);
  return grpo::kl_coef_at(schedule, std::min(step, schedule.total_steps));
}

grpo::RolloutGroup sample_rollouts(const SoftmaxPolicy& policy, const SoftmaxPolicy& ref,
                                   const Scenario& scenario, std::size_t query, std::size_t group_size,
                                   double temperature, std::uint64_t seed) {
  if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  const auto& q = scenario.queries.at(query);
  const auto tempered = policy.probs(query, temperature);
  const auto logp = policy.log_probs(query);
  const auto ref_logp = ref.log_probs(query);
  Rng rng(seed);

  grpo::RolloutGroup group;
  group.query = query;
  for (std::size_t i = 0; i < group_size; ++i) {
    double u = rng.uniform();
    std::size_t k = 0;
    double acc = tempered[0];
    while (u >= acc && k + 1 < tempered.size()) acc += tempered[++k];
    const auto& cand = q.candidates[k];
    group.choices.push_back(k);
    group.responses.push_back(cand.tokens);
    group.rewards.push_back(q.rewards.at(k));
    group.logp_old.push_back(grpo::token_log_probs(logp[k], cand.tokens.size()));
    group.logp_ref.push_back(grpo::token_log_probs(ref_logp[k], cand.tokens.size()));
  }
  return group;
}

double sft_loss(const SoftmaxPolicy& policy, const std::vector<std::size_t>& expert) {
  if (expert.size() != policy.num_queries()) throw std::invalid_argument("one expert index per query");
  double loss = 0.0;
  for (std::size_t q = 0; q < expert.size(); ++q) loss -= policy.log_probs(q).at(expert[q]);
  return loss / static_cast<double>(expert.size());
}

SoftmaxPolicy sft_step(const SoftmaxPolicy& policy, const std::vector<std::size_t>& expert, double lr) {
  if (expert.size() != policy.num_queries()) throw std::invalid_argument("one expert index per query");
  if (!(lr >= 0.0)) throw std::invalid_argument("lr must be >= 0");
  auto direction = grpo::zeros_like(policy.logits());
  const double inv_q = 1.0 / static_cast<double>(expert.size());
  for (std::size_t q = 0; q < expert.size(); ++q) {
    if (expert[q] >= policy.num_candidates(q)) throw std::invalid_argument("expert index out of range");
    auto p = policy.probs(q);
    // -d loss / d z = (onehot(expert) - p) / Q
    for (std::size_t k = 0; k < p.size(); ++k) direction[q][k] = ((k == expert[q]) - p[k]) * inv_q;
  }
  SoftmaxPolicy next = policy;
  next.apply(direction, lr);
  return next;
}

double expected_reward(const SoftmaxPolicy& policy, const Scenario& scenario) {
  double total = 0.0;
  for (std::size_t q = 0; q < scenario.queries.size(); ++q) {
    auto p = policy.probs(q);
    for (std::size_t k = 0; k < p.size(); ++k) total += p[k] * scenario.queries[q].rewards[k];
  }
  return total / static_cast<double>(scenario.queries.size());
}

GrpoStepResult grpo_step(const SoftmaxPolicy& policy, const SoftmaxPolicy& ref, const Scenario& scenario,
                         const grpo::GrpoConfig& config, double lr, std::uint64_t seed, std::size_t step,
                         std::size_t workers) {
  config.validate();
  const std::size_t nq = scenario.queries.size();
  if (policy.num_queries() != nq || ref.num_queries() != nq) {
    throw std::invalid_argument("policy does not match the scenario");
  }
  std::vector<grpo::RolloutGroup> groups(nq);
  parallel_for(nq, workers, [&](std::size_t q) {
    groups[q] = sample_rollouts(policy, ref, scenario, q, config.group_size, config.temperature,
                                derive_seed(seed, step, q));
  });

  auto objective = grpo::grpo_objective(groups, policy, ref, config);

  GrpoStepResult out{policy, {}};
  out.stats.step = step;
  double reward_sum = 0.0;
  double length_sum = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      reward_sum += g.rewards[i];
      length_sum += static_cast<double>(g.responses[i].size());
      ++n;
    }
  }
  double entropy = 0.0;
  for (std::size_t q = 0; q < nq; ++q) entropy += policy.entropy(q);
  out.stats.mean_reward = reward_sum / static_cast<double>(n);
  out.stats.mean_length = length_sum / static_cast<double>(n);
  out.stats.entropy = entropy / static_cast<double>(nq);
  out.stats.kl = objective.kl;
  out.stats.objective = objective.value;
  out.policy.apply(objective.gradient, lr);
  return out;
}

ExperimentResult run_experiment(const Scenario& scenario, const Regimen& regimen, const TrainConfig& config,
                                std::uint64_t seed) {
  config.validate();
  auto policy = SoftmaxPolicy::uniform(scenario.candidate_counts());
  if (regimen.kind == Regimen::Kind::SftThenGrpo) {
    const auto expert = scenario.expert_indices();
    for (std::size_t s = 0; s < regimen.sft_steps; ++s) policy = sft_step(policy, expert, config.sft_lr);
  }
  ExperimentResult out;
  out.initial = policy;
  const SoftmaxPolicy ref = policy;
  out.log.reserve(config.steps);
  for (std::size_t s = 0; s < config.steps; ++s) {
    grpo::GrpoConfig step_config = config.grpo;
    step_config.beta_kl = kl_coef_for_step(config, s);
    auto result = grpo_step(policy, ref, scenario, step_config, lr_at(config, s), seed, s, config.workers);
    policy = std::move(result.policy);
    out.log.push_back(result.stats);
  }
  out.final = std::move(policy);
  return out;
}

}  // namespace mixrl::toy
