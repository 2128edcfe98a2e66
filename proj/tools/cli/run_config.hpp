#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "mixrl/diagnostics.hpp"
#include "mixrl/pipeline.hpp"
#include "mixrl/toy_trainer.hpp"

namespace mixrl::cli {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Layered run configuration. Sections of the config file mirror the modules:
//
//   seed = 0
//   [grpo]      epsilon, beta_kl, group_size, temperature
//   [schedule]  initial, target          (enables the linear KL schedule)
//   [train]     steps, lr, lr_schedule = "constant"|"cosine", lr_floor,
//               sft_lr, regimen = "grpo"|"sft-grpo", sft_steps, workers,
//               scenario = "bundled"|path
//   [reward]    beta, scorer = "hash"|http url, workers
//   [pipeline]  workers, max_gap, max_retries, checkpoint_dir,
//               skip_caption_sources = [..]
//   [clients]   caption, distill, rewrite, verify = "mock"|http url
//   [curate]    ppl_keep
//   [diagnose]  tokenizer = "whitespace"|"bytes", topk, smoothing, per_source
//
// Unknown keys are rejected. Relative paths resolve against the file's directory.
struct RunConfig {
  std::uint64_t seed = 0;

  toy::TrainConfig train;
  toy::Regimen regimen = toy::Regimen::grpo_only();
  std::string scenario = "bundled";

  double reward_beta = 0.5;
  std::string scorer = "hash";
  std::size_t reward_workers = 1;

  pipeline::PipelineConfig pipeline;
  std::map<std::string, std::string> clients = {
      {"caption", "mock"}, {"distill", "mock"}, {"rewrite", "mock"}, {"verify", "mock"}};

  std::optional<std::size_t> ppl_keep;

  diagnostics::Tokenizer tokenizer = diagnostics::Tokenizer::Whitespace;
  std::size_t topk = diagnostics::kDefaultTopK;
  double smoothing = diagnostics::kDefaultSmoothing;
  std::optional<std::size_t> per_source;

  // Throws ConfigError on out-of-range values or unresolvable paths.
  void validate() const;
};

// Merges the file over `base`. Throws ConfigError with the offending key.
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir, RunConfig base = {});

// Applies MIXRL_SEED when set; throws ConfigError if it is not an integer.
void apply_seed_env(RunConfig& config);

}  // namespace mixrl::cli
