#include "cli.hpp"

#include <CLI11.hpp>
#include <iostream>
#include <sstream>

namespace mixrl::cli {

namespace {

// Flag values that override the config file when given.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> ppl_keep;
  std::optional<std::size_t> max_gap;
  std::optional<std::string> checkpoint_dir;
  std::optional<double> beta;
  std::optional<std::string> scorer;
  std::optional<std::size_t> steps;
  std::optional<std::string> regimen;
  std::optional<std::size_t> sft_steps;
  std::optional<std::string> scenario;
  std::optional<double> beta_kl;
  std::optional<std::size_t> topk;
  std::optional<std::string> tokenizer;
  std::optional<double> smoothing;
  std::optional<std::size_t> per_source;
};

void apply(const Overrides& o, Subcommand kind, RunConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.workers) {
    switch (kind) {
      case Subcommand::Pipeline: c.pipeline.workers = *o.workers; break;
      case Subcommand::Reward: c.reward_workers = *o.workers; break;
      case Subcommand::Train: c.train.workers = *o.workers; break;
      default: break;
    }
  }
  if (o.ppl_keep) c.ppl_keep = *o.ppl_keep;
  if (o.max_gap) c.pipeline.max_gap = *o.max_gap;
  if (o.checkpoint_dir) c.pipeline.checkpoint_dir = *o.checkpoint_dir;
  if (o.beta) c.reward_beta = *o.beta;
  if (o.scorer) c.scorer = *o.scorer;
  if (o.steps) c.train.steps = *o.steps;
  if (o.regimen) {
    if (*o.regimen == "grpo") {
      c.regimen.kind = toy::Regimen::Kind::GrpoOnly;
    } else if (*o.regimen == "sft-grpo") {
      c.regimen.kind = toy::Regimen::Kind::SftThenGrpo;
    } else {
      throw ConfigError("--regimen must be \"grpo\" or \"sft-grpo\"");
    }
  }
  if (o.sft_steps) c.regimen.sft_steps = *o.sft_steps;
  if (o.scenario) c.scenario = *o.scenario;
  if (o.beta_kl) c.train.grpo.beta_kl = *o.beta_kl;
  if (o.topk) c.topk = *o.topk;
  if (o.tokenizer) {
    try {
      c.tokenizer = diagnostics::parse_tokenizer(*o.tokenizer);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (o.smoothing) c.smoothing = *o.smoothing;
  if (o.per_source) c.per_source = *o.per_source;
}

}  // namespace

ParseOutcome parse_command(const std::vector<std::string>& args) {
  CLI::App app{"Mixed-reward GRPO toolkit: curation, pipeline, rewards, toy training, diagnostics", "mixrl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Command cmd;
  Overrides ov;
  std::optional<std::string> config_path;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run config file (TOML subset)")->check(CLI::ExistingFile);
    sub->add_option("--seed", ov.seed, "Master seed (overrides config and MIXRL_SEED)");
  };

  auto* curate = app.add_subcommand("curate", "Split a SampleRecord corpus into SFT and RL sets");
  common(curate);
  curate->add_option("--in", cmd.in, "Input corpus (JSONL)")->required();
  curate->add_option("--split-out", cmd.split_out, "Output directory for sft.jsonl, rl.jsonl, manifest.json")
      ->required();
  curate->add_option("--ppl-keep", ov.ppl_keep, "Keep the N highest-perplexity answers before splitting");
  curate->add_option("--ngram-corpus", cmd.ngram_corpus,
                     "Plain-text corpus (one document per line) for the perplexity models; "
                     "defaults to the input answers");

  auto* pipe = app.add_subcommand("pipeline", "Run caption/distill/rewrite/verify/split over metadata");
  common(pipe);
  pipe->add_option("--meta", cmd.meta, "Metadata records (JSONL)")->required();
  pipe->add_option("--clients", cmd.clients, "\"mock\" or a config file with a [clients] section");
  pipe->add_option("--out", cmd.out, "Output directory")->required();
  pipe->add_option("--workers", ov.workers, "Records processed concurrently");
  pipe->add_option("--checkpoint-dir", ov.checkpoint_dir, "Directory for per-stage checkpoints");
  pipe->add_flag("--resume", cmd.resume, "Continue from the checkpoint directory");
  pipe->add_option("--stop-after", cmd.stop_after, "Stop after this stage (captioned, distilled, rewritten, verified)");
  pipe->add_option("--max-gap", ov.max_gap, "Rewrite length-gap limit in words");

  auto* reward = app.add_subcommand("reward", "Score responses with the mixed reward");
  common(reward);
  reward->add_option("--in", cmd.in, "Responses (JSONL: {id, response})");
  reward->add_option("--samples", cmd.samples, "SampleRecords (JSONL) keyed by id");
  reward->add_option("--out", cmd.out, "Output RewardOutcome lines (JSONL)");
  reward->add_option("--beta", ov.beta, "Open-ended smoothing beta");
  reward->add_option("--scorer", ov.scorer, "Open-ended scorer: hash or an http:// url");
  reward->add_option("--workers", ov.workers, "Parallel scoring threads");
  reward->add_option("--task", cmd.task, "One-shot mode: digit, mcq, math, bbox or open");
  reward->add_option("--gold", cmd.gold, "One-shot mode: gold target (JSON array for bbox)");
  reward->add_option("--response", cmd.response, "One-shot mode: raw response text (read from stdin when omitted)");
  reward->add_option("--question", cmd.question, "One-shot mode: question (open-ended scorer context)");

  auto* train = app.add_subcommand("train", "Run the toy GRPO/SFT experiment");
  common(train);
  train->add_option("--log", cmd.log, "TrainLog CSV path")->default_val("train_log.csv");
  train->add_option("--steps", ov.steps, "GRPO steps");
  train->add_option("--regimen", ov.regimen, "grpo or sft-grpo");
  train->add_option("--sft-steps", ov.sft_steps, "SFT steps before GRPO (sft-grpo)");
  train->add_option("--scenario", ov.scenario, "\"bundled\" or a scenario JSONL file");
  train->add_option("--beta-kl", ov.beta_kl, "Constant KL coefficient (ignored with a [schedule])");
  train->add_option("--workers", ov.workers, "Rollout sampling threads");
  train->add_option("--policy-out", cmd.policy_out, "Write final policy logits (JSON)");

  auto* diagnose = app.add_subcommand(
      "diagnose", "Token-distribution metrics; KL is KL(corpus || against), i.e. earlier model first");
  common(diagnose);
  diagnose->add_option("--corpus", cmd.corpus, "Responses (JSONL: {model, response} or {model, tokens})")
      ->required();
  diagnose->add_option("--against", cmd.against, "Second corpus for KL divergence");
  diagnose->add_option("--out", cmd.out, "Metrics CSV (metric,value)")->required();
  diagnose->add_option("--topk", ov.topk, "Top-k table size");
  diagnose->add_option("--topk-out", cmd.topk_out, "Top-k CSV path (default: <out>.topk.csv)");
  diagnose->add_option("--tokenizer", ov.tokenizer, "whitespace or bytes");
  diagnose->add_option("--smoothing", ov.smoothing, "Add-eps smoothing for KL");
  diagnose->add_option("--per-source", ov.per_source, "Sample at most N responses per source before counting");

  auto* validate = app.add_subcommand("validate-config", "Parse and check a run config");
  validate->add_option("--config", config_path, "Run config file")->required()->check(CLI::ExistingFile);
  validate->add_option("--seed", ov.seed, "Seed override");

  if (!args.empty() && !args.front().empty() && args.front().front() != '-') {
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->check_name(args.front());
    if (!known) return {std::nullopt, kExitUsage, "error: unknown subcommand '" + args.front() + "'\n\n" + app.help()};
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return {std::nullopt, kExitOk, app.help()};
  } catch (const CLI::CallForAllHelp& e) {
    return {std::nullopt, kExitOk, app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    auto* failed = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    return {std::nullopt, kExitUsage, "error: " + msg + "\n\n" + failed->help()};
  }

  auto* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  if (name == "curate") cmd.kind = Subcommand::Curate;
  if (name == "pipeline") cmd.kind = Subcommand::Pipeline;
  if (name == "reward") cmd.kind = Subcommand::Reward;
  if (name == "train") cmd.kind = Subcommand::Train;
  if (name == "diagnose") cmd.kind = Subcommand::Diagnose;
  if (name == "validate-config") cmd.kind = Subcommand::ValidateConfig;

  if (cmd.kind == Subcommand::Reward) {
    bool file_mode = !cmd.in.empty() || !cmd.samples.empty() || !cmd.out.empty();
    bool one_shot = cmd.task || cmd.gold || cmd.response;
    if (file_mode == one_shot || (file_mode && (cmd.in.empty() || cmd.samples.empty() || cmd.out.empty())) ||
        (one_shot && !(cmd.task && cmd.gold))) {
      return {std::nullopt, kExitUsage,
              "error: reward needs either --in, --samples and --out, or --task and --gold\n\n" +
                  chosen->help()};
    }
  }

  try {
    if (config_path) {
      cmd.config = load_run_config(*config_path);
      cmd.config_path = config_path;
    }
    apply_seed_env(cmd.config);
    apply(ov, cmd.kind, cmd.config);
  } catch (const ConfigError& e) {
    return {std::nullopt, kExitUsage, std::string("error: ") + e.what()};
  }
  return {std::move(cmd), kExitOk, {}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto parsed = parse_command(args);
  if (!parsed.command) {
    (parsed.exit_code == kExitOk ? out : err) << parsed.message << '\n';
    return parsed.exit_code;
  }
  return execute(*parsed.command, out, err);
}

}  // namespace mixrl::cli
