#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace mixrl::cli {

enum class Subcommand { Curate, Pipeline, Reward, Train, Diagnose, ValidateConfig };

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

// Flags for every subcommand; only the ones belonging to `kind` are set.
struct Command {
  Subcommand kind = Subcommand::ValidateConfig;
  RunConfig config;  // defaults <- --config file <- MIXRL_SEED <- flags
  std::optional<std::string> config_path;

  // curate
  std::string in;
  std::string split_out;
  std::optional<std::string> ngram_corpus;

  // pipeline
  std::string meta;
  std::string clients = "mock";  // "mock" or an endpoints file
  std::string out;
  bool resume = false;
  std::optional<std::string> stop_after;

  // reward: file mode (--in/--samples/--out) or one-shot (--task/--gold/--response)
  std::string samples;
  std::optional<std::string> task;
  std::optional<std::string> gold;
  std::optional<std::string> response;
  std::optional<std::string> question;

  // train
  std::string log;
  std::optional<std::string> policy_out;

  // diagnose
  std::string corpus;
  std::optional<std::string> against;
  std::optional<std::string> topk_out;
};

struct ParseOutcome {
  std::optional<Command> command;
  int exit_code = kExitOk;  // meaningful when command is empty (help or usage error)
  std::string message;      // help or usage text
};

ParseOutcome parse_command(const std::vector<std::string>& args);

// Runs a parsed command. The last line written to `out` is a one-line JSON
// summary; diagnostics go to `err`.
int execute(const Command& command, std::ostream& out, std::ostream& err);

// parse_command + execute, for main().
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mixrl::cli
