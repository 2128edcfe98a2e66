#ifdef MIXRL_HAVE_CLI

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unistd.h>

#include "cli.hpp"
#include "mixrl/io.hpp"

namespace fs = std::filesystem;
using namespace mixrl::cli;
using nlohmann::json;

namespace {

const fs::path kConfigs = MIXRL_CONFIG_DIR;
const fs::path kData = MIXRL_DATA_DIR;

struct RunResult {
  int code;
  std::string out;
  std::string err;

  json summary() const {
    auto end = out.find_last_not_of('\n');
    auto start = out.rfind('\n', end);
    return json::parse(out.substr(start == std::string::npos ? 0 : start + 1, end - start));
  }
};

RunResult run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("mixrl_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& content) { std::ofstream(p) << content; }

std::size_t count_lines(const fs::path& p) {
  std::size_t n = 0;
  mixrl::io::for_each_jsonl(p, [&](const json&, std::size_t) { ++n; });
  return n;
}

class SeedEnv {
 public:
  explicit SeedEnv(const char* value) { ::setenv("MIXRL_SEED", value, 1); }
  ~SeedEnv() { ::unsetenv("MIXRL_SEED"); }
};

}  // namespace

TEST(CliParse, TrainWithConfig) {
  auto p = parse_command({"train", "--config", (kConfigs / "run.toml").string()});
  ASSERT_TRUE(p.command.has_value()) << p.message;
  EXPECT_EQ(p.command->kind, Subcommand::Train);
}

TEST(CliParse, UnknownSubcommandIsUsageError) {
  auto p = parse_command({"bogus"});
  EXPECT_FALSE(p.command.has_value());
  EXPECT_EQ(p.exit_code, kExitUsage);
  EXPECT_NE(p.message.find("bogus"), std::string::npos);
}

TEST(CliParse, UnknownFlagIsUsageError) {
  auto p = parse_command({"train", "--no-such-flag"});
  EXPECT_EQ(p.exit_code, kExitUsage);
  EXPECT_NE(p.message.find("Usage"), std::string::npos);
}

TEST(CliParse, OneShotReward) {
  auto p = parse_command({"reward", "--task", "mcq", "--gold", "A"});
  ASSERT_TRUE(p.command.has_value()) << p.message;
  EXPECT_EQ(p.command->kind, Subcommand::Reward);
  EXPECT_EQ(*p.command->task, "mcq");
  EXPECT_EQ(*p.command->gold, "A");
}

TEST(CliParse, RewardModesAreExclusive) {
  EXPECT_EQ(parse_command({"reward", "--task", "mcq"}).exit_code, kExitUsage);
  EXPECT_EQ(parse_command({"reward", "--in", "x", "--task", "mcq", "--gold", "A"}).exit_code, kExitUsage);
  EXPECT_EQ(parse_command({"reward", "--in", "x"}).exit_code, kExitUsage);
}

TEST(CliParse, FlagsOverrideEnvOverrideConfig) {
  TempDir tmp;
  write(tmp / "c.toml", "seed = 5\n[train]\nsteps = 12\n");
  auto from_file = parse_command({"train", "--config", (tmp / "c.toml").string()});
  ASSERT_TRUE(from_file.command);
  EXPECT_EQ(from_file.command->config.seed, 5u);
  EXPECT_EQ(from_file.command->config.train.steps, 12u);
  {
    SeedEnv env("9");
    auto from_env = parse_command({"train", "--config", (tmp / "c.toml").string()});
    EXPECT_EQ(from_env.command->config.seed, 9u);
    auto from_flag = parse_command({"train", "--config", (tmp / "c.toml").string(), "--seed", "3", "--steps", "7"});
    EXPECT_EQ(from_flag.command->config.seed, 3u);
    EXPECT_EQ(from_flag.command->config.train.steps, 7u);
  }
  SeedEnv bad("nope");
  EXPECT_EQ(parse_command({"train"}).exit_code, kExitUsage);
}

TEST(RunConfig, ParsesSectionsAndRejectsUnknownKeys) {
  std::istringstream in(
      "seed = 4\n[grpo]\nbeta_kl = 0.02\n[schedule]\ninitial = 0.01\ntarget = 0.005\n"
      "[pipeline]\nskip_caption_sources = [\"geoqa\", \"clevr_math\"]\n[clients]\nverify = \"http://h:1/v\"\n");
  auto c = parse_run_config(in, ".");
  EXPECT_EQ(c.seed, 4u);
  EXPECT_DOUBLE_EQ(c.train.grpo.beta_kl, 0.02);
  ASSERT_TRUE(c.train.kl_schedule);
  EXPECT_DOUBLE_EQ(c.train.kl_schedule->target, 0.005);
  EXPECT_EQ(c.pipeline.skip_caption_sources, (std::set<std::string>{"geoqa", "clevr_math"}));
  EXPECT_EQ(c.clients.at("verify"), "http://h:1/v");

  std::istringstream bad("[train]\nstepz = 3\n");
  EXPECT_THROW(parse_run_config(bad, "."), ConfigError);
  std::istringstream bad_value("[train]\nsteps = \"many\"\n");
  EXPECT_THROW(parse_run_config(bad_value, "."), ConfigError);
}

TEST(RunConfig, ShippedConfigsValidate) {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".toml") continue;
    ++n;
    auto r = run_cli({"validate-config", "--config", entry.path().string()});
    EXPECT_EQ(r.code, kExitOk) << entry.path() << "\n" << r.err;
    EXPECT_EQ(r.summary()["status"], "ok");
  }
  EXPECT_GE(n, 1u);
}

TEST(RunConfig, ValidationCatchesBadValues) {
  TempDir tmp;
  write(tmp / "c.toml", "[train]\nscenario = \"missing.jsonl\"\n");
  auto r = run_cli({"validate-config", "--config", (tmp / "c.toml").string()});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("missing.jsonl"), std::string::npos);
}

TEST(CliExecute, RewardFileMode) {
  TempDir tmp;
  write(tmp / "samples.jsonl",
        "{\"id\":\"a\",\"question\":\"q\",\"task\":\"digit\",\"gold\":3}\n"
        "{\"id\":\"b\",\"question\":\"q\",\"task\":\"mcq\",\"gold\":\"B\"}\n"
        "{\"id\":\"c\",\"question\":\"q\",\"task\":\"math\",\"gold\":\"1/2\"}\n");
  write(tmp / "responses.jsonl",
        "{\"id\":\"a\",\"response\":\"<think>t</think>3\"}\n"
        "{\"id\":\"b\",\"response\":\"<think>t</think>(b)\"}\n"
        "{\"id\":\"c\",\"response\":\"<think>t</think>0.5\"}\n");
  auto r = run_cli({"reward", "--in", (tmp / "responses.jsonl").string(), "--samples",
                    (tmp / "samples.jsonl").string(), "--out", (tmp / "out.jsonl").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(count_lines(tmp / "out.jsonl"), 3u);
  mixrl::io::for_each_jsonl(tmp / "out.jsonl", [](const json& j, std::size_t) { EXPECT_EQ(j["value"], 1.0); });
  auto s = r.summary();
  EXPECT_EQ(s["command"], "reward");
  EXPECT_EQ(s["status"], "ok");
}

TEST(CliExecute, RewardOneShot) {
  auto r = run_cli({"reward", "--task", "bbox", "--gold", "[1,1,3,3]", "--response", "<think>t</think>[0,0,2,2]"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NEAR(r.summary()["mean_reward"].get<double>(), 1.0 / 7, 1e-12);
}

TEST(CliExecute, RewardUnknownIdIsDataError) {
  TempDir tmp;
  write(tmp / "samples.jsonl", "{\"id\":\"a\",\"question\":\"q\",\"task\":\"digit\",\"gold\":3}\n");
  write(tmp / "responses.jsonl", "{\"id\":\"zz\",\"response\":\"<think>t</think>3\"}\n");
  auto r = run_cli({"reward", "--in", (tmp / "responses.jsonl").string(), "--samples",
                    (tmp / "samples.jsonl").string(), "--out", (tmp / "out.jsonl").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_FALSE(fs::exists(tmp / "out.jsonl"));
  EXPECT_EQ(r.summary()["status"], "error");
}

TEST(CliExecute, TrainWritesLogAndIsReproducible) {
  TempDir tmp;
  auto a = run_cli({"train", "--steps", "20", "--log", (tmp / "a.csv").string()});
  auto b = run_cli({"train", "--steps", "20", "--log", (tmp / "b.csv").string()});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  ASSERT_EQ(b.code, kExitOk) << b.err;
  auto log = mixrl::io::read_file(tmp / "a.csv");
  EXPECT_EQ(log.rfind("step,reward,length,entropy,kl,objective", 0), 0u);
  EXPECT_EQ(log, mixrl::io::read_file(tmp / "b.csv"));
}

TEST(CliExecute, CurateSplits) {
  TempDir tmp;
  auto r = run_cli({"curate", "--in", (kData / "corpus.jsonl").string(), "--split-out", (tmp / "split").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(count_lines(tmp / "split" / "sft.jsonl") + count_lines(tmp / "split" / "rl.jsonl"),
            count_lines(kData / "corpus.jsonl"));
  auto manifest = json::parse(mixrl::io::read_file(tmp / "split" / "manifest.json"));
  EXPECT_EQ(manifest["input"], count_lines(kData / "corpus.jsonl"));
}

TEST(CliExecute, PipelineMockRunIsByteIdentical) {
  TempDir tmp;
  auto meta = (kData / "meta10.jsonl").string();
  auto a = run_cli({"pipeline", "--meta", meta, "--out", (tmp / "a").string(), "--workers", "3"});
  auto b = run_cli({"pipeline", "--meta", meta, "--out", (tmp / "b").string()});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  ASSERT_EQ(b.code, kExitOk) << b.err;
  for (const char* f : {"sft.jsonl", "rl.jsonl", "failures.jsonl", "manifest.json"}) {
    EXPECT_EQ(mixrl::io::read_file(tmp / "a" / f), mixrl::io::read_file(tmp / "b" / f)) << f;
  }
}

TEST(CliExecute, PipelineStopAndResume) {
  TempDir tmp;
  auto meta = (kData / "meta10.jsonl").string();
  auto ckpt = (tmp / "ckpt").string();
  auto stop = run_cli({"pipeline", "--meta", meta, "--out", (tmp / "r").string(), "--checkpoint-dir", ckpt,
                       "--stop-after", "rewritten"});
  ASSERT_EQ(stop.code, kExitOk) << stop.err;
  EXPECT_FALSE(fs::exists(tmp / "r" / "sft.jsonl"));
  auto resume = run_cli({"pipeline", "--meta", meta, "--out", (tmp / "r").string(), "--checkpoint-dir", ckpt,
                         "--resume"});
  ASSERT_EQ(resume.code, kExitOk) << resume.err;
  auto full = run_cli({"pipeline", "--meta", meta, "--out", (tmp / "f").string()});
  for (const char* f : {"sft.jsonl", "rl.jsonl", "failures.jsonl", "manifest.json"}) {
    EXPECT_EQ(mixrl::io::read_file(tmp / "r" / f), mixrl::io::read_file(tmp / "f" / f)) << f;
  }
}

TEST(CliExecute, DiagnoseWritesMetrics) {
  TempDir tmp;
  auto r = run_cli({"diagnose", "--corpus", (kData / "responses_base.jsonl").string(), "--against",
                    (kData / "responses_grpo.jsonl").string(), "--out", (tmp / "m.csv").string(), "--topk", "5"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  auto metrics = mixrl::io::read_file(tmp / "m.csv");
  EXPECT_NE(metrics.find("kl_nats_corpus_against"), std::string::npos);
  EXPECT_TRUE(fs::exists(tmp / "m.csv.topk.csv"));
}

TEST(CliExecute, DiagnoseEmptyCorpusNamesInput) {
  TempDir tmp;
  write(tmp / "empty.jsonl", "");
  auto r = run_cli({"diagnose", "--corpus", (tmp / "empty.jsonl").string(), "--out", (tmp / "m.csv").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("empty.jsonl"), std::string::npos);
  EXPECT_FALSE(fs::exists(tmp / "m.csv"));
}

#endif
