#include "run_config.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>

#include "mixrl/text.hpp"

namespace mixrl::cli {

namespace {

struct Item {
  std::string key;  // "section.name" or "name" at top level
  std::vector<std::string> values;
};

std::vector<Item> read_items(std::istream& in) {
  std::vector<Item> out;
  for (auto& ci : CLI::ConfigTOML().from_config(in)) {
    if (ci.name == "++" || ci.name == "--") continue;  // section markers
    std::vector<std::string> parents;
    for (auto& p : ci.parents) {
      if (p != "default") parents.push_back(p);
    }
    Item it;
    it.key = parents.empty() ? ci.name : CLI::detail::join(parents, ".") + "." + ci.name;
    it.values = ci.inputs;
    out.push_back(std::move(it));
  }
  return out;
}

const std::string& single(const Item& it) {
  if (it.values.size() != 1) throw ConfigError(it.key + ": expected a single value");
  return it.values.front();
}

double as_double(const Item& it) {
  const auto& s = single(it);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(it.key + ": '" + s + "' is not a number");
  return v;
}

std::uint64_t as_uint(const Item& it) {
  const auto& s = single(it);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(it.key + ": '" + s + "' is not a non-negative integer");
  }
  return v;
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

bool is_url(std::string_view s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

}  // namespace

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir, RunConfig c) {
  std::vector<Item> items;
  try {
    items = read_items(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  bool schedule_seen = false;
  grpo::KlSchedule schedule;

  using Setter = std::function<void(const Item&)>;
  const std::map<std::string, Setter> setters = {
      {"seed", [&](const Item& it) { c.seed = as_uint(it); }},
      {"grpo.epsilon", [&](const Item& it) { c.train.grpo.epsilon = as_double(it); }},
      {"grpo.beta_kl", [&](const Item& it) { c.train.grpo.beta_kl = as_double(it); }},
      {"grpo.group_size", [&](const Item& it) { c.train.grpo.group_size = as_uint(it); }},
      {"grpo.temperature", [&](const Item& it) { c.train.grpo.temperature = as_double(it); }},
      {"schedule.initial", [&](const Item& it) { schedule_seen = true; schedule.initial = as_double(it); }},
      {"schedule.target", [&](const Item& it) { schedule_seen = true; schedule.target = as_double(it); }},
      {"train.steps", [&](const Item& it) { c.train.steps = as_uint(it); }},
      {"train.lr", [&](const Item& it) { c.train.lr = as_double(it); }},
      {"train.lr_floor", [&](const Item& it) { c.train.lr_floor = as_double(it); }},
      {"train.lr_schedule",
       [&](const Item& it) {
         const auto& v = single(it);
         if (v == "constant") {
           c.train.lr_schedule = toy::LrSchedule::Constant;
         } else if (v == "cosine") {
           c.train.lr_schedule = toy::LrSchedule::Cosine;
         } else {
           throw ConfigError(it.key + ": expected \"constant\" or \"cosine\"");
         }
       }},
      {"train.sft_lr", [&](const Item& it) { c.train.sft_lr = as_double(it); }},
      {"train.regimen",
       [&](const Item& it) {
         const auto& v = single(it);
         if (v == "grpo") {
           c.regimen.kind = toy::Regimen::Kind::GrpoOnly;
         } else if (v == "sft-grpo") {
           c.regimen.kind = toy::Regimen::Kind::SftThenGrpo;
         } else {
           throw ConfigError(it.key + ": expected \"grpo\" or \"sft-grpo\"");
         }
       }},
      {"train.sft_steps", [&](const Item& it) { c.regimen.sft_steps = as_uint(it); }},
      {"train.workers", [&](const Item& it) { c.train.workers = as_uint(it); }},
      {"train.scenario",
       [&](const Item& it) {
         const auto& v = single(it);
         c.scenario = v == "bundled" ? v : resolve(base_dir, v);
       }},
      {"reward.beta", [&](const Item& it) { c.reward_beta = as_double(it); }},
      {"reward.scorer", [&](const Item& it) { c.scorer = single(it); }},
      {"reward.workers", [&](const Item& it) { c.reward_workers = as_uint(it); }},
      {"pipeline.workers", [&](const Item& it) { c.pipeline.workers = as_uint(it); }},
      {"pipeline.max_gap", [&](const Item& it) { c.pipeline.max_gap = as_uint(it); }},
      {"pipeline.max_retries", [&](const Item& it) { c.pipeline.max_retries = static_cast<int>(as_uint(it)); }},
      {"pipeline.checkpoint_dir", [&](const Item& it) { c.pipeline.checkpoint_dir = resolve(base_dir, single(it)); }},
      {"pipeline.skip_caption_sources",
       [&](const Item& it) { c.pipeline.skip_caption_sources = {it.values.begin(), it.values.end()}; }},
      {"curate.ppl_keep", [&](const Item& it) { c.ppl_keep = as_uint(it); }},
      {"diagnose.tokenizer",
       [&](const Item& it) {
         try {
           c.tokenizer = diagnostics::parse_tokenizer(single(it));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(it.key + ": " + e.what());
         }
       }},
      {"diagnose.topk", [&](const Item& it) { c.topk = as_uint(it); }},
      {"diagnose.smoothing", [&](const Item& it) { c.smoothing = as_double(it); }},
      {"diagnose.per_source", [&](const Item& it) { c.per_source = as_uint(it); }},
  };

  for (const auto& it : items) {
    if (it.key.rfind("clients.", 0) == 0) {
      auto role = it.key.substr(8);
      if (!c.clients.count(role)) throw ConfigError("unknown client role '" + role + "'");
      c.clients[role] = single(it);
      continue;
    }
    auto s = setters.find(it.key);
    if (s == setters.end()) throw ConfigError("unknown config key '" + it.key + "'");
    s->second(it);
  }
  if (schedule_seen) c.train.kl_schedule = schedule;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return parse_run_config(in, path.parent_path(), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_seed_env(RunConfig& config) {
  const char* env = std::getenv("MIXRL_SEED");
  if (!env || !*env) return;
  std::string_view s(env);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("MIXRL_SEED must be a non-negative integer");
  config.seed = v;
}

void RunConfig::validate() const {
  try {
    train.validate();
    if (train.kl_schedule) {
      auto s = *train.kl_schedule;
      s.total_steps = std::max<std::size_t>(1, train.steps > 0 ? train.steps - 1 : 1);
      s.validate();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (scenario != "bundled" && !std::filesystem::exists(scenario)) {
    throw ConfigError("scenario file '" + scenario + "' does not exist");
  }
  if (!(reward_beta > 0.0)) throw ConfigError("reward.beta must be positive");
  if (scorer != "hash" && !is_url(scorer)) {
    throw ConfigError("reward.scorer must be \"hash\" or an http:// url");
  }
  for (const auto& [role, endpoint] : clients) {
    if (endpoint != "mock" && !is_url(endpoint)) {
      throw ConfigError("clients." + role + " must be \"mock\" or an http:// url");
    }
  }
  if (pipeline.workers == 0 || train.workers == 0 || reward_workers == 0) {
    throw ConfigError("worker counts must be at least 1");
  }
  if (topk == 0) throw ConfigError("diagnose.topk must be at least 1");
  if (!(smoothing > 0.0)) throw ConfigError("diagnose.smoothing must be positive");
  if (ppl_keep && *ppl_keep == 0) throw ConfigError("curate.ppl_keep must be at least 1");
}

}  // namespace mixrl::cli
