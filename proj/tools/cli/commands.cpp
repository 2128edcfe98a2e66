#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <set>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "mixrl/curation.hpp"
#include "mixrl/diagnostics.hpp"
#include "mixrl/io.hpp"
#include "mixrl/pipeline.hpp"
#include "mixrl/reward.hpp"
#include "mixrl/scorers.hpp"
#include "mixrl/text.hpp"
#include "mixrl/toy_trainer.hpp"

namespace mixrl::cli {

namespace {

using nlohmann::json;

// Errors in the inputs (as opposed to usage); exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<SampleRecord> read_samples(const std::string& path) {
  std::vector<SampleRecord> out;
  std::set<std::string> ids;
  io::for_each_jsonl(path, [&](const json& j, std::size_t line) {
    try {
      out.push_back(sample_from_json(j));
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(line) + ": " + e.what());
    }
    if (!ids.insert(out.back().id).second) {
      throw DataError(path + ":" + std::to_string(line) + ": duplicate id '" + out.back().id + "'");
    }
  });
  return out;
}

std::unique_ptr<reward::ScorerClient> make_scorer(const RunConfig& c) {
  if (c.scorer == "hash") return std::make_unique<reward::HashScorer>();
  return std::make_unique<reward::HttpScorer>(c.scorer);
}

json outcome_to_json(const std::string& id, const reward::RewardOutcome& o) {
  return {{"id", id},
          {"value", o.value},
          {"source", std::string(to_string(o.source))},
          {"status", o.extraction.ok() ? "ok" : "malformed"},
          {"answer", o.extraction.answer}};
}

// ---- curate ---------------------------------------------------------------

json run_curate(const Command& cmd) {
  const auto& c = cmd.config;
  const std::filesystem::path dir = cmd.split_out;
  json manifest;
  std::size_t n_sft = 0, n_rl = 0, n_in = 0;

  if (!c.ppl_keep) {
    // Streaming path: one record in memory at a time (plus the id set).
    io::AtomicWriter sft(dir / "sft.jsonl"), rl(dir / "rl.jsonl");
    std::set<std::string> ids;
    io::for_each_jsonl(cmd.in, [&](const json& j, std::size_t line) {
      SampleRecord s;
      try {
        s = sample_from_json(j);
      } catch (const std::exception& e) {
        throw DataError(cmd.in + ":" + std::to_string(line) + ": " + e.what());
      }
      if (!ids.insert(s.id).second) throw DataError(cmd.in + ": duplicate id '" + s.id + "'");
      ++n_in;
      bool aha = curation::detect_aha(s.reasoning);
      (aha ? rl : sft).stream() << sample_to_json(s).dump() << '\n';
      ++(aha ? n_rl : n_sft);
    });
    sft.commit();
    rl.commit();
    manifest = {{"input", n_in}, {"sft", n_sft}, {"rl", n_rl}};
  } else {
    auto samples = read_samples(cmd.in);
    n_in = samples.size();
    if (*c.ppl_keep > samples.size()) {
      throw DataError("--ppl-keep " + std::to_string(*c.ppl_keep) + " exceeds the " + std::to_string(samples.size()) +
                      " records in " + cmd.in);
    }
    std::vector<std::string> lm_corpus;
    if (cmd.ngram_corpus) {
      std::ifstream in(*cmd.ngram_corpus);
      if (!in) throw DataError("cannot open n-gram corpus '" + *cmd.ngram_corpus + "'");
      for (std::string line; std::getline(in, line);) {
        if (!text::trim(line).empty()) lm_corpus.push_back(line);
      }
    } else {
      for (const auto& s : samples) lm_corpus.push_back(s.answer);
    }
    std::unique_ptr<curation::NgramModel> uni, bi;
    try {
      uni = curation::ngram_train(lm_corpus, 1);
      bi = curation::ngram_train(lm_corpus, 2);
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("cannot train perplexity models: ") + e.what());
    }
    std::vector<SampleRecord> kept;
    try {
      kept = curation::filter_by_ppl(samples, *uni, *bi, *c.ppl_keep);
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what());
    }
    auto split = curation::split_sft_rl(std::move(kept));
    n_sft = split.sft.size();
    n_rl = split.rl.size();
    auto write = [&](const char* name, const std::vector<SampleRecord>& rs) {
      io::write_atomic(dir / name, [&](std::ostream& out) {
        for (const auto& r : rs) out << sample_to_json(r).dump() << '\n';
      });
    };
    write("sft.jsonl", split.sft);
    write("rl.jsonl", split.rl);
    manifest = {{"input", n_in}, {"ppl_kept", *c.ppl_keep}, {"sft", n_sft}, {"rl", n_rl}};
  }
  io::write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return {{"input", n_in}, {"sft", n_sft}, {"rl", n_rl}, {"out", cmd.split_out}};
}

// ---- pipeline -------------------------------------------------------------

json run_pipeline_command(const Command& cmd) {
  RunConfig c = cmd.config;
  if (cmd.clients != "mock") c = load_run_config(cmd.clients, c);
  c.validate();

  std::vector<SampleRecord> metadata = read_samples(cmd.meta);

  pipeline::MockModelClient mock;
  std::map<std::string, std::unique_ptr<pipeline::HttpModelClient>> remote;
  auto pick = [&](const std::string& role) -> pipeline::ModelClient* {
    const auto& endpoint = c.clients.at(role);
    if (endpoint == "mock") return &mock;
    auto& slot = remote[endpoint];
    if (!slot) slot = std::make_unique<pipeline::HttpModelClient>(endpoint);
    return slot.get();
  };
  pipeline::ClientSet clients{pick("caption"), pick("distill"), pick("rewrite"), pick("verify")};

  pipeline::PipelineConfig pc = c.pipeline;
  pc.resume = cmd.resume;
  if (cmd.stop_after) {
    try {
      pc.stop_after = pipeline::parse_stage(*cmd.stop_after);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  pipeline::PipelineResult result;
  try {
    result = pipeline::run_pipeline(metadata, clients, pc);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  const std::filesystem::path out = cmd.out;
  if (result.complete()) {
    pipeline::write_pipeline_outputs(result, out);
  } else {
    io::write_atomic(out / "manifest.json", result.manifest.dump(2) + "\n");
  }
  json summary{{"complete", result.complete()},
               {"reached", std::string(pipeline::stage_name(result.reached))},
               {"input", metadata.size()},
               {"failures", result.failures.size()},
               {"out", cmd.out}};
  if (result.complete()) {
    summary["sft"] = result.sft.size();
    summary["rl"] = result.rl.size();
  }
  return summary;
}

// ---- reward ---------------------------------------------------------------

json run_reward_one_shot(const Command& cmd, std::ostream& out) {
  const auto& c = cmd.config;
  SampleRecord s;
  s.id = "cli";
  s.question = cmd.question.value_or("");
  try {
    s.task = parse_task_kind(*cmd.task);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  json gold = *cmd.gold;
  if (s.task == TaskKind::BBox) {
    try {
      gold = json::parse(*cmd.gold);
    } catch (const json::parse_error&) {
      throw ConfigError("--gold for bbox must be a JSON array [x1,y1,x2,y2]");
    }
  }
  try {
    s.gold = parse_gold(s.task, gold);
  } catch (const RecordError& e) {
    throw ConfigError(std::string("--gold: ") + e.what());
  }
  s.answer = gold_to_text(s.gold);
  auto scorer = make_scorer(c);
  std::string raw;
  if (cmd.response) {
    raw = *cmd.response;
  } else {
    raw.assign(std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>());
  }
  reward::RewardOutcome o;
  try {
    o = reward::mixed_reward(s, raw, scorer.get(), c.reward_beta);
  } catch (const reward::RewardUnavailable& e) {
    throw DataError(e.what());
  }
  out << outcome_to_json(s.id, o).dump() << '\n';
  return {{"records", 1}, {"mean_reward", o.value}};
}

json run_reward_files(const Command& cmd) {
  const auto& c = cmd.config;
  std::map<std::string, SampleRecord> samples;
  for (auto& s : read_samples(cmd.samples)) {
    auto id = s.id;
    samples.emplace(std::move(id), std::move(s));
  }
  auto scorer = make_scorer(c);

  io::AtomicWriter writer(cmd.out);
  std::size_t records = 0, unavailable = 0, malformed = 0;
  double total = 0.0;

  // Responses are streamed in bounded batches so memory stays flat.
  constexpr std::size_t kBatch = 256;
  std::vector<std::string> ids, raws;
  auto flush = [&] {
    std::vector<const SampleRecord*> ptrs;
    for (const auto& id : ids) ptrs.push_back(&samples.at(id));
    auto items = reward::mixed_reward_batch(ptrs, raws, scorer.get(), c.reward_beta, c.reward_workers);
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (auto* o = std::get_if<reward::RewardOutcome>(&items[i])) {
        writer.stream() << outcome_to_json(ids[i], *o).dump() << '\n';
        total += o->value;
        if (!o->extraction.ok()) ++malformed;
      } else {
        writer.stream() << json{{"id", ids[i]}, {"error", std::get<std::string>(items[i])}}.dump() << '\n';
        ++unavailable;
      }
      ++records;
    }
    ids.clear();
    raws.clear();
  };
  io::for_each_jsonl(cmd.in, [&](const json& j, std::size_t line) {
    auto where = cmd.in + ":" + std::to_string(line);
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("response") ||
        !j["response"].is_string()) {
      throw DataError(where + ": expected {\"id\": string, \"response\": string}");
    }
    auto id = j["id"].get<std::string>();
    if (!samples.count(id)) throw DataError(where + ": no sample with id '" + id + "' in " + cmd.samples);
    ids.push_back(std::move(id));
    raws.push_back(j["response"].get<std::string>());
    if (ids.size() == kBatch) flush();
  });
  flush();
  writer.commit();
  double scored = static_cast<double>(records - unavailable);
  return {{"records", records},
          {"malformed", malformed},
          {"unavailable", unavailable},
          {"mean_reward", scored > 0 ? total / scored : 0.0},
          {"out", cmd.out}};
}

// ---- train ----------------------------------------------------------------

json run_train(const Command& cmd) {
  const auto& c = cmd.config;
  toy::Scenario scenario;
  if (c.scenario == "bundled") {
    scenario = toy::bundled_pseudo_path_scenario();
  } else {
    try {
      scenario = toy::load_scenario(c.scenario);
    } catch (const std::exception& e) {
      throw DataError(c.scenario + ": " + e.what());
    }
  }
  auto result = toy::run_experiment(scenario, c.regimen, c.train, c.seed);
  io::write_atomic(cmd.log, [&](std::ostream& out) { toy::write_train_log_csv(result.log, out); });
  if (cmd.policy_out) {
    json j{{"logits", result.final.logits()}};
    io::write_atomic(*cmd.policy_out, j.dump() + "\n");
  }
  json summary{{"steps", result.log.size()},
               {"regimen", c.regimen.kind == toy::Regimen::Kind::GrpoOnly ? "grpo" : "sft-grpo"},
               {"seed", c.seed},
               {"expected_final_reward", toy::expected_reward(result.final, scenario)},
               {"log", cmd.log}};
  if (!result.log.empty()) {
    summary["initial_reward"] = result.log.front().mean_reward;
    summary["final_reward"] = result.log.back().mean_reward;
  }
  return summary;
}

// ---- diagnose -------------------------------------------------------------

diagnostics::TokenDistribution load_distribution(const std::string& path, const RunConfig& c) {
  std::vector<std::string> sources;
  std::vector<std::string> texts;
  std::vector<std::vector<std::string>> token_lists;
  io::for_each_jsonl(path, [&](const json& j, std::size_t line) {
    auto where = path + ":" + std::to_string(line);
    if (!j.is_object()) throw DataError(where + ": expected an object");
    sources.push_back(j.value("source", j.value("model", std::string())));
    if (auto t = j.find("tokens"); t != j.end()) {
      if (!texts.empty()) throw DataError(where + ": mixes tokens and response records");
      try {
        token_lists.push_back(t->get<std::vector<std::string>>());
      } catch (const json::exception&) {
        throw DataError(where + ": tokens must be an array of strings");
      }
    } else if (auto r = j.find("response"); r != j.end() && r->is_string()) {
      if (!token_lists.empty()) throw DataError(where + ": mixes tokens and response records");
      texts.push_back(r->get<std::string>());
    } else {
      throw DataError(where + ": expected \"response\" or \"tokens\"");
    }
  });
  if (c.per_source) {
    auto picks = diagnostics::sample_per_source(sources, *c.per_source, c.seed);
    if (!texts.empty()) {
      std::vector<std::string> kept;
      for (auto i : picks) kept.push_back(std::move(texts[i]));
      texts = std::move(kept);
    } else {
      std::vector<std::vector<std::string>> kept;
      for (auto i : picks) kept.push_back(std::move(token_lists[i]));
      token_lists = std::move(kept);
    }
  }
  try {
    if (!token_lists.empty()) return diagnostics::token_distribution(token_lists);
    return diagnostics::token_distribution(texts, c.tokenizer, c.reward_workers);
  } catch (const diagnostics::EmptyCorpus&) {
    throw DataError("corpus '" + path + "' contains no tokens");
  }
}

std::vector<std::string> load_texts(const std::string& path) {
  std::vector<std::string> out;
  io::for_each_jsonl(path, [&](const json& j, std::size_t) {
    if (auto r = j.find("response"); r != j.end() && r->is_string()) out.push_back(r->get<std::string>());
  });
  return out;
}

json run_diagnose(const Command& cmd) {
  const auto& c = cmd.config;
  auto p = load_distribution(cmd.corpus, c);
  std::optional<diagnostics::TokenDistribution> q;
  if (cmd.against) q = load_distribution(*cmd.against, c);

  std::vector<std::pair<std::string, std::string>> rows;
  auto add = [&](std::string name, double v) { rows.emplace_back(std::move(name), text::format_double(v)); };
  auto add_count = [&](std::string name, std::size_t v) { rows.emplace_back(std::move(name), std::to_string(v)); };

  auto describe = [&](const std::string& label, const diagnostics::TokenDistribution& d, const std::string& path) {
    add_count("total_tokens_" + label, d.total_tokens);
    add_count("support_size_" + label, d.support_size);
    add("entropy_nats_" + label, diagnostics::entropy(d));
    auto top = diagnostics::topk_cumulative(d, c.topk);
    add("top" + std::to_string(c.topk) + "_cumulative_" + label, top.empty() ? 0.0 : top.back().cumulative);
    for (const auto& [expr, n] : diagnostics::aha_frequency(load_texts(path))) {
      add_count("aha_" + expr + "_" + label, n);
    }
  };
  describe("corpus", p, cmd.corpus);
  if (q) {
    describe("against", *q, *cmd.against);
    add("kl_nats_corpus_against", diagnostics::kl_divergence(p, *q, c.smoothing));
  }

  io::write_atomic(cmd.out, [&](std::ostream& out) {
    out << "metric,value\n";
    for (const auto& [k, v] : rows) out << csv_field(k) << ',' << v << '\n';
  });

  std::string topk_path = cmd.topk_out ? *cmd.topk_out : cmd.out + ".topk.csv";
  io::write_atomic(topk_path, [&](std::ostream& out) {
    out << "corpus,rank,token,prob,cumulative\n";
    auto table = [&](const std::string& label, const diagnostics::TokenDistribution& d) {
      std::size_t rank = 1;
      for (const auto& e : diagnostics::topk_cumulative(d, c.topk)) {
        out << label << ',' << rank++ << ',' << csv_field(e.token) << ',' << text::format_double(e.prob) << ','
            << text::format_double(e.cumulative) << '\n';
      }
    };
    table("corpus", p);
    if (q) table("against", *q);
  });

  json summary{{"entropy_corpus", diagnostics::entropy(p)}, {"out", cmd.out}, {"topk_out", topk_path}};
  if (q) summary["kl_nats"] = diagnostics::kl_divergence(p, *q, c.smoothing);
  return summary;
}

const char* command_name(Subcommand k) {
  switch (k) {
    case Subcommand::Curate: return "curate";
    case Subcommand::Pipeline: return "pipeline";
    case Subcommand::Reward: return "reward";
    case Subcommand::Train: return "train";
    case Subcommand::Diagnose: return "diagnose";
    case Subcommand::ValidateConfig: return "validate-config";
  }
  return "?";
}

}  // namespace

int execute(const Command& cmd, std::ostream& out, std::ostream& err) {
  json summary;
  int code = kExitOk;
  std::string error;
  try {
    cmd.config.validate();
    switch (cmd.kind) {
      case Subcommand::Curate: summary = run_curate(cmd); break;
      case Subcommand::Pipeline: summary = run_pipeline_command(cmd); break;
      case Subcommand::Reward:
        summary = cmd.task ? run_reward_one_shot(cmd, out) : run_reward_files(cmd);
        break;
      case Subcommand::Train: summary = run_train(cmd); break;
      case Subcommand::Diagnose: summary = run_diagnose(cmd); break;
      case Subcommand::ValidateConfig:
        summary = {{"config", cmd.config_path.value_or("")}, {"seed", cmd.config.seed}};
        break;
    }
  } catch (const ConfigError& e) {
    code = kExitUsage;
    error = e.what();
  } catch (const std::exception& e) {
    code = kExitData;
    error = e.what();
  }
  json line{{"command", command_name(cmd.kind)}, {"status", code == kExitOk ? "ok" : "error"}};
  if (code != kExitOk) {
    err << "error: " << error << '\n';
    line["error"] = error;
    line["exit_code"] = code;
  } else {
    line.update(summary);
  }
  out << line.dump() << '\n';
  return code;
}

}  // namespace mixrl::cli
