#include "mixrl/pipeline.hpp"

#include <array>
#include <fstream>
#include <mutex>
#include <sstream>
#include <variant>

#include "mixrl/curation.hpp"
#include "mixrl/io.hpp"
#include "mixrl/log.hpp"
#include "mixrl/parallel.hpp"
#include "mixrl/reward.hpp"
#include "mixrl/text.hpp"

namespace mixrl::pipeline {

namespace {

constexpr std::array<std::string_view, 6> kStageNames = {"metadata", "captioned", "distilled",
                                                         "rewritten", "verified", "split"};

// Serializes calls into a client that is not thread-safe.
class ClientGuard {
 public:
  explicit ClientGuard(ModelClient* c) : client_(c) {}
  template <typename F>
  auto call(F&& f) {
    if (client_->thread_safe()) return f(*client_);
    std::lock_guard lock(mutex_);
    return f(*client_);
  }

 private:
  ModelClient* client_;
  std::mutex mutex_;
};

template <typename F>
auto with_retries(int max_retries, F&& f) {
  for (int attempt = 0;; ++attempt) {
    try {
      return f();
    } catch (const ClientError& e) {
      if (!e.retryable() || attempt >= max_retries) throw;
    }
  }
}

std::string request_id(Stage s, const std::string& id) { return std::string(stage_name(s)) + "/" + id; }

nlohmann::json item_to_json(const WorkItem& w) {
  auto j = sample_to_json(w.record);
  j["caption"] = w.caption;
  return j;
}

WorkItem item_from_json(const nlohmann::json& j) {
  WorkItem w;
  w.record = sample_from_json(j);
  w.caption = j.value("caption", "");
  return w;
}

Failure failure_from_json(const nlohmann::json& j) {
  return {j.at("id").get<std::string>(), parse_stage(j.at("stage").get<std::string>()),
          j.at("reason").get<std::string>()};
}

std::string raw_response(const SampleRecord& r) {
  return std::string(reward::kThinkOpen) + r.reasoning + std::string(reward::kThinkClose) + "\n" + r.answer;
}

// Stage bodies mutate the item and return a failure reason, or nothing on success.
using StageFn = std::function<std::optional<std::string>(WorkItem&)>;

struct Runner {
  const ClientSet& clients;
  const PipelineConfig& config;
  ClientGuard captioner{clients.captioner};
  ClientGuard distiller{clients.distiller};
  ClientGuard rewriter{clients.rewriter};
  ClientGuard verifier{clients.verifier};

  std::optional<std::string> caption(WorkItem& w) {
    if (config.skip_caption_sources.count(w.record.source)) return std::nullopt;
    Request req{request_id(Stage::Captioned, w.record.id), render_prompt(PromptTemplate::Caption, {})};
    w.caption = with_retries(config.max_retries, [&] {
      return captioner.call([&](ModelClient& c) { return c.caption(req, w.record.image_ref); });
    });
    if (text::trim(w.caption).empty()) return "empty caption";
    return std::nullopt;
  }

  std::optional<std::string> distill(WorkItem& w) {
    Request req{request_id(Stage::Distilled, w.record.id),
                render_prompt(PromptTemplate::Distill, {{"caption", w.caption}, {"question", w.record.question}})};
    auto extra = gold_to_text(w.record.gold);
    auto d = with_retries(config.max_retries, [&] {
      return distiller.call([&](ModelClient& c) { return c.distill(req, w.caption, w.record.question, extra); });
    });
    if (text::trim(d.answer).empty()) return "distillation produced no answer";
    w.record.reasoning = std::move(d.reasoning);
    w.record.answer = std::move(d.answer);
    return std::nullopt;
  }

  std::optional<std::string> rewrite(WorkItem& w) {
    const std::string raw = raw_response(w.record);
    Request req{request_id(Stage::Rewritten, w.record.id),
                render_prompt(PromptTemplate::Rewrite, {{"input", raw}})};
    auto out = with_retries(config.max_retries, [&] {
      return rewriter.call([&](ModelClient& c) { return c.rewrite(req, raw); });
    });
    if (!curation::length_gap_filter(raw, out, config.max_gap)) {
      auto a = text::word_count(raw), b = text::word_count(out);
      return "length gap " + std::to_string(a > b ? a - b : b - a) + " words exceeds " +
             std::to_string(config.max_gap);
    }
    auto ext = reward::extract_structured_answer(out, w.record.task);
    if (!ext.ok()) return "rewrite broke the think/answer format";
    w.record.reasoning = ext.think.value_or("");
    w.record.answer = std::move(ext.answer);
    return std::nullopt;
  }

  std::optional<std::string> verify(WorkItem& w) {
    auto gold = gold_to_text(w.record.gold);
    bool ok = with_retries(config.max_retries, [&] {
      return verifier.call([&](ModelClient& c) {
        return verify_answer(c, request_id(Stage::Verified, w.record.id), gold, w.record.answer);
      });
    });
    if (!ok) return "verifier rejected the answer";
    return std::nullopt;
  }

  // Runs one stage over all items; survivors keep input order.
  std::vector<WorkItem> run(Stage stage, std::vector<WorkItem> items, std::vector<Failure>& failures) {
    StageFn fn;
    switch (stage) {
      case Stage::Captioned: fn = [this](WorkItem& w) { return caption(w); }; break;
      case Stage::Distilled: fn = [this](WorkItem& w) { return distill(w); }; break;
      case Stage::Rewritten: fn = [this](WorkItem& w) { return rewrite(w); }; break;
      case Stage::Verified: fn = [this](WorkItem& w) { return verify(w); }; break;
      default: throw std::logic_error("not a record stage");
    }
    std::vector<std::optional<std::string>> reasons(items.size());
    parallel_for(items.size(), config.workers, [&](std::size_t i) {
      try {
        reasons[i] = fn(items[i]);
      } catch (const std::exception& e) {
        reasons[i] = std::string("client error: ") + e.what();
      }
    });
    std::vector<WorkItem> survivors;
    survivors.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (reasons[i]) {
        failures.push_back({items[i].record.id, stage, *reasons[i]});
      } else {
        survivors.push_back(std::move(items[i]));
      }
    }
    return survivors;
  }
};

std::uint64_t fingerprint(const std::vector<SampleRecord>& metadata) {
  std::uint64_t h = text::fnv1a("");
  for (const auto& r : metadata) h = text::fnv1a(sample_to_json(r).dump(), h);
  return h;
}

struct Checkpoint {
  Stage stage = Stage::Metadata;
  std::vector<WorkItem> items;
  std::vector<Failure> failures;
  std::vector<std::size_t> counts;  // survivors after each completed stage
};

std::filesystem::path stage_file(const std::filesystem::path& dir, Stage s) {
  return dir / ("stage_" + std::string(stage_name(s)) + ".jsonl");
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& cp, std::uint64_t fp) {
  io::write_atomic(stage_file(dir, cp.stage), [&](std::ostream& out) {
    for (const auto& w : cp.items) out << item_to_json(w).dump() << '\n';
  });
  nlohmann::json j;
  j["stage"] = std::string(stage_name(cp.stage));
  j["input_fingerprint"] = fp;
  j["counts"] = cp.counts;
  j["failures"] = nlohmann::json::array();
  for (const auto& f : cp.failures) j["failures"].push_back(failure_to_json(f));
  io::write_atomic(dir / "checkpoint.json", j.dump(2) + "\n");
}

std::optional<Checkpoint> load_checkpoint(const std::filesystem::path& dir, std::uint64_t fp) {
  auto path = dir / "checkpoint.json";
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto j = nlohmann::json::parse(io::read_file(path));
  if (j.at("input_fingerprint").get<std::uint64_t>() != fp) {
    throw std::invalid_argument("checkpoint in '" + dir.string() + "' was written for different input");
  }
  Checkpoint cp;
  cp.stage = parse_stage(j.at("stage").get<std::string>());
  cp.counts = j.at("counts").get<std::vector<std::size_t>>();
  for (const auto& f : j.at("failures")) cp.failures.push_back(failure_from_json(f));
  io::for_each_jsonl(stage_file(dir, cp.stage),
                     [&](const nlohmann::json& rec, std::size_t) { cp.items.push_back(item_from_json(rec)); });
  return cp;
}

nlohmann::json build_manifest(const PipelineResult& r, const std::vector<std::size_t>& counts) {
  nlohmann::json m;
  m["complete"] = r.complete();
  m["reached"] = std::string(stage_name(r.reached));
  m["stages"] = nlohmann::json::array();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    m["stages"].push_back({{"stage", std::string(kStageNames[i])}, {"survivors", counts[i]}});
  }
  if (r.complete()) m["split"] = {{"sft", r.sft.size()}, {"rl", r.rl.size()}};
  m["failures"] = nlohmann::json::array();
  for (const auto& f : r.failures) m["failures"].push_back(failure_to_json(f));
  return m;
}

}  // namespace

std::string_view stage_name(Stage s) { return kStageNames.at(static_cast<std::size_t>(s)); }

Stage parse_stage(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return static_cast<Stage>(i);
  }
  throw std::invalid_argument("unknown pipeline stage '" + std::string(name) + "'");
}

nlohmann::json failure_to_json(const Failure& f) {
  return {{"id", f.id}, {"stage", std::string(stage_name(f.stage))}, {"reason", f.reason}};
}

bool verify_answer(ModelClient& client, const std::string& request_id, std::string_view gold, std::string_view pred) {
  Request req{request_id,
              render_prompt(PromptTemplate::Verify, {{"gold", std::string(gold)}, {"pred", std::string(pred)}})};
  const auto raw = client.verify(req, gold, pred);
  auto reply = text::to_lower(text::trim(raw));
  if (reply == "yes") return true;
  if (reply != "no") log_warning("verifier reply for " + request_id + " is neither yes nor no: '" + raw + "'");
  return false;
}

PipelineResult run_pipeline(const std::vector<SampleRecord>& metadata, const ClientSet& clients,
                            const PipelineConfig& config) {
  if (!clients.captioner || !clients.distiller || !clients.rewriter || !clients.verifier) {
    throw std::invalid_argument("pipeline needs a client for every role");
  }
  {
    std::set<std::string> seen;
    for (const auto& r : metadata) {
      if (!seen.insert(r.id).second) throw std::invalid_argument("duplicate record id '" + r.id + "'");
    }
  }
  if (config.resume && !config.checkpoint_dir) throw std::invalid_argument("resume requires a checkpoint directory");

  const auto fp = fingerprint(metadata);
  Checkpoint cp;
  std::optional<Checkpoint> loaded;
  if (config.resume) loaded = load_checkpoint(*config.checkpoint_dir, fp);
  if (loaded) {
    cp = std::move(*loaded);
  } else {
    cp.counts.push_back(metadata.size());
    for (const auto& r : metadata) {
      if (std::holds_alternative<std::monostate>(r.gold)) {
        cp.failures.push_back({r.id, Stage::Metadata, "record has no gold target"});
      } else {
        cp.items.push_back({r, ""});
      }
    }
  }
  if (config.checkpoint_dir) std::filesystem::create_directories(*config.checkpoint_dir);

  Runner runner{clients, config};
  PipelineResult result;
  for (Stage s : {Stage::Captioned, Stage::Distilled, Stage::Rewritten, Stage::Verified}) {
    if (static_cast<int>(s) <= static_cast<int>(cp.stage)) continue;
    if (config.stop_after && static_cast<int>(cp.stage) >= static_cast<int>(*config.stop_after)) break;
    cp.items = runner.run(s, std::move(cp.items), cp.failures);
    cp.stage = s;
    cp.counts.push_back(cp.items.size());
    if (config.checkpoint_dir) save_checkpoint(*config.checkpoint_dir, cp, fp);
  }

  result.failures = cp.failures;
  result.reached = cp.stage;
  bool stop = config.stop_after && static_cast<int>(cp.stage) >= static_cast<int>(*config.stop_after);
  if (cp.stage == Stage::Verified && !stop) {
    std::vector<SampleRecord> records;
    records.reserve(cp.items.size());
    for (auto& w : cp.items) records.push_back(std::move(w.record));
    auto split = curation::split_sft_rl(std::move(records));
    result.sft = std::move(split.sft);
    result.rl = std::move(split.rl);
    result.reached = Stage::Split;
  }
  result.manifest = build_manifest(result, cp.counts);
  return result;
}

void write_pipeline_outputs(const PipelineResult& result, const std::filesystem::path& dir) {
  auto write_records = [&](const char* name, const std::vector<SampleRecord>& rs) {
    io::write_atomic(dir / name, [&](std::ostream& out) {
      for (const auto& r : rs) out << sample_to_json(r).dump() << '\n';
    });
  };
  write_records("sft.jsonl", result.sft);
  write_records("rl.jsonl", result.rl);
  io::write_atomic(dir / "failures.jsonl", [&](std::ostream& out) {
    for (const auto& f : result.failures) out << failure_to_json(f).dump() << '\n';
  });
  io::write_atomic(dir / "manifest.json", result.manifest.dump(2) + "\n");
}

}  // namespace mixrl::pipeline
