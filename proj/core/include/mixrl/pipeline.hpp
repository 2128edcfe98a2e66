#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixrl/prompts.hpp"
#include "mixrl/sample_record.hpp"

namespace mixrl::pipeline {

// Stages a record passes through, in order. Metadata is the input state.
enum class Stage { Metadata, Captioned, Distilled, Rewritten, Verified, Split };

std::string_view stage_name(Stage s);
Stage parse_stage(std::string_view name);  // throws std::invalid_argument

// Transport or model failure. Retryable errors are attempted again up to
// PipelineConfig::max_retries times before the record is quarantined.
class ClientError : public std::runtime_error {
 public:
  ClientError(const std::string& what, bool retryable) : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

// Every request carries a stable id ("<stage>/<record id>") so remote
// backends can deduplicate, plus the fully rendered prompt.
struct Request {
  std::string request_id;
  std::string prompt;
};

struct Distillation {
  std::string reasoning;
  std::string answer;
};

// One interface for the four model roles. Structured arguments are passed
// alongside the prompt so offline implementations need not parse it.
class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual std::string caption(const Request& req, std::string_view image_ref) = 0;
  // `extra` carries dataset-specific hints; the mock uses it for the gold answer.
  virtual Distillation distill(const Request& req, std::string_view caption, std::string_view question,
                               std::string_view extra) = 0;
  virtual std::string rewrite(const Request& req, std::string_view text) = 0;
  virtual std::string verify(const Request& req, std::string_view gold, std::string_view pred) = 0;
  virtual bool thread_safe() const { return false; }
};

struct ClientSet {
  ModelClient* captioner = nullptr;
  ModelClient* distiller = nullptr;
  ModelClient* rewriter = nullptr;
  ModelClient* verifier = nullptr;

  static ClientSet all(ModelClient& c) { return {&c, &c, &c, &c}; }
};

// Sends the verification prompt; true iff the reply is "yes" after trimming
// and lowercasing. Replies other than yes/no are logged as warnings.
// ClientError propagates.
bool verify_answer(ModelClient& client, const std::string& request_id, std::string_view gold, std::string_view pred);

struct Failure {
  std::string id;
  Stage stage = Stage::Metadata;  // stage that was being attempted
  std::string reason;

  friend bool operator==(const Failure&, const Failure&) = default;
};

// A record in flight. `caption` is empty until captioned (or when skipped).
struct WorkItem {
  SampleRecord record;
  std::string caption;
};

struct PipelineConfig {
  std::size_t workers = 1;
  std::size_t max_gap = 15;
  int max_retries = 2;
  // Sources whose questions are self-contained; captioning is skipped for them.
  std::set<std::string> skip_caption_sources;
  // Stage files and checkpoint.json go here when set.
  std::optional<std::filesystem::path> checkpoint_dir;
  // Continue from checkpoint_dir/checkpoint.json if it exists.
  bool resume = false;
  // Stop once this stage is complete (used to simulate interruption).
  std::optional<Stage> stop_after;
};

struct PipelineResult {
  std::vector<SampleRecord> sft;
  std::vector<SampleRecord> rl;
  std::vector<Failure> failures;
  Stage reached = Stage::Metadata;
  nlohmann::json manifest;  // per-stage survivor counts, split sizes, failures

  bool complete() const { return reached == Stage::Split; }
};

// caption -> distill -> rewrite (+ length-gap filter) -> verify -> split.
// Records are processed independently and merged back in input order.
// Throws std::invalid_argument on duplicate ids or missing clients.
PipelineResult run_pipeline(const std::vector<SampleRecord>& metadata, const ClientSet& clients,
                            const PipelineConfig& config);

// Writes sft.jsonl, rl.jsonl, failures.jsonl and manifest.json atomically.
void write_pipeline_outputs(const PipelineResult& result, const std::filesystem::path& dir);

nlohmann::json failure_to_json(const Failure& f);

// Offline client: deterministic functions of the inputs.
struct MockOptions {
  std::set<std::string> reject_ids;        // verifier answers "No"
  std::set<std::string> inflate_ids;       // rewriter appends `inflate_words` words
  std::size_t inflate_words = 20;
  std::set<std::string> failing_ids;       // every call raises a non-retryable ClientError
  std::set<std::string> flaky_ids;         // first call per stage raises a retryable ClientError
};

class MockModelClient final : public ModelClient {
 public:
  explicit MockModelClient(MockOptions options = {});

  std::string caption(const Request& req, std::string_view image_ref) override;
  Distillation distill(const Request& req, std::string_view caption, std::string_view question,
                       std::string_view extra) override;
  std::string rewrite(const Request& req, std::string_view text) override;
  std::string verify(const Request& req, std::string_view gold, std::string_view pred) override;
  bool thread_safe() const override { return true; }

 private:
  void maybe_fail(const Request& req);

  MockOptions options_;
  struct FlakyState;
  std::shared_ptr<FlakyState> flaky_;
};

// Reasoning phrase the mock distiller inserts for roughly a third of ids.
inline constexpr std::string_view kMockAhaPhrase = "Wait, let me double-check that.";

// JSON over HTTP: POST {"role", "prompt", "request_id"} to the endpoint,
// expect {"text": ...}. Distillation replies are split on the think tags.
class HttpModelClient final : public ModelClient {
 public:
  explicit HttpModelClient(std::string url, double timeout_s = 60.0);
  ~HttpModelClient() override;

  std::string caption(const Request& req, std::string_view image_ref) override;
  Distillation distill(const Request& req, std::string_view caption, std::string_view question,
                       std::string_view extra) override;
  std::string rewrite(const Request& req, std::string_view text) override;
  std::string verify(const Request& req, std::string_view gold, std::string_view pred) override;
  bool thread_safe() const override { return true; }

 private:
  std::string post(std::string_view role, const Request& req);

  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mixrl::pipeline
