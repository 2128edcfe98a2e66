#include <gtest/gtest.h>

#include <filesystem>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include "mixrl/io.hpp"
#include "mixrl/log.hpp"
#include "mixrl/pipeline.hpp"
#include "mixrl/prompts.hpp"

namespace fs = std::filesystem;
using namespace mixrl;
using namespace mixrl::pipeline;

namespace {

std::vector<SampleRecord> load_meta(std::size_t n = 50) {
  std::vector<SampleRecord> meta;
  io::for_each_jsonl(fs::path(MIXRL_FIXTURE_DIR) / "meta50.jsonl", [&](const nlohmann::json& j, std::size_t) {
    if (meta.size() < n) meta.push_back(sample_from_json(j));
  });
  return meta;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("mixrl_pipe_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

bool contains_id(const std::vector<SampleRecord>& v, const std::string& id) {
  for (const auto& s : v) {
    if (s.id == id) return true;
  }
  return false;
}

const Failure* find_failure(const PipelineResult& r, const std::string& id) {
  for (const auto& f : r.failures) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

// Replies with a fixed verdict; other roles are served by the mock.
class FixedVerdictClient final : public ModelClient {
 public:
  explicit FixedVerdictClient(std::string reply) : reply_(std::move(reply)) {}
  std::string caption(const Request& r, std::string_view i) override { return mock_.caption(r, i); }
  Distillation distill(const Request& r, std::string_view c, std::string_view q, std::string_view e) override {
    return mock_.distill(r, c, q, e);
  }
  std::string rewrite(const Request& r, std::string_view t) override { return mock_.rewrite(r, t); }
  std::string verify(const Request&, std::string_view, std::string_view) override { return reply_; }

 private:
  MockModelClient mock_;
  std::string reply_;
};

}  // namespace

TEST(Prompts, VerifyLayout) {
  auto p = render_prompt(PromptTemplate::Verify, {{"gold", "2"}, {"pred", "2"}});
  EXPECT_NE(p.find("groundtruth:\n2"), std::string::npos);
  EXPECT_NE(p.find("answer:\n2"), std::string::npos);
}

TEST(Prompts, DistillEndsWithQuestion) {
  auto p = render_prompt(PromptTemplate::Distill, {{"caption", "a red cube"}, {"question", "How many?"}});
  EXPECT_NE(p.find("Caption:\na red cube"), std::string::npos);
  const std::string tail = "Question:\nHow many?";
  ASSERT_GE(p.size(), tail.size());
  EXPECT_EQ(p.substr(p.size() - tail.size()), tail);
}

TEST(Prompts, RewriteInput) {
  auto p = render_prompt(PromptTemplate::Rewrite, {{"input", "The caption says hi"}});
  EXPECT_NE(p.find("Here is the input:\n\nThe caption says hi"), std::string::npos);
}

TEST(Prompts, MissingPlaceholderIsNamed) {
  try {
    render_prompt(PromptTemplate::Verify, {{"gold", "2"}});
    FAIL() << "expected MissingPlaceholder";
  } catch (const MissingPlaceholder& e) {
    EXPECT_EQ(e.name(), "pred");
  }
}

TEST(Prompts, ValuesAreNotRescanned) {
  auto p = render_prompt(PromptTemplate::Verify, {{"gold", "{pred}"}, {"pred", "x"}});
  EXPECT_NE(p.find("groundtruth:\n{pred}"), std::string::npos);
}

TEST(VerifyAnswer, ClosedWorldParsing) {
  FixedVerdictClient yes(" Yes\n"), no("No"), maybe("Maybe");
  EXPECT_TRUE(verify_answer(yes, "verified/1", "2", "2"));
  EXPECT_FALSE(verify_answer(no, "verified/1", "2", "2"));

  std::vector<std::string> warnings;
  auto previous = set_log_sink([&](LogLevel level, std::string_view msg) {
    if (level == LogLevel::Warning) warnings.emplace_back(msg);
  });
  EXPECT_FALSE(verify_answer(maybe, "verified/1", "2", "2"));
  set_log_sink(previous);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("Maybe"), std::string::npos);
}

TEST(Pipeline, LosslessMockPath) {
  auto meta = load_meta(10);
  MockModelClient client;
  auto r = run_pipeline(meta, ClientSet::all(client), {});
  ASSERT_TRUE(r.complete());
  EXPECT_TRUE(r.failures.empty());
  EXPECT_EQ(r.sft.size() + r.rl.size(), 10u);
  for (const auto& st : r.manifest["stages"]) EXPECT_EQ(st["survivors"], 10) << st.dump();
}

TEST(Pipeline, RejectedRecordIsListedAsFailure) {
  auto meta = load_meta(10);
  MockOptions o;
  o.reject_ids = {meta[4].id};
  MockModelClient client(o);
  auto r = run_pipeline(meta, ClientSet::all(client), {});
  EXPECT_FALSE(contains_id(r.sft, meta[4].id));
  EXPECT_FALSE(contains_id(r.rl, meta[4].id));
  auto* f = find_failure(r, meta[4].id);
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(f->stage, Stage::Verified);
  EXPECT_NE(r.manifest["failures"].dump().find(meta[4].id), std::string::npos);
}

TEST(Pipeline, InflatedRewriteIsDroppedAtRewrite) {
  auto meta = load_meta(10);
  MockOptions o;
  o.inflate_ids = {meta[2].id};
  MockModelClient client(o);
  auto r = run_pipeline(meta, ClientSet::all(client), {});
  auto* f = find_failure(r, meta[2].id);
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(f->stage, Stage::Rewritten);
  EXPECT_EQ(r.sft.size() + r.rl.size(), 9u);
}

TEST(Pipeline, ClientFailuresAreRecordedNotDropped) {
  auto meta = load_meta(10);
  MockOptions o;
  o.failing_ids = {meta[1].id};
  o.flaky_ids = {meta[3].id};
  MockModelClient client(o);
  auto r = run_pipeline(meta, ClientSet::all(client), {});
  auto* f = find_failure(r, meta[1].id);
  ASSERT_NE(f, nullptr);
  EXPECT_NE(f->reason.find("client error"), std::string::npos);
  EXPECT_EQ(find_failure(r, meta[3].id), nullptr);  // retried and recovered
  EXPECT_EQ(r.sft.size() + r.rl.size() + r.failures.size(), 10u);
}

TEST(Pipeline, FlakyWithoutRetriesFails) {
  auto meta = load_meta(3);
  MockOptions o;
  o.flaky_ids = {meta[0].id};
  MockModelClient client(o);
  PipelineConfig cfg;
  cfg.max_retries = 0;
  auto r = run_pipeline(meta, ClientSet::all(client), cfg);
  EXPECT_NE(find_failure(r, meta[0].id), nullptr);
}

TEST(Pipeline, SkipCaptionSources) {
  auto meta = load_meta(10);
  MockModelClient client;
  PipelineConfig cfg;
  for (const auto& m : meta) cfg.skip_caption_sources.insert(m.source);
  auto r = run_pipeline(meta, ClientSet::all(client), cfg);
  for (const auto* split : {&r.sft, &r.rl}) {
    for (const auto& s : *split) EXPECT_EQ(s.reasoning.find("The caption describes"), std::string::npos);
  }
}

TEST(Pipeline, WorkerCountDoesNotChangeOutput) {
  auto meta = load_meta();
  MockModelClient client;
  PipelineConfig one, many;
  many.workers = 8;
  auto a = run_pipeline(meta, ClientSet::all(client), one);
  auto b = run_pipeline(meta, ClientSet::all(client), many);
  EXPECT_EQ(a.manifest, b.manifest);
  ASSERT_EQ(a.sft.size(), b.sft.size());
  for (std::size_t i = 0; i < a.sft.size(); ++i) EXPECT_EQ(sample_to_json(a.sft[i]), sample_to_json(b.sft[i]));
}

TEST(Pipeline, ResumeFromEveryStageIsByteIdentical) {
  auto meta = load_meta();
  MockOptions o;
  o.reject_ids = {"m05"};
  MockModelClient client(o);
  TempDir tmp;
  auto full = run_pipeline(meta, ClientSet::all(client), {});
  write_pipeline_outputs(full, tmp.path() / "full");
  for (Stage stop : {Stage::Captioned, Stage::Distilled, Stage::Rewritten, Stage::Verified}) {
    auto name = std::string(stage_name(stop));
    PipelineConfig cfg;
    cfg.checkpoint_dir = tmp.path() / ("ckpt_" + name);
    cfg.stop_after = stop;
    auto partial = run_pipeline(meta, ClientSet::all(client), cfg);
    EXPECT_FALSE(partial.complete());
    EXPECT_EQ(partial.reached, stop);
    cfg.stop_after.reset();
    cfg.resume = true;
    auto resumed = run_pipeline(meta, ClientSet::all(client), cfg);
    write_pipeline_outputs(resumed, tmp.path() / name);
    for (const char* f : {"sft.jsonl", "rl.jsonl", "failures.jsonl", "manifest.json"}) {
      EXPECT_EQ(io::read_file(tmp.path() / name / f), io::read_file(tmp.path() / "full" / f)) << name << " " << f;
    }
  }
}

TEST(Pipeline, ResumeRejectsDifferentInput) {
  auto meta = load_meta(10);
  MockModelClient client;
  TempDir tmp;
  PipelineConfig cfg;
  cfg.checkpoint_dir = tmp.path();
  cfg.stop_after = Stage::Distilled;
  run_pipeline(meta, ClientSet::all(client), cfg);
  meta.pop_back();
  cfg.stop_after.reset();
  cfg.resume = true;
  EXPECT_THROW(run_pipeline(meta, ClientSet::all(client), cfg), std::invalid_argument);
}

TEST(Pipeline, DuplicateIdsRejected) {
  auto meta = load_meta(3);
  meta[2].id = meta[0].id;
  MockModelClient client;
  EXPECT_THROW(run_pipeline(meta, ClientSet::all(client), {}), std::invalid_argument);
}

TEST(Pipeline, MissingGoldFailsAtMetadata) {
  auto meta = load_meta(3);
  meta[1].gold = std::monostate{};
  MockModelClient client;
  auto r = run_pipeline(meta, ClientSet::all(client), {});
  auto* f = find_failure(r, meta[1].id);
  ASSERT_NE(f, nullptr);
  EXPECT_EQ(f->stage, Stage::Metadata);
}

TEST(Stages, NamesRoundTrip) {
  for (Stage s : {Stage::Metadata, Stage::Captioned, Stage::Distilled, Stage::Rewritten, Stage::Verified, Stage::Split}) {
    EXPECT_EQ(parse_stage(stage_name(s)), s);
  }
  EXPECT_THROW(parse_stage("nope"), std::invalid_argument);
}

TEST(AtomicWriter, UncommittedLeavesNothing) {
  TempDir tmp;
  auto target = tmp.path() / "out.txt";
  {
    io::AtomicWriter w(target);
    w.stream() << "partial";
  }
  EXPECT_FALSE(fs::exists(target));
  EXPECT_TRUE(fs::is_empty(tmp.path()));
  io::write_atomic(target, "done");
  EXPECT_EQ(io::read_file(target), "done");
}
