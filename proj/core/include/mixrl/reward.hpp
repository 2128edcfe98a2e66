#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mixrl/sample_record.hpp"
#include "mixrl/task_kind.hpp"

namespace mixrl::reward {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr double kDefaultOpenBeta = 0.5;

enum class ExtractionStatus { Ok, MalformedFormat };

struct Extraction {
  std::optional<std::string> think;
  std::string answer;
  ExtractionStatus status = ExtractionStatus::MalformedFormat;

  bool ok() const { return status == ExtractionStatus::Ok; }
};

struct RewardOutcome {
  double value = 0.0;
  TaskKind source = TaskKind::OpenEnded;
  Extraction extraction;
};

// What the scorer sees besides the answer itself.
struct ScoringContext {
  std::string question;
  std::string image_ref;
};

// Raised by scorer implementations when a score cannot be produced.
class ScorerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The open-ended reward could not be computed; the whole rollout group must be
// discarded rather than zero-filled.
class RewardUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Scalar judge for open-ended answers (unbounded output).
class ScorerClient {
 public:
  virtual ~ScorerClient() = default;
  virtual double score(const ScoringContext& context, std::string_view answer) = 0;
  // Implementations that can be called concurrently override this.
  virtual bool thread_safe() const { return false; }
};

// Serializes calls into a scorer that is not thread-safe.
class SerializedScorer final : public ScorerClient {
 public:
  explicit SerializedScorer(ScorerClient& inner) : inner_(inner) {}
  double score(const ScoringContext& context, std::string_view answer) override;
  bool thread_safe() const override { return true; }

 private:
  ScorerClient& inner_;
  std::mutex mutex_;
};

// Splits "<think>...</think> answer". Malformed unless exactly one opening tag
// precedes exactly one closing tag and a non-empty answer follows.
Extraction extract_structured_answer(std::string_view raw, TaskKind task);

// Last standalone integer in the answer, if any.
std::optional<std::int64_t> last_integer(std::string_view answer);
double reward_digit(std::string_view answer, std::int64_t gold);

// Option letter picked from an answer ("(a)", "B)", "C."); the last decorated or
// uppercase candidate wins, bare lowercase letters and "I" only as a fallback.
std::optional<char> extract_option_letter(std::string_view answer);
double reward_mcq(std::string_view answer, char gold);

double reward_math(std::string_view answer, std::string_view gold);

// First four numbers in reading order as (x1, y1, x2, y2), inverted corners swapped.
std::optional<BBox> parse_bbox(std::string_view answer);
double iou(const BBox& a, const BBox& b);
double reward_iou(std::string_view answer, const BBox& gold);

// 1 - exp(-delta * beta) for delta > 0, else 0. Throws ConfigurationError for beta <= 0.
double open_ended_value(double delta, double beta);

// Throws RewardUnavailable when the scorer fails.
double reward_open_ended(std::string_view candidate, std::string_view reference,
                         const ScoringContext& context, ScorerClient& scorer,
                         double beta = kDefaultOpenBeta);

// Format supersedence first, then dispatch on the sample's task kind.
// Throws ConfigurationError for OpenEnded without a scorer, RecordError for a
// gold payload that does not fit the task, RewardUnavailable on scorer failure.
RewardOutcome mixed_reward(const SampleRecord& sample, std::string_view raw,
                           ScorerClient* scorer, double beta = kDefaultOpenBeta);

using BatchItem = std::variant<RewardOutcome, std::string>;  // outcome or error message

// Scores raws[i] against samples[i] on `workers` threads, in input order.
// A non-thread-safe scorer is wrapped in SerializedScorer.
std::vector<BatchItem> mixed_reward_batch(const std::vector<const SampleRecord*>& samples,
                                          const std::vector<std::string>& raws,
                                          ScorerClient* scorer, double beta,
                                          std::size_t workers);

}  // namespace mixrl::reward
