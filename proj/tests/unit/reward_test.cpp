#include <gtest/gtest.h>

#include <cmath>

#include "mixrl/reward.hpp"
#include "mixrl/scorers.hpp"

using namespace mixrl;
using namespace mixrl::reward;

namespace {

SampleRecord sample(TaskKind task, GoldTarget gold) {
  SampleRecord s;
  s.id = "s";
  s.question = "q";
  s.task = task;
  s.gold = std::move(gold);
  return s;
}

class FailingScorer final : public ScorerClient {
 public:
  double score(const ScoringContext&, std::string_view) override { throw ScorerError("down"); }
};

}  // namespace

TEST(Extraction, SplitsThinkAndAnswer) {
  auto e = extract_structured_answer("<think>steps</think> The answer is B", TaskKind::Mcq);
  ASSERT_TRUE(e.ok());
  EXPECT_EQ(*e.think, "steps");
  EXPECT_EQ(e.answer, "The answer is B");
}

TEST(Extraction, MalformedInputs) {
  for (const char* raw : {"", "<think>unterminated", "no tags at all", "</think>x<think>y",
                          "<think>a</think><think>b</think>c", "<think>a</think>   "}) {
    EXPECT_FALSE(extract_structured_answer(raw, TaskKind::Digit).ok()) << raw;
  }
}

TEST(Digit, Examples) {
  EXPECT_EQ(reward_digit("3", 3), 1.0);
  EXPECT_EQ(reward_digit("There are 4 cubes", 4), 1.0);
  EXPECT_EQ(reward_digit("about 5", 4), 0.0);
  EXPECT_EQ(reward_digit("no number", 4), 0.0);
}

TEST(Digit, LastIntegerWins) {
  EXPECT_EQ(last_integer("3 red and 5 blue, total 8"), 8);
  EXPECT_EQ(last_integer("-2"), -2);
  EXPECT_FALSE(last_integer("none").has_value());
}

TEST(Mcq, Examples) {
  EXPECT_EQ(reward_mcq("(a)", 'A'), 1.0);
  EXPECT_EQ(reward_mcq("B)", 'B'), 1.0);
  EXPECT_EQ(reward_mcq("C", 'B'), 0.0);
  EXPECT_EQ(reward_mcq("C.", 'C'), 1.0);
}

TEST(Mcq, DecoratedLetterBeatsArticle) {
  EXPECT_EQ(extract_option_letter("I think the answer is (b)"), 'B');
  EXPECT_EQ(extract_option_letter("a"), 'A');
  EXPECT_FALSE(extract_option_letter("").has_value());
}

TEST(Math, Examples) {
  EXPECT_EQ(reward_math("the volume is 1/2", "0.5"), 1.0);
  EXPECT_EQ(reward_math("x = 2", "2"), 1.0);
  EXPECT_EQ(reward_math("7", "8"), 0.0);
  EXPECT_EQ(reward_math("so \\boxed{\\frac{3}{4}}", "0.75"), 1.0);
}

TEST(Iou, Examples) {
  auto gold = *BBox::make(1, 1, 3, 3);
  EXPECT_DOUBLE_EQ(reward_iou("[1,1,3,3]", gold), 1.0);
  EXPECT_EQ(reward_iou("[5,5,6,6]", gold), 0.0);
  EXPECT_NEAR(reward_iou("[0,0,2,2]", gold), 1.0 / 7.0, 1e-12);
  EXPECT_EQ(reward_iou("no box", gold), 0.0);
}

TEST(Iou, InvertedCornersAreSwapped) {
  auto b = parse_bbox("(3, 3), (1, 1)");
  ASSERT_TRUE(b.has_value());
  EXPECT_EQ(*b, *BBox::make(1, 1, 3, 3));
}

TEST(Iou, Symmetric) {
  auto a = *BBox::make(0, 0, 4, 3), b = *BBox::make(2, 1, 7, 9);
  EXPECT_DOUBLE_EQ(iou(a, b), iou(b, a));
}

TEST(OpenEnded, Examples) {
  EXPECT_EQ(open_ended_value(0.0, 0.5), 0.0);
  EXPECT_EQ(open_ended_value(-1.0, 0.5), 0.0);
  EXPECT_NEAR(open_ended_value(0.693147, 1.0), 0.5, 1e-6);
  EXPECT_THROW(open_ended_value(1.0, 0.0), ConfigurationError);
}

TEST(OpenEnded, UsesScorerDifference) {
  TableScorer scorer({{"cand", 3.0}, {"ref", 1.0}});
  double v = reward_open_ended("cand", "ref", {"q", ""}, scorer, 0.5);
  EXPECT_NEAR(v, 1.0 - std::exp(-1.0), 1e-12);
  EXPECT_EQ(reward_open_ended("ref", "cand", {"q", ""}, scorer, 0.5), 0.0);
}

TEST(OpenEnded, ScorerFailureIsUnavailable) {
  FailingScorer scorer;
  EXPECT_THROW(reward_open_ended("a", "b", {}, scorer), RewardUnavailable);
}

TEST(Mixed, MalformedIsZeroForEveryTask) {
  EXPECT_EQ(mixed_reward(sample(TaskKind::Digit, std::int64_t{3}), "3", nullptr).value, 0.0);
  auto o = mixed_reward(sample(TaskKind::Mcq, 'A'), "(a)", nullptr);
  EXPECT_EQ(o.value, 0.0);
  EXPECT_EQ(o.extraction.status, ExtractionStatus::MalformedFormat);
  // Malformed open-ended never reaches the scorer.
  FailingScorer failing;
  EXPECT_EQ(mixed_reward(sample(TaskKind::OpenEnded, std::string("r")), "x", &failing).value, 0.0);
}

TEST(Mixed, Dispatch) {
  EXPECT_EQ(mixed_reward(sample(TaskKind::Digit, std::int64_t{3}), "<think>count</think> 3", nullptr).value, 1.0);
  auto o = mixed_reward(sample(TaskKind::Mcq, 'A'), "<think>hm</think>(a)", nullptr);
  EXPECT_EQ(o.value, 1.0);
  EXPECT_EQ(o.source, TaskKind::Mcq);
}

TEST(Mixed, OpenEndedWithoutScorerIsConfigurationError) {
  EXPECT_THROW(mixed_reward(sample(TaskKind::OpenEnded, std::string("r")), "<think>t</think>a", nullptr),
               ConfigurationError);
}

TEST(Mixed, GoldThatDoesNotFitIsRecordError) {
  EXPECT_THROW(mixed_reward(sample(TaskKind::Digit, 'A'), "<think>t</think>3", nullptr), RecordError);
}

TEST(Batch, KeepsInputOrderAndReportsUnavailable) {
  std::vector<SampleRecord> samples;
  std::vector<std::string> raws;
  for (int i = 0; i < 40; ++i) {
    samples.push_back(sample(TaskKind::Digit, std::int64_t{i}));
    raws.push_back("<think>t</think>" + std::to_string(i % 2 == 0 ? i : i + 1));
  }
  std::vector<const SampleRecord*> ptrs;
  for (auto& s : samples) ptrs.push_back(&s);
  auto out = mixed_reward_batch(ptrs, raws, nullptr, 0.5, 4);
  ASSERT_EQ(out.size(), 40u);
  for (int i = 0; i < 40; ++i) {
    EXPECT_EQ(std::get<RewardOutcome>(out[i]).value, i % 2 == 0 ? 1.0 : 0.0);
  }

  FailingScorer failing;
  auto open = sample(TaskKind::OpenEnded, std::string("r"));
  auto failed = mixed_reward_batch({&open}, {"<think>t</think>a"}, &failing, 0.5, 2);
  EXPECT_TRUE(std::holds_alternative<std::string>(failed[0]));
}

TEST(HashScorer, DeterministicAndBounded) {
  HashScorer s(10.0);
  double a = s.score({"q", "i"}, "answer");
  EXPECT_EQ(a, s.score({"q", "i"}, "answer"));
  EXPECT_GE(a, 0.0);
  EXPECT_LT(a, 10.0);
}
