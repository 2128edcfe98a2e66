#include <gtest/gtest.h>

#include <cmath>

#include "mixrl/diagnostics.hpp"

using namespace mixrl::diagnostics;

namespace {

TokenDistribution dist(std::vector<std::string> texts) { return token_distribution(texts, Tokenizer::Whitespace); }

}  // namespace

TEST(Distribution, Examples) {
  auto d = dist({"a b", "b"});
  EXPECT_DOUBLE_EQ(d.prob("a"), 1.0 / 3);
  EXPECT_DOUBLE_EQ(d.prob("b"), 2.0 / 3);
  EXPECT_EQ(d.support_size, 2u);
  EXPECT_EQ(d.total_tokens, 3u);
  EXPECT_EQ(dist({"t"}).prob("t"), 1.0);
  EXPECT_EQ(dist({"x y z", "y"}).probs, dist({"x y z", "y"}).probs);
}

TEST(Distribution, ShardingDoesNotChangeResult) {
  std::vector<std::string> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back("tok" + std::to_string(i % 17) + " w" + std::to_string(i % 5));
  auto one = token_distribution(corpus, Tokenizer::Whitespace, 1);
  auto many = token_distribution(corpus, Tokenizer::Whitespace, 8);
  EXPECT_EQ(one.probs, many.probs);
}

TEST(Distribution, EmptyCorpusThrows) {
  EXPECT_THROW(dist({}), EmptyCorpus);
  EXPECT_THROW(dist({"  ", ""}), EmptyCorpus);
}

TEST(Tokenize, Bytes) {
  auto t = tokenize("a\n", Tokenizer::Bytes);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], "a");
  EXPECT_EQ(t[1], "<0x0A>");
  EXPECT_EQ(parse_tokenizer("bytes"), Tokenizer::Bytes);
  EXPECT_THROW(parse_tokenizer("bpe"), std::invalid_argument);
}

TEST(TokenKl, Examples) {
  auto p = dist({"a b"}), q = dist({"a b b b"});
  EXPECT_EQ(kl_divergence(p, p), 0.0);
  EXPECT_NEAR(kl_divergence(p, q), 0.14384, 1e-5);
}

TEST(TokenKl, DisjointSupportBoundedBySmoothing) {
  auto p = dist({"a"}), q = dist({"b"});
  double eps = 1e-9;
  double kl = kl_divergence(p, q, eps);
  // p' = ((1+eps)/(1+2eps), eps/(1+2eps)), q' mirrored.
  double hi = (1 + eps) / (1 + 2 * eps), lo = eps / (1 + 2 * eps);
  EXPECT_NEAR(kl, hi * std::log(hi / lo) + lo * std::log(lo / hi), 1e-9);
  EXPECT_TRUE(std::isfinite(kl));
  EXPECT_THROW(kl_divergence(p, q, 0.0), std::invalid_argument);
}

TEST(TokenEntropy, Examples) {
  EXPECT_NEAR(entropy(dist({"a b c d"})), std::log(4.0), 1e-12);
  EXPECT_EQ(entropy(dist({"a a a"})), 0.0);
  EXPECT_NEAR(entropy(dist({"a a b c"})), 1.0397, 1e-4);
}

TEST(Topk, Examples) {
  auto top = topk_cumulative(dist({"a b c d"}), 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_DOUBLE_EQ(top[0].cumulative, 0.25);
  EXPECT_DOUBLE_EQ(top[1].cumulative, 0.5);
  EXPECT_EQ(top[0].token, "a");  // ties by token text
  auto all = topk_cumulative(dist({"x y y z z z"}), 10);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].token, "z");
  EXPECT_NEAR(all.back().cumulative, 1.0, 1e-9);
  EXPECT_THROW(topk_cumulative(dist({"a"}), 0), std::invalid_argument);
}

TEST(AhaFrequency, Examples) {
  auto f = aha_frequency({"wait, wait"}, {"wait"});
  EXPECT_EQ(f["wait"], 2u);
  auto none = aha_frequency({"plain"});
  for (const auto& [expr, n] : none) EXPECT_EQ(n, 0u) << expr;
  EXPECT_EQ(none.size(), kDefaultAhaExpressions.size());
  EXPECT_EQ(aha_frequency({"Alternatively... WAIT"})["wait"], 1u);
  EXPECT_THROW(aha_frequency({"x"}, {}), std::invalid_argument);
}

TEST(SamplePerSource, CapsAndDeterminism) {
  std::vector<std::string> src;
  for (int i = 0; i < 30; ++i) src.push_back(i % 3 == 0 ? "a" : "b");
  auto a = sample_per_source(src, 4, 7);
  EXPECT_EQ(a, sample_per_source(src, 4, 7));
  EXPECT_EQ(a.size(), 8u);
  std::size_t na = 0;
  for (auto i : a) na += src[i] == "a";
  EXPECT_EQ(na, 4u);
  EXPECT_EQ(sample_per_source({"x", "y"}, 5, 1).size(), 2u);
}
