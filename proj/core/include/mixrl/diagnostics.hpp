#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mixrl::diagnostics {

enum class Tokenizer { Whitespace, Bytes };

Tokenizer parse_tokenizer(std::string_view name);  // "whitespace" | "bytes"

// Normalized token frequencies over a corpus.
struct TokenDistribution {
  std::map<std::string, double> probs;
  std::size_t support_size = 0;
  std::size_t total_tokens = 0;

  double prob(const std::string& token) const;
};

class EmptyCorpus : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Byte tokens are the byte itself for printable ASCII, "<0xNN>" otherwise.
std::vector<std::string> tokenize(std::string_view text, Tokenizer tokenizer);

// Counting shards across `workers` threads; the merge is order-independent.
// Throws EmptyCorpus when no response yields a token.
TokenDistribution token_distribution(const std::vector<std::string>& responses, Tokenizer tokenizer,
                                     std::size_t workers = 1);
TokenDistribution token_distribution(const std::vector<std::vector<std::string>>& pretokenized);

inline constexpr double kDefaultSmoothing = 1e-9;

// KL(p || q) in nats. Both sides are extended to the union support, each
// probability gets +eps and is renormalized. Throws std::invalid_argument for eps <= 0.
double kl_divergence(const TokenDistribution& p, const TokenDistribution& q, double eps = kDefaultSmoothing);

// Shannon entropy in nats.
double entropy(const TokenDistribution& p);

struct TopkEntry {
  std::string token;
  double prob = 0.0;
  double cumulative = 0.0;
};

inline constexpr std::size_t kDefaultTopK = 15;

// Highest-probability tokens first, ties by token text; length min(k, support).
std::vector<TopkEntry> topk_cumulative(const TokenDistribution& p, std::size_t k = kDefaultTopK);

inline constexpr std::array<std::string_view, 4> kDefaultAhaExpressions = {"alternatively", "double-check",
                                                                          "i should check", "wait"};

// Lowercase substring counts per expression (every start index counts).
// Throws std::invalid_argument for an empty or blank expression list.
std::map<std::string, std::size_t> aha_frequency(const std::vector<std::string>& responses,
                                                 const std::vector<std::string>& expressions);
std::map<std::string, std::size_t> aha_frequency(const std::vector<std::string>& responses);

// Draws up to n indices without replacement from each source label.
// Sources come out in lexicographic order, picks within a source in corpus
// order. Deterministic for a seed.
std::vector<std::size_t> sample_per_source(const std::vector<std::string>& sources, std::size_t n,
                                           std::uint64_t seed);

}  // namespace mixrl::diagnostics
