#include <cmath>
#include <set>
#include <stdexcept>

#include "mixrl/curation.hpp"
#include "mixrl/text.hpp"

namespace mixrl::curation {

namespace {
const std::string kStart = "<s>";

std::vector<std::string> tokens_of(std::string_view text) {
  std::vector<std::string> out;
  for (auto w : text::split_whitespace(text)) out.emplace_back(w);
  return out;
}
}  // namespace

NgramModel::NgramModel(int order, std::map<std::vector<std::string>, std::size_t> ngram_counts,
                       std::map<std::vector<std::string>, std::size_t> context_counts, std::size_t vocab_size)
    : order_(order),
      ngram_counts_(std::move(ngram_counts)),
      context_counts_(std::move(context_counts)),
      vocab_size_(vocab_size) {}

double NgramModel::log_prob(const std::vector<std::string>& context, const std::string& word) const {
  std::vector<std::string> key = context;
  auto ctx = context_counts_.find(context);
  const double c_context = ctx == context_counts_.end() ? 0.0 : static_cast<double>(ctx->second);
  key.push_back(word);
  auto ng = ngram_counts_.find(key);
  const double c_ngram = ng == ngram_counts_.end() ? 0.0 : static_cast<double>(ng->second);
  return std::log((c_ngram + 1.0) / (c_context + static_cast<double>(vocab_size_)));
}

double NgramModel::perplexity(std::string_view text) const {
  auto toks = tokens_of(text);
  if (toks.empty()) throw std::invalid_argument("perplexity of text with no tokens");
  std::vector<std::string> padded(static_cast<std::size_t>(order_ - 1), kStart);
  padded.insert(padded.end(), toks.begin(), toks.end());
  double sum = 0.0;
  for (std::size_t i = static_cast<std::size_t>(order_ - 1); i < padded.size(); ++i) {
    std::vector<std::string> context(padded.begin() + static_cast<std::ptrdiff_t>(i) - (order_ - 1),
                                     padded.begin() + static_cast<std::ptrdiff_t>(i));
    sum += log_prob(context, padded[i]);
  }
  return std::exp(-sum / static_cast<double>(toks.size()));
}

std::unique_ptr<NgramModel> ngram_train(const std::vector<std::string>& corpus, int order) {
  if (order < 1 || order > 3) throw std::invalid_argument("n-gram order must be 1, 2 or 3");
  std::map<std::vector<std::string>, std::size_t> ngrams;
  std::map<std::vector<std::string>, std::size_t> contexts;
  std::set<std::string> vocab;
  for (const auto& line : corpus) {
    auto toks = tokens_of(line);
    if (toks.empty()) continue;
    vocab.insert(toks.begin(), toks.end());
    std::vector<std::string> padded(static_cast<std::size_t>(order - 1), kStart);
    padded.insert(padded.end(), toks.begin(), toks.end());
    for (std::size_t i = static_cast<std::size_t>(order - 1); i < padded.size(); ++i) {
      std::vector<std::string> key(padded.begin() + static_cast<std::ptrdiff_t>(i) - (order - 1),
                                   padded.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      ++ngrams[key];
      key.pop_back();
      ++contexts[key];
    }
  }
  if (vocab.empty()) throw std::invalid_argument("n-gram corpus has no tokens");
  return std::make_unique<NgramModel>(order, std::move(ngrams), std::move(contexts), vocab.size());
}

}  // namespace mixrl::curation
