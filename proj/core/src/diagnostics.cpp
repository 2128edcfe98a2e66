#include "mixrl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "mixrl/parallel.hpp"
#include "mixrl/rng.hpp"
#include "mixrl/text.hpp"

namespace mixrl::diagnostics {

namespace {

TokenDistribution normalize(const std::map<std::string, std::size_t>& counts) {
  std::size_t total = 0;
  for (const auto& [tok, c] : counts) total += c;
  if (total == 0) throw EmptyCorpus("corpus has no tokens");
  TokenDistribution d;
  d.total_tokens = total;
  d.support_size = counts.size();
  for (const auto& [tok, c] : counts) d.probs.emplace(tok, static_cast<double>(c) / static_cast<double>(total));
  return d;
}

}  // namespace

Tokenizer parse_tokenizer(std::string_view name) {
  if (name == "whitespace") return Tokenizer::Whitespace;
  if (name == "bytes") return Tokenizer::Bytes;
  throw std::invalid_argument("unknown tokenizer '" + std::string(name) + "'");
}

double TokenDistribution::prob(const std::string& token) const {
  auto it = probs.find(token);
  return it == probs.end() ? 0.0 : it->second;
}

std::vector<std::string> tokenize(std::string_view text, Tokenizer tokenizer) {
  std::vector<std::string> out;
  if (tokenizer == Tokenizer::Whitespace) {
    for (auto w : text::split_whitespace(text)) out.emplace_back(w);
    return out;
  }
  out.reserve(text.size());
  for (unsigned char c : text) {
    if (c > 0x20 && c < 0x7f) {
      out.emplace_back(1, static_cast<char>(c));
    } else {
      char buf[8];
      std::snprintf(buf, sizeof buf, "<0x%02X>", c);
      out.emplace_back(buf);
    }
  }
  return out;
}

TokenDistribution token_distribution(const std::vector<std::string>& responses, Tokenizer tokenizer,
                                     std::size_t workers) {
  workers = std::max<std::size_t>(1, std::min(workers, responses.size()));
  std::vector<std::map<std::string, std::size_t>> shards(workers);
  const std::size_t chunk = (responses.size() + workers - 1) / std::max<std::size_t>(1, workers);
  parallel_for(workers, workers, [&](std::size_t w) {
    auto end = std::min(responses.size(), (w + 1) * chunk);
    for (std::size_t i = w * chunk; i < end; ++i) {
      for (auto& t : tokenize(responses[i], tokenizer)) ++shards[w][t];
    }
  });
  std::map<std::string, std::size_t> counts;
  for (auto& s : shards) {
    for (auto& [tok, c] : s) counts[tok] += c;
  }
  return normalize(counts);
}

TokenDistribution token_distribution(const std::vector<std::vector<std::string>>& pretokenized) {
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : pretokenized) {
    for (const auto& t : seq) ++counts[t];
  }
  return normalize(counts);
}

double kl_divergence(const TokenDistribution& p, const TokenDistribution& q, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("smoothing eps must be positive");
  std::set<std::string_view> support;
  for (const auto& [t, v] : p.probs) support.insert(t);
  for (const auto& [t, v] : q.probs) support.insert(t);
  const double n = static_cast<double>(support.size());
  double p_mass = 0.0, q_mass = 0.0;
  for (const auto& [t, v] : p.probs) p_mass += v;
  for (const auto& [t, v] : q.probs) q_mass += v;
  const double zp = p_mass + eps * n, zq = q_mass + eps * n;
  double kl = 0.0;
  for (auto t : support) {
    std::string key(t);
    double ps = (p.prob(key) + eps) / zp;
    double qs = (q.prob(key) + eps) / zq;
    kl += ps * std::log(ps / qs);
  }
  // Rounding can leave a tiny negative residue for identical inputs.
  return std::max(0.0, kl);
}

double entropy(const TokenDistribution& p) {
  double h = 0.0;
  for (const auto& [t, v] : p.probs) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

std::vector<TopkEntry> topk_cumulative(const TokenDistribution& p, std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  std::vector<std::pair<std::string, double>> items(p.probs.begin(), p.probs.end());
  // probs is already ordered by token, so a stable sort keeps text order on ties.
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<TopkEntry> out;
  double running = 0.0;
  for (std::size_t i = 0; i < std::min(k, items.size()); ++i) {
    // Rounding can push the tail a few ulps past 1.
    running = std::min(1.0, running + items[i].second);
    out.push_back({items[i].first, items[i].second, running});
  }
  return out;
}

std::map<std::string, std::size_t> aha_frequency(const std::vector<std::string>& responses,
                                                 const std::vector<std::string>& expressions) {
  if (expressions.empty()) throw std::invalid_argument("expression list is empty");
  std::map<std::string, std::size_t> counts;
  std::vector<std::string> lowered_exprs;
  for (const auto& e : expressions) {
    if (text::trim(e).empty()) throw std::invalid_argument("blank aha expression");
    counts[e] = 0;
    lowered_exprs.push_back(text::to_lower(e));
  }
  for (const auto& r : responses) {
    auto lowered = text::to_lower(r);
    for (std::size_t i = 0; i < expressions.size(); ++i) {
      counts[expressions[i]] += text::count_occurrences(lowered, lowered_exprs[i]);
    }
  }
  return counts;
}

std::map<std::string, std::size_t> aha_frequency(const std::vector<std::string>& responses) {
  return aha_frequency(responses,
                       std::vector<std::string>(kDefaultAhaExpressions.begin(), kDefaultAhaExpressions.end()));
}

std::vector<std::size_t> sample_per_source(const std::vector<std::string>& sources, std::size_t n,
                                           std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < sources.size(); ++i) by_source[sources[i]].push_back(i);
  std::vector<std::size_t> out;
  for (auto& [source, idx] : by_source) {
    Rng rng(derive_seed(seed, text::fnv1a(source)));
    // Partial Fisher-Yates, then restore corpus order among the picks.
    std::size_t take = std::min(n, idx.size());
    for (std::size_t i = 0; i < take; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    out.insert(out.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

}  // namespace mixrl::diagnostics
