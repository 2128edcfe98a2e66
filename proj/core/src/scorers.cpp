#include "mixrl/scorers.hpp"

#include <cstdint>

#include "mixrl/text.hpp"

namespace mixrl::reward {

TableScorer::TableScorer(std::map<std::string, double> table, double fallback)
    : table_(std::move(table)), fallback_(fallback) {}

void TableScorer::set(std::string answer, double score) {
  table_[std::string(text::trim(answer))] = score;
}

double TableScorer::score(const ScoringContext&, std::string_view answer) {
  auto it = table_.find(std::string(text::trim(answer)));
  return it == table_.end() ? fallback_ : it->second;
}

double HashScorer::score(const ScoringContext& context, std::string_view answer) {
  std::uint64_t h = text::fnv1a(text::trim(answer), text::fnv1a(context.question));
  return scale_ * static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace mixrl::reward
