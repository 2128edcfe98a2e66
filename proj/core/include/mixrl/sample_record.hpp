#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "mixrl/task_kind.hpp"

namespace mixrl {

// Axis-aligned box; construct through make() to enforce x2 > x1, y2 > y1.
struct BBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  // Swaps inverted corners; nullopt for non-finite or zero-area boxes.
  static std::optional<BBox> make(double ax, double ay, double bx, double by);

  double area() const { return (x2 - x1) * (y2 - y1); }
  friend bool operator==(const BBox&, const BBox&) = default;
};

// Gold payload; which alternative is live is determined by the task kind.
// Digit -> int64, Mcq -> char 'A'..'Z', BBox -> BBox,
// MathExpr -> expression text, OpenEnded -> reference answer text.
using GoldTarget = std::variant<std::monostate, std::int64_t, char, std::string, BBox>;

class RecordError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SampleRecord {
  std::string id;
  std::string image_ref;
  std::string question;
  std::string reasoning;
  std::string answer;
  std::string source;
  TaskKind task = TaskKind::OpenEnded;
  GoldTarget gold;
};

// Throws RecordError when the gold payload does not fit the task kind.
void validate_gold(TaskKind task, const GoldTarget& gold);

// Parses the JSON gold field for `task` (strings, numbers or [x1,y1,x2,y2]).
GoldTarget parse_gold(TaskKind task, const nlohmann::json& gold);
nlohmann::json gold_to_json(const GoldTarget& gold);

// Canonical text of a gold target ("3", "A", expression, "[x1,y1,x2,y2]", reference).
std::string gold_to_text(const GoldTarget& gold);

// Normalizes "A", "a", "(a)", "A)", "A." to 'A'; nullopt otherwise.
std::optional<char> normalize_option_letter(std::string_view token);

SampleRecord sample_from_json(const nlohmann::json& j);
nlohmann::json sample_to_json(const SampleRecord& s);

}  // namespace mixrl
