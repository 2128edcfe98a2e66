#include "mixrl/task_kind.hpp"

#include <stdexcept>

namespace mixrl {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Digit: return "digit";
    case TaskKind::Mcq: return "mcq";
    case TaskKind::MathExpr: return "math";
    case TaskKind::BBox: return "bbox";
    case TaskKind::OpenEnded: return "open";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "digit") return TaskKind::Digit;
  if (name == "mcq") return TaskKind::Mcq;
  if (name == "math") return TaskKind::MathExpr;
  if (name == "bbox") return TaskKind::BBox;
  if (name == "open") return TaskKind::OpenEnded;
  throw std::invalid_argument("unknown task kind '" + std::string(name) + "'");
}

}  // namespace mixrl
