#pragma once

#include <string>
#include <string_view>

namespace mixrl {

// The five verifiable reward families. Wire names: digit, mcq, math, bbox, open.
enum class TaskKind { Digit, Mcq, MathExpr, BBox, OpenEnded };

std::string_view to_string(TaskKind kind);

// Throws std::invalid_argument on an unknown name.
TaskKind parse_task_kind(std::string_view name);

}  // namespace mixrl
