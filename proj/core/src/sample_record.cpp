#include "mixrl/sample_record.hpp"

#include <charconv>
#include <cmath>

#include <nlohmann/json.hpp>

#include "mixrl/text.hpp"

namespace mixrl {

std::optional<BBox> BBox::make(double ax, double ay, double bx, double by) {
  if (!std::isfinite(ax) || !std::isfinite(ay) || !std::isfinite(bx) || !std::isfinite(by)) {
    return std::nullopt;
  }
  if (ax > bx) std::swap(ax, bx);
  if (ay > by) std::swap(ay, by);
  if (!(bx > ax) || !(by > ay)) return std::nullopt;
  return BBox{ax, ay, bx, by};
}

std::optional<char> normalize_option_letter(std::string_view token) {
  std::string stripped;
  for (char c : token) {
    if (c == '(' || c == ')' || c == '.' || c == '[' || c == ']' || c == ':' || c == ',' ||
        c == ';' || c == '"' || c == '\'' || c == '*') {
      continue;
    }
    stripped.push_back(c);
  }
  if (stripped.size() != 1) return std::nullopt;
  char c = stripped[0];
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  if (c < 'A' || c > 'Z') return std::nullopt;
  return c;
}

void validate_gold(TaskKind task, const GoldTarget& gold) {
  bool ok = false;
  switch (task) {
    case TaskKind::Digit: ok = std::holds_alternative<std::int64_t>(gold); break;
    case TaskKind::Mcq: ok = std::holds_alternative<char>(gold); break;
    case TaskKind::BBox: ok = std::holds_alternative<BBox>(gold); break;
    case TaskKind::MathExpr:
    case TaskKind::OpenEnded:
      ok = std::holds_alternative<std::string>(gold) &&
           !text::trim(std::get<std::string>(gold)).empty();
      break;
  }
  if (!ok) {
    throw RecordError("gold target does not match task kind '" + std::string(to_string(task)) + "'");
  }
}

GoldTarget parse_gold(TaskKind task, const nlohmann::json& gold) {
  switch (task) {
    case TaskKind::Digit: {
      if (gold.is_number_integer()) return gold.get<std::int64_t>();
      if (gold.is_string()) {
        auto s = text::trim(gold.get_ref<const std::string&>());
        std::int64_t v = 0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec == std::errc{} && res.ptr == s.data() + s.size()) return v;
      }
      throw RecordError("digit gold must be an integer");
    }
    case TaskKind::Mcq: {
      if (gold.is_string()) {
        if (auto c = normalize_option_letter(text::trim(gold.get_ref<const std::string&>()))) return *c;
      }
      throw RecordError("mcq gold must be an option letter");
    }
    case TaskKind::BBox: {
      if (gold.is_array() && gold.size() == 4 &&
          std::all_of(gold.begin(), gold.end(), [](const auto& v) { return v.is_number(); })) {
        if (auto box = BBox::make(gold[0].get<double>(), gold[1].get<double>(),
                                  gold[2].get<double>(), gold[3].get<double>())) {
          return *box;
        }
      }
      throw RecordError("bbox gold must be [x1,y1,x2,y2] with positive area");
    }
    case TaskKind::MathExpr:
    case TaskKind::OpenEnded: {
      if (gold.is_string() && !text::trim(gold.get_ref<const std::string&>()).empty()) {
        return gold.get<std::string>();
      }
      if (task == TaskKind::MathExpr && gold.is_number()) {
        return gold.is_number_integer() ? std::to_string(gold.get<std::int64_t>())
                                        : text::format_double(gold.get<double>());
      }
      throw RecordError("gold must be a non-empty string");
    }
  }
  throw RecordError("unreachable task kind");
}

nlohmann::json gold_to_json(const GoldTarget& gold) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, char>) {
          return std::string(1, v);
        } else if constexpr (std::is_same_v<T, BBox>) {
          return nlohmann::json::array({v.x1, v.y1, v.x2, v.y2});
        } else {
          return v;
        }
      },
      gold);
}

std::string gold_to_text(const GoldTarget& gold) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, char>) {
          return std::string(1, v);
        } else if constexpr (std::is_same_v<T, BBox>) {
          return "[" + text::format_double(v.x1) + "," + text::format_double(v.y1) + "," +
                 text::format_double(v.x2) + "," + text::format_double(v.y2) + "]";
        } else {
          return v;
        }
      },
      gold);
}

namespace {
std::string string_field(const nlohmann::json& j, const char* key, bool required) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw RecordError(std::string("missing field '") + key + "'");
    return {};
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  throw RecordError(std::string("field '") + key + "' must be a string");
}
}  // namespace

SampleRecord sample_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw RecordError("sample record must be a JSON object");
  SampleRecord s;
  s.id = string_field(j, "id", true);
  s.image_ref = string_field(j, "image", false);
  s.question = string_field(j, "question", false);
  s.reasoning = string_field(j, "reasoning", false);
  s.answer = string_field(j, "answer", false);
  s.source = string_field(j, "source", false);
  auto task = j.find("task");
  if (task != j.end() && task->is_string()) {
    try {
      s.task = parse_task_kind(task->get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw RecordError(e.what());
    }
    auto gold = j.find("gold");
    if (gold == j.end()) throw RecordError("record '" + s.id + "' has a task but no gold");
    s.gold = parse_gold(s.task, *gold);
  }
  return s;
}

nlohmann::json sample_to_json(const SampleRecord& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["image"] = s.image_ref;
  j["question"] = s.question;
  j["reasoning"] = s.reasoning;
  j["answer"] = s.answer;
  j["source"] = s.source;
  if (!std::holds_alternative<std::monostate>(s.gold)) {
    j["task"] = std::string(to_string(s.task));
    j["gold"] = gold_to_json(s.gold);
  }
  return j;
}

}  // namespace mixrl
