#include "mixrl/prompts.hpp"

#include <array>

#include "prompt_assets.hpp"

namespace mixrl::pipeline {

namespace {
constexpr std::array<std::string_view, 5> kPlaceholders = {"caption", "question", "input", "gold", "pred"};
}

std::string_view template_text(PromptTemplate t) {
  switch (t) {
    case PromptTemplate::Caption: return assets::k_caption;
    case PromptTemplate::Distill: return assets::k_distill;
    case PromptTemplate::Rewrite: return assets::k_rewrite;
    case PromptTemplate::Verify: return assets::k_verify;
  }
  return {};
}

std::string render_prompt(PromptTemplate t, const std::map<std::string, std::string>& fields) {
  const std::string_view tmpl = template_text(t);
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto name = tmpl.substr(i + 1, close - i - 1);
        bool known = false;
        for (auto p : kPlaceholders) known = known || p == name;
        if (known) {
          auto it = fields.find(std::string(name));
          if (it == fields.end()) throw MissingPlaceholder(std::string(name));
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

}  // namespace mixrl::pipeline
