#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mixrl::pipeline {

enum class PromptTemplate { Caption, Distill, Rewrite, Verify };

class MissingPlaceholder : public std::invalid_argument {
 public:
  explicit MissingPlaceholder(std::string name)
      : std::invalid_argument("missing prompt field '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// Raw template text with its {placeholders}.
std::string_view template_text(PromptTemplate t);

// Substitutes {caption}, {question}, {input}, {gold} and {pred} in one pass
// (substituted values are never re-scanned). Fields the template does not use
// are ignored; a placeholder without a field throws MissingPlaceholder.
std::string render_prompt(PromptTemplate t, const std::map<std::string, std::string>& fields);

}  // namespace mixrl::pipeline
