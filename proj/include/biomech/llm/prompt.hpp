#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biomech::llm {

enum class TemplateId {
  distill_seed,
  distill_seed_no_body,
  expand_breadth,
  expand_depth,
  structure_output,
  taxonomy,
  explain,
  compare,
  combine,
  critique
};

inline constexpr TemplateId kAllTemplates[] = {
    TemplateId::distill_seed,   TemplateId::distill_seed_no_body, TemplateId::expand_breadth,
    TemplateId::expand_depth,   TemplateId::structure_output,     TemplateId::taxonomy,
    TemplateId::explain,        TemplateId::compare,              TemplateId::combine,
    TemplateId::critique};

/// File stem of the template, e.g. "expand-breadth".
std::string_view template_name(TemplateId id);
std::optional<TemplateId> parse_template(std::string_view name);

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Immutable prompt text with `{{name}}` placeholders. Single braces are literal.
struct PromptTemplate {
  TemplateId id;
  std::string system_text;
  std::string user_text;
};

struct RenderedPrompt {
  std::string system_text;
  std::string user_text;

  bool operator==(const RenderedPrompt&) const = default;
};

/// Templates compiled in from prompts/*.txt.
const PromptTemplate& builtin_template(TemplateId id);

/// Placeholder names in order of first appearance, without duplicates.
std::vector<std::string> placeholders(std::string_view text);

/// Substitutes every `{{name}}` with the bound value, byte for byte.
/// Throws UnboundPlaceholderError naming the first unbound placeholder.
std::string render_text(std::string_view text, const Bindings& bindings);
RenderedPrompt render_prompt(const PromptTemplate& tmpl, const Bindings& bindings);
RenderedPrompt render_prompt(TemplateId id, const Bindings& bindings);

}  // namespace biomech::llm
