#include "biomech/llm/prompt.hpp"

#include "biomech/llm/errors.hpp"
#include "prompt_catalog.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace biomech::llm {

namespace {

constexpr std::array<std::string_view, 10> kTemplateNames = {
    "distill-seed", "distill-seed-no-body", "expand-breadth", "expand-depth", "structure-output",
    "taxonomy",     "explain",              "compare",        "combine",      "critique"};

bool is_name_char(char c) {
  return std::islower(static_cast<unsigned char>(c)) != 0 ||
         std::isdigit(static_cast<unsigned char>(c)) != 0 || c == '_';
}

struct Placeholder {
  std::size_t begin;
  std::size_t end;  // one past the closing braces
  std::string_view name;
};

// Finds the next `{{name}}` at or after `from`. A run of three braces such as
// `{{{name}}}` yields the inner placeholder and leaves the outer braces literal.
std::optional<Placeholder> next_placeholder(std::string_view text, std::size_t from) {
  for (std::size_t i = text.find("{{", from); i != std::string_view::npos;
       i = text.find("{{", i + 1)) {
    std::size_t j = i + 2;
    while (j < text.size() && is_name_char(text[j])) ++j;
    if (j > i + 2 && text.substr(j, 2) == "}}") {
      return Placeholder{i, j + 2, text.substr(i + 2, j - i - 2)};
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view template_name(TemplateId id) { return kTemplateNames[static_cast<std::size_t>(id)]; }

std::optional<TemplateId> parse_template(std::string_view name) {
  const auto it = std::find(kTemplateNames.begin(), kTemplateNames.end(), name);
  if (it == kTemplateNames.end()) return std::nullopt;
  return static_cast<TemplateId>(it - kTemplateNames.begin());
}

const PromptTemplate& builtin_template(TemplateId id) {
  static const std::vector<PromptTemplate> catalog = [] {
    std::vector<PromptTemplate> out;
    for (TemplateId t : kAllTemplates) {
      const auto& files = detail::prompt_files(template_name(t));
      out.push_back(PromptTemplate{t, std::string(files.system_text), std::string(files.user_text)});
    }
    return out;
  }();
  return catalog[static_cast<std::size_t>(id)];
}

std::vector<std::string> placeholders(std::string_view text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while (auto ph = next_placeholder(text, pos)) {
    std::string name(ph->name);
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    pos = ph->end;
  }
  return names;
}

std::string render_text(std::string_view text, const Bindings& bindings) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (auto ph = next_placeholder(text, pos)) {
    const auto it = bindings.find(ph->name);
    if (it == bindings.end()) throw UnboundPlaceholderError(std::string(ph->name));
    out.append(text.substr(pos, ph->begin - pos));
    out.append(it->second);
    pos = ph->end;
  }
  out.append(text.substr(pos));
  return out;
}

RenderedPrompt render_prompt(const PromptTemplate& tmpl, const Bindings& bindings) {
  return RenderedPrompt{render_text(tmpl.system_text, bindings), render_text(tmpl.user_text, bindings)};
}

RenderedPrompt render_prompt(TemplateId id, const Bindings& bindings) {
  return render_prompt(builtin_template(id), bindings);
}

}  // namespace biomech::llm
