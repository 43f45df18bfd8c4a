#pragma once

#include <string_view>

namespace biomech::llm::detail {

struct PromptFiles {
  std::string_view name;
  std::string_view system_text;
  std::string_view user_text;
};

const PromptFiles& prompt_files(std::string_view name);

}  // namespace biomech::llm::detail
