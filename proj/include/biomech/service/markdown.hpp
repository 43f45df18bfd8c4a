#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biomech::service {

struct MarkdownTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// First pipe table in `markdown` (outer pipes optional): a header row, a `---` delimiter row and
/// any body rows. Cells are trimmed, emphasis markers are kept.
std::optional<MarkdownTable> find_markdown_table(std::string_view markdown);

}  // namespace biomech::service
