#include "biomech/service/markdown.hpp"

#include "biomech/core/text.hpp"

#include <sstream>

namespace biomech::service {

namespace {

std::optional<std::vector<std::string>> split_row(const std::string& raw) {
  std::string line = text::trim(raw);
  if (line.find('|') == std::string::npos) return std::nullopt;
  if (line.front() == '|') line.erase(0, 1);
  if (!line.empty() && line.back() == '|') line.pop_back();
  std::vector<std::string> cells;
  std::string cell;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && i + 1 < line.size() && line[i + 1] == '|') {
      cell.push_back('|');
      ++i;
    } else if (line[i] == '|') {
      cells.push_back(text::trim(cell));
      cell.clear();
    } else {
      cell.push_back(line[i]);
    }
  }
  cells.push_back(text::trim(cell));
  return cells;
}

bool is_delimiter(const std::vector<std::string>& cells) {
  for (const auto& c : cells) {
    if (c.find('-') == std::string::npos) return false;
    for (char ch : c) {
      if (ch != '-' && ch != ':' && ch != ' ') return false;
    }
  }
  return !cells.empty();
}

}  // namespace

std::optional<MarkdownTable> find_markdown_table(std::string_view markdown) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(markdown)};
  for (std::string l; std::getline(in, l);) lines.push_back(l);

  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    const auto header = split_row(lines[i]);
    if (!header) continue;
    const auto delim = split_row(lines[i + 1]);
    if (!delim || !is_delimiter(*delim) || delim->size() != header->size()) continue;
    MarkdownTable table{*header, {}};
    for (std::size_t j = i + 2; j < lines.size(); ++j) {
      auto row = split_row(lines[j]);
      if (!row) break;
      table.rows.push_back(std::move(*row));
    }
    return table;
  }
  return std::nullopt;
}

}  // namespace biomech::service
