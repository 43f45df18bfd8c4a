#include "biomech/llm/structured.hpp"

#include "biomech/core/text.hpp"
#include "biomech/llm/errors.hpp"

#include <nlohmann/json.hpp>

#include <optional>

namespace biomech::llm {

using nlohmann::json;

namespace {

// Text between the first ``` fence (language tag skipped) and the next one.
std::optional<std::string_view> fenced_body(std::string_view raw) {
  const auto open = raw.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body_start = raw.find('\n', open);
  if (body_start == std::string_view::npos) return std::nullopt;
  ++body_start;
  const auto close = raw.find("```", body_start);
  if (close == std::string_view::npos) return raw.substr(body_start);
  return raw.substr(body_start, close - body_start);
}

// Balanced [...] or {...} starting at `open`, skipping over JSON strings.
std::optional<std::string_view> balanced(std::string_view s, std::size_t open) {
  const char opener = s[open];
  const char closer = opener == '[' ? ']' : '}';
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == opener) {
      ++depth;
    } else if (c == closer && --depth == 0) {
      return s.substr(open, i - open + 1);
    }
  }
  return std::nullopt;
}

std::optional<json> parse_quiet(std::string_view s) {
  json j = json::parse(s, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

std::optional<json> find_array(std::string_view s) {
  if (auto whole = parse_quiet(s)) {
    if (whole->is_array()) return whole;
    if (whole->is_object()) {
      for (auto& [k, v] : whole->items()) {
        if (v.is_array()) return v;
      }
      return json::array({*whole});
    }
  }
  for (auto pos = s.find('['); pos != std::string_view::npos; pos = s.find('[', pos + 1)) {
    if (auto span = balanced(s, pos)) {
      if (auto j = parse_quiet(*span); j && j->is_array()) return j;
    }
  }
  // Loose objects in prose.
  json objects = json::array();
  for (std::size_t pos = s.find('{'); pos != std::string_view::npos; pos = s.find('{', pos + 1)) {
    if (auto span = balanced(s, pos)) {
      if (auto j = parse_quiet(*span); j && j->is_object()) {
        objects.push_back(*j);
        pos += span->size() - 1;
      }
    }
  }
  if (!objects.empty()) return objects;
  return std::nullopt;
}

}  // namespace

StructuredList parse_structured_list(std::string_view raw) {
  std::optional<json> array;
  if (auto body = fenced_body(raw)) array = find_array(*body);
  if (!array) array = find_array(raw);
  if (!array) throw ReplyParseError("structured list: no JSON array found", std::string(raw));

  StructuredList out;
  for (const auto& item : *array) {
    const auto m = item.is_object() ? item.find("mechanism") : item.end();
    const auto o = item.is_object() ? item.find("organism") : item.end();
    if (!item.is_object() || m == item.end() || o == item.end() || !m->is_string() ||
        !o->is_string() || text::trim(m->get<std::string>()).empty() ||
        text::trim(o->get<std::string>()).empty()) {
      ++out.dropped;
      continue;
    }
    out.pairs.push_back({text::trim(m->get<std::string>()), text::trim(o->get<std::string>())});
  }
  if (out.pairs.empty()) {
    throw ReplyParseError("structured list: no entry has both mechanism and organism", std::string(raw));
  }
  return out;
}

std::string serialize_structured_list(const std::vector<MechanismPair>& pairs) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& p : pairs) arr.push_back({{"mechanism", p.mechanism}, {"organism", p.organism}});
  return arr.dump();
}

}  // namespace biomech::llm
