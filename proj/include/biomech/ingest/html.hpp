#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace biomech::ingest::html {

/// Element or text node of a leniently parsed document. Unclosed elements are
/// closed at their parent's end tag; stray end tags are ignored.
struct Node {
  std::string tag;  // empty for text nodes
  std::map<std::string, std::string> attrs;
  std::string text;  // text nodes only, entities decoded
  std::vector<std::unique_ptr<Node>> children;

  bool is_text() const { return tag.empty(); }
  std::string attr(const std::string& name) const;
  bool has_class(std::string_view cls) const;

  /// Concatenated descendant text with whitespace runs collapsed and trimmed.
  std::string text_content() const;

  /// Depth-first, document order. Includes `this`.
  std::vector<const Node*> find_all(const std::function<bool(const Node&)>& pred) const;
  const Node* find_first(const std::function<bool(const Node&)>& pred) const;
};

std::unique_ptr<Node> parse(std::string_view document);

std::string decode_entities(std::string_view s);

inline auto by_tag(std::string tag) {
  return [tag = std::move(tag)](const Node& n) { return n.tag == tag; };
}
inline auto by_class(std::string cls) {
  return [cls = std::move(cls)](const Node& n) { return n.has_class(cls); };
}

}  // namespace biomech::ingest::html
