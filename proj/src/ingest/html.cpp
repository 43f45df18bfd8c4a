#include "biomech/ingest/html.hpp"

#include "biomech/core/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

namespace biomech::ingest::html {

namespace {

constexpr std::array<std::string_view, 14> kVoidElements = {
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track",
    "wbr", "param"};

bool is_void(std::string_view tag) {
  return std::find(kVoidElements.begin(), kVoidElements.end(), tag) != kVoidElements.end();
}

bool is_raw_text(std::string_view tag) { return tag == "script" || tag == "style"; }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Parser {
 public:
  explicit Parser(std::string_view doc) : doc_(doc) {}

  std::unique_ptr<Node> run() {
    auto root = std::make_unique<Node>();
    root->tag = "#document";
    stack_.push_back(root.get());
    while (pos_ < doc_.size()) {
      if (doc_[pos_] == '<') {
        parse_markup();
      } else {
        const auto next = doc_.find('<', pos_);
        const auto end = next == std::string_view::npos ? doc_.size() : next;
        add_text(doc_.substr(pos_, end - pos_));
        pos_ = end;
      }
    }
    return root;
  }

 private:
  void add_text(std::string_view raw) {
    if (raw.empty()) return;
    auto node = std::make_unique<Node>();
    node->text = decode_entities(raw);
    stack_.back()->children.push_back(std::move(node));
  }

  void parse_markup() {
    if (doc_.substr(pos_, 4) == "<!--") {
      const auto end = doc_.find("-->", pos_ + 4);
      pos_ = end == std::string_view::npos ? doc_.size() : end + 3;
      return;
    }
    if (pos_ + 1 < doc_.size() && (doc_[pos_ + 1] == '!' || doc_[pos_ + 1] == '?')) {
      const auto end = doc_.find('>', pos_);
      pos_ = end == std::string_view::npos ? doc_.size() : end + 1;
      return;
    }
    if (pos_ + 1 < doc_.size() && doc_[pos_ + 1] == '/') {
      parse_end_tag();
      return;
    }
    if (pos_ + 1 >= doc_.size() || std::isalpha(static_cast<unsigned char>(doc_[pos_ + 1])) == 0) {
      add_text(doc_.substr(pos_, 1));
      ++pos_;
      return;
    }
    parse_start_tag();
  }

  std::string read_name() {
    std::string name;
    while (pos_ < doc_.size() && !is_space(doc_[pos_]) && doc_[pos_] != '>' && doc_[pos_] != '/' &&
           doc_[pos_] != '=') {
      name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(doc_[pos_]))));
      ++pos_;
    }
    return name;
  }

  void skip_space() {
    while (pos_ < doc_.size() && is_space(doc_[pos_])) ++pos_;
  }

  void parse_end_tag() {
    pos_ += 2;
    const std::string name = read_name();
    const auto end = doc_.find('>', pos_);
    pos_ = end == std::string_view::npos ? doc_.size() : end + 1;
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == name) {
        stack_.resize(i);
        return;
      }
    }
  }

  void parse_start_tag() {
    ++pos_;
    auto node = std::make_unique<Node>();
    node->tag = read_name();
    bool self_closing = false;
    while (pos_ < doc_.size()) {
      skip_space();
      if (pos_ >= doc_.size()) break;
      if (doc_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (doc_[pos_] == '/') {
        self_closing = true;
        ++pos_;
        continue;
      }
      std::string key = read_name();
      if (key.empty()) {
        ++pos_;
        continue;
      }
      skip_space();
      std::string value;
      if (pos_ < doc_.size() && doc_[pos_] == '=') {
        ++pos_;
        skip_space();
        if (pos_ < doc_.size() && (doc_[pos_] == '"' || doc_[pos_] == '\'')) {
          const char quote = doc_[pos_++];
          const auto end = doc_.find(quote, pos_);
          const auto stop = end == std::string_view::npos ? doc_.size() : end;
          value = decode_entities(doc_.substr(pos_, stop - pos_));
          pos_ = std::min(doc_.size(), stop + 1);
        } else {
          const auto start = pos_;
          while (pos_ < doc_.size() && !is_space(doc_[pos_]) && doc_[pos_] != '>') ++pos_;
          value = decode_entities(doc_.substr(start, pos_ - start));
        }
      }
      node->attrs.emplace(std::move(key), std::move(value));
    }

    Node* raw = node.get();
    stack_.back()->children.push_back(std::move(node));
    if (self_closing || is_void(raw->tag)) return;
    if (is_raw_text(raw->tag)) {
      const std::string close = "</" + raw->tag;
      auto end = pos_;
      while (true) {
        end = doc_.find("</", end);
        if (end == std::string_view::npos) {
          end = doc_.size();
          break;
        }
        if (text::to_lower(doc_.substr(end, close.size())) == close) break;
        end += 2;
      }
      pos_ = end;
      if (pos_ < doc_.size()) parse_end_tag();
      return;
    }
    stack_.push_back(raw);
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
  std::vector<Node*> stack_;
};

void collect_text(const Node& n, std::string& out) {
  if (n.is_text()) {
    out += n.text;
    return;
  }
  if (is_raw_text(n.tag)) return;
  const bool block = n.tag == "p" || n.tag == "div" || n.tag == "li" || n.tag == "br" ||
                     n.tag == "h1" || n.tag == "h2" || n.tag == "h3";
  if (block) out.push_back(' ');
  for (const auto& c : n.children) collect_text(*c, out);
  if (block) out.push_back(' ');
}

void walk(const Node& n, const std::function<bool(const Node&)>& pred, std::vector<const Node*>& out) {
  if (pred(n)) out.push_back(&n);
  for (const auto& c : n.children) walk(*c, pred, out);
}

}  // namespace

std::string Node::attr(const std::string& name) const {
  const auto it = attrs.find(name);
  return it == attrs.end() ? std::string() : it->second;
}

bool Node::has_class(std::string_view cls) const {
  const auto it = attrs.find("class");
  if (it == attrs.end()) return false;
  for (const auto& token : text::split_whitespace(it->second)) {
    if (token == cls) return true;
  }
  return false;
}

std::string Node::text_content() const {
  std::string raw;
  collect_text(*this, raw);
  return text::join(text::split_whitespace(raw), " ");
}

std::vector<const Node*> Node::find_all(const std::function<bool(const Node&)>& pred) const {
  std::vector<const Node*> out;
  walk(*this, pred, out);
  return out;
}

const Node* Node::find_first(const std::function<bool(const Node&)>& pred) const {
  if (pred(*this)) return this;
  for (const auto& c : children) {
    if (const Node* hit = c->find_first(pred)) return hit;
  }
  return nullptr;
}

std::unique_ptr<Node> parse(std::string_view document) { return Parser(document).run(); }

std::string decode_entities(std::string_view s) {
  static const std::map<std::string_view, std::string_view> kNamed = {
      {"amp", "&"},       {"lt", "<"},        {"gt", ">"},       {"quot", "\""},
      {"apos", "'"},      {"nbsp", " "}, {"ndash", "\xE2\x80\x93"},
      {"mdash", "\xE2\x80\x94"}, {"rsquo", "\xE2\x80\x99"}, {"lsquo", "\xE2\x80\x98"},
      {"ldquo", "\xE2\x80\x9C"}, {"rdquo", "\xE2\x80\x9D"}, {"hellip", "\xE2\x80\xA6"}};
  // Accented letters and a few symbols, by Latin-1 code point.
  static const std::map<std::string_view, unsigned long> kLatin1 = {
      {"copy", 0xA9},   {"laquo", 0xAB},  {"reg", 0xAE},    {"deg", 0xB0},    {"middot", 0xB7},
      {"raquo", 0xBB},  {"Auml", 0xC4},   {"Ccedil", 0xC7}, {"Eacute", 0xC9}, {"Ouml", 0xD6},
      {"times", 0xD7},  {"Uuml", 0xDC},   {"szlig", 0xDF},  {"agrave", 0xE0}, {"aacute", 0xE1},
      {"acirc", 0xE2},  {"auml", 0xE4},   {"aring", 0xE5},  {"ccedil", 0xE7}, {"egrave", 0xE8},
      {"eacute", 0xE9}, {"ecirc", 0xEA},  {"euml", 0xEB},   {"iacute", 0xED}, {"iuml", 0xEF},
      {"ntilde", 0xF1}, {"oacute", 0xF3}, {"ocirc", 0xF4},  {"ouml", 0xF6},   {"oslash", 0xF8},
      {"uacute", 0xFA}, {"uuml", 0xFC}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    const auto entity = s.substr(i + 1, semi - i - 1);
    if (!entity.empty() && entity[0] == '#') {
      unsigned long cp = 0;
      const bool hex = entity.size() > 1 && (entity[1] == 'x' || entity[1] == 'X');
      const auto digits = entity.substr(hex ? 2 : 1);
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
      if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
        append_utf8(out, cp);
        i = semi;
        continue;
      }
    } else if (const auto it = kNamed.find(entity); it != kNamed.end()) {
      out.append(it->second);
      i = semi;
      continue;
    } else if (const auto lt = kLatin1.find(entity); lt != kLatin1.end()) {
      append_utf8(out, lt->second);
      i = semi;
      continue;
    }
    out.push_back('&');
  }
  return out;
}

}  // namespace biomech::ingest::html
