// Copyright 2026 The dotsn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dotsn/xml.hpp"

#include <cctype>

namespace dotsn::xml {

const Element* Element::child(std::string_view n) const {
  for (const auto& c : children) {
    if (c.name == n) return &c;
  }
  return nullptr;
}

std::vector<const Element*> Element::all(std::string_view n) const {
  std::vector<const Element*> out;
  for (const auto& c : children) {
    if (c.name == n) out.push_back(&c);
  }
  return out;
}

std::optional<std::string> Element::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

namespace {

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos) throw ParseError("unterminated entity");
    auto ent = s.substr(i + 1, semi - i - 1);
    if (ent == "amp") out.push_back('&');
    else if (ent == "lt") out.push_back('<');
    else if (ent == "gt") out.push_back('>');
    else if (ent == "quot") out.push_back('"');
    else if (ent == "apos") out.push_back('\'');
    else throw ParseError("unknown entity &" + std::string(ent) + ";");
    i = semi;
  }
  return out;
}

void write_element(std::string& out, const Element& e, int depth) {
  std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  out += indent + "<" + e.name;
  for (const auto& [k, v] : e.attributes) out += " " + k + "=\"" + escape(v) + "\"";
  if (e.children.empty()) {
    if (e.text.empty() && !e.attributes.empty()) {
      out += "/>\n";
      return;
    }
    out += ">" + escape(e.text) + "</" + e.name + ">\n";
    return;
  }
  out += ">\n";
  for (const auto& c : e.children) write_element(out, c, depth + 1);
  out += indent + "</" + e.name + ">\n";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Element document() {
    skip_misc();
    if (!at("<")) throw ParseError("missing root element");
    Element root = element();
    skip_misc();
    if (pos_ != s_.size()) throw ParseError("content after root element");
    return root;
  }

 private:
  bool at(std::string_view tok) const { return s_.substr(pos_, tok.size()) == tok; }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  // Whitespace, declarations and comments.
  void skip_misc() {
    while (true) {
      skip_ws();
      if (at("<?")) {
        auto end = s_.find("?>", pos_);
        if (end == std::string_view::npos) throw ParseError("unterminated declaration");
        pos_ = end + 2;
      } else if (at("<!--")) {
        auto end = s_.find("-->", pos_);
        if (end == std::string_view::npos) throw ParseError("unterminated comment");
        pos_ = end + 3;
      } else {
        return;
      }
    }
  }

  void parse_tag(std::string_view tag, Element& e) {
    if (tag.find('=') == std::string_view::npos) {
      e.name = std::string(trim(tag));
      if (e.name.empty()) throw ParseError("empty element name");
      return;
    }
    tag = trim(tag);
    auto sp = tag.find_first_of(" \t\r\n");
    e.name = std::string(tag.substr(0, sp));
    auto rest = sp == std::string_view::npos ? std::string_view{} : tag.substr(sp);
    while (true) {
      rest = trim(rest);
      if (rest.empty()) break;
      auto eq = rest.find('=');
      if (eq == std::string_view::npos) throw ParseError("attribute without value in <" + e.name + ">");
      auto key = trim(rest.substr(0, eq));
      rest = trim(rest.substr(eq + 1));
      if (rest.empty() || rest.front() != '"') throw ParseError("unquoted attribute in <" + e.name + ">");
      auto close = rest.find('"', 1);
      if (close == std::string_view::npos) throw ParseError("unterminated attribute in <" + e.name + ">");
      e.attributes.emplace_back(std::string(key), unescape(rest.substr(1, close - 1)));
      rest = rest.substr(close + 1);
    }
  }

  Element element() {
    ++pos_;  // '<'
    auto close = s_.find('>', pos_);
    if (close == std::string_view::npos) throw ParseError("unterminated tag");
    auto tag = s_.substr(pos_, close - pos_);
    pos_ = close + 1;
    bool self_closing = !tag.empty() && tag.back() == '/';
    if (self_closing) tag.remove_suffix(1);

    Element e;
    parse_tag(tag, e);
    if (self_closing) return e;

    std::string text;
    while (true) {
      auto lt = s_.find('<', pos_);
      if (lt == std::string_view::npos) throw ParseError("unterminated element <" + e.name + ">");
      text += std::string(s_.substr(pos_, lt - pos_));
      pos_ = lt;
      if (at("<!--")) {
        auto end = s_.find("-->", pos_);
        if (end == std::string_view::npos) throw ParseError("unterminated comment");
        pos_ = end + 3;
        continue;
      }
      if (at("</")) {
        auto end = s_.find('>', pos_);
        if (end == std::string_view::npos) throw ParseError("unterminated closing tag");
        auto name = trim(s_.substr(pos_ + 2, end - pos_ - 2));
        if (name != e.name) {
          throw ParseError("mismatched closing tag </" + std::string(name) + "> for <" + e.name + ">");
        }
        pos_ = end + 1;
        break;
      }
      e.children.push_back(element());
    }
    auto trimmed = trim(text);
    if (!e.children.empty() && !trimmed.empty()) throw ParseError("mixed content in <" + e.name + ">");
    e.text = unescape(e.children.empty() ? std::string_view(text) : std::string_view{});
    if (!e.children.empty()) e.text.clear();
    return e;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string write_document(const Element& root, std::string_view comment) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!comment.empty()) out += "<!-- " + std::string(comment) + " -->\n";
  write_element(out, root, 0);
  return out;
}

Element parse_document(std::string_view text) { return Parser(text).document(); }

}  // namespace dotsn::xml
