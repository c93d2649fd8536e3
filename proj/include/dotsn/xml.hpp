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

// Minimal XML tree used for FlowInfo and per-switch configuration documents.
//
// The FlowInfo vocabulary uses element names with embedded spaces
// ("Topic Name") and attribute names with spaces (<Flow1 Flow ID="1">), so
// tag text is split as: if it contains '=', the first whitespace-delimited
// token is the element name and the rest are attributes; otherwise the whole
// tag text is the name. Comments, the declaration line and whitespace-only
// text are skipped. Mixed content is not supported.

#ifndef DOTSN_XML_HPP_
#define DOTSN_XML_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dotsn/common.hpp"

namespace dotsn::xml {

class ParseError : public Error {
 public:
  using Error::Error;
};

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string text;
  std::vector<Element> children;

  Element() = default;
  explicit Element(std::string n) : name(std::move(n)) {}
  Element(std::string n, std::string t) : name(std::move(n)), text(std::move(t)) {}

  Element& attr(std::string key, std::string value) {
    attributes.emplace_back(std::move(key), std::move(value));
    return *this;
  }
  Element& add(Element child) {
    children.push_back(std::move(child));
    return children.back();
  }

  [[nodiscard]] const Element* child(std::string_view n) const;
  [[nodiscard]] std::vector<const Element*> all(std::string_view n) const;
  [[nodiscard]] std::optional<std::string> attribute(std::string_view key) const;

  bool operator==(const Element&) const = default;
};

/// Serializes with two-space indentation, a UTF-8 declaration line and an
/// optional comment line right after the declaration.
std::string write_document(const Element& root, std::string_view comment = {});

Element parse_document(std::string_view text);

std::string escape(std::string_view s);

}  // namespace dotsn::xml

#endif  // DOTSN_XML_HPP_
