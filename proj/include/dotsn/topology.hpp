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

#ifndef DOTSN_TOPOLOGY_HPP_
#define DOTSN_TOPOLOGY_HPP_

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dotsn/dds_model.hpp"

namespace dotsn {

enum class NodeRole : std::uint8_t { kEndStation, kSwitch };

struct Node {
  std::string name;
  NodeRole role = NodeRole::kEndStation;
  std::uint8_t device_id = 0;       // switches only
  std::uint32_t ip = 0;             // end stations; 0 if none
  Nanos processing_delay = 10 * kMicro;  // switches only
};

struct Link {
  std::string a;
  std::uint8_t a_port = 0;
  std::string b;
  std::uint8_t b_port = 0;
  std::int64_t bandwidth_bps = 1'000'000'000;
  Nanos propagation = 0;
};

/// An egress port: frames leave `node` through `port`.
struct Port {
  std::string node;
  std::uint8_t port = 0;

  auto operator<=>(const Port&) const = default;
  [[nodiscard]] std::string to_string() const { return node + ":" + std::to_string(port); }
};

/// One directed traversal of a link.
struct Hop {
  Port egress;
  std::string to;
  std::uint8_t ingress_port = 0;  // port on `to`
  std::int64_t bandwidth_bps = 0;
  Nanos propagation = 0;
  std::size_t link_index = 0;
};

/// FCS (4) + preamble/SFD (8) + inter-packet gap (12).
inline constexpr std::uint32_t kWireOverhead = 24;
inline constexpr std::uint32_t kMaxBestEffortFrame = 1522;

/// Time a frame of `frame_bytes` occupies a link, rounded up to whole ns.
Nanos wire_time(std::uint32_t frame_bytes, std::int64_t bandwidth_bps);

class Topology {
 public:
  void add_node(Node node);
  void add_link(Link link);

  /// Checks references, port uniqueness and bandwidths; throws InvalidValue.
  void validate() const;

  [[nodiscard]] bool has_node(const std::string& name) const { return nodes_.contains(name); }
  [[nodiscard]] const Node& node(const std::string& name) const;
  [[nodiscard]] const std::map<std::string, Node>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<Link>& links() const { return links_; }

  [[nodiscard]] std::optional<Hop> hop(const std::string& from, const std::string& to) const;
  /// Hops along a node path; throws InvalidValue when two consecutive nodes are not linked.
  [[nodiscard]] std::vector<Hop> hops(const std::vector<std::string>& route) const;
  /// Sorted neighbor names.
  [[nodiscard]] std::vector<std::string> neighbors(const std::string& name) const;
  /// Delay between a frame's arrival at `node` and its enqueue at an egress port.
  [[nodiscard]] Nanos processing_delay(const std::string& node) const;

  [[nodiscard]] std::optional<std::string> node_by_ip(std::uint32_t ip) const;

 private:
  std::map<std::string, Node> nodes_;
  std::vector<Link> links_;
};

}  // namespace dotsn

#endif  // DOTSN_TOPOLOGY_HPP_
