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

#include "dotsn/topology.hpp"

#include <algorithm>
#include <set>

namespace dotsn {

Nanos wire_time(std::uint32_t frame_bytes, std::int64_t bandwidth_bps) {
  const __int128 bits = static_cast<__int128>(frame_bytes + kWireOverhead) * 8;
  const __int128 num = bits * kSecond;
  return static_cast<Nanos>((num + bandwidth_bps - 1) / bandwidth_bps);
}

void Topology::add_node(Node node) {
  if (node.name.empty()) throw InvalidValue("node name must be non-empty");
  auto name = node.name;
  if (!nodes_.emplace(name, std::move(node)).second) throw InvalidValue("duplicate node " + name);
}

void Topology::add_link(Link link) { links_.push_back(std::move(link)); }

void Topology::validate() const {
  std::set<Port> used;
  std::set<std::uint8_t> device_ids;
  for (const auto& [name, n] : nodes_) {
    if (n.role == NodeRole::kSwitch) {
      if (!device_ids.insert(n.device_id).second) {
        throw InvalidValue("duplicate switch device id " + std::to_string(n.device_id));
      }
      if (n.processing_delay < 0) throw InvalidValue("negative processing delay on " + name);
    }
  }
  for (const auto& l : links_) {
    if (!nodes_.contains(l.a) || !nodes_.contains(l.b)) throw InvalidValue("link references unknown node");
    if (l.a == l.b) throw InvalidValue("self-loop link on " + l.a);
    if (l.bandwidth_bps <= 0) throw InvalidValue("link " + l.a + "-" + l.b + " has non-positive bandwidth");
    if (l.propagation < 0) throw InvalidValue("link " + l.a + "-" + l.b + " has negative propagation");
    if (!used.insert({l.a, l.a_port}).second) throw InvalidValue("port reused: " + Port{l.a, l.a_port}.to_string());
    if (!used.insert({l.b, l.b_port}).second) throw InvalidValue("port reused: " + Port{l.b, l.b_port}.to_string());
  }
}

const Node& Topology::node(const std::string& name) const {
  auto it = nodes_.find(name);
  if (it == nodes_.end()) throw InvalidValue("unknown node " + name);
  return it->second;
}

std::optional<Hop> Topology::hop(const std::string& from, const std::string& to) const {
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const auto& l = links_[i];
    if (l.a == from && l.b == to) return Hop{{from, l.a_port}, to, l.b_port, l.bandwidth_bps, l.propagation, i};
    if (l.b == from && l.a == to) return Hop{{from, l.b_port}, to, l.a_port, l.bandwidth_bps, l.propagation, i};
  }
  return std::nullopt;
}

std::vector<Hop> Topology::hops(const std::vector<std::string>& route) const {
  std::vector<Hop> out;
  for (std::size_t i = 0; i + 1 < route.size(); ++i) {
    auto h = hop(route[i], route[i + 1]);
    if (!h) throw InvalidValue("no link between " + route[i] + " and " + route[i + 1]);
    out.push_back(*h);
  }
  return out;
}

std::vector<std::string> Topology::neighbors(const std::string& name) const {
  std::vector<std::string> out;
  for (const auto& l : links_) {
    if (l.a == name) out.push_back(l.b);
    if (l.b == name) out.push_back(l.a);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Nanos Topology::processing_delay(const std::string& node_name) const {
  const auto& n = node(node_name);
  return n.role == NodeRole::kSwitch ? n.processing_delay : 0;
}

std::optional<std::string> Topology::node_by_ip(std::uint32_t ip) const {
  for (const auto& [name, n] : nodes_) {
    if (n.ip == ip && ip != 0) return name;
  }
  return std::nullopt;
}

}  // namespace dotsn
