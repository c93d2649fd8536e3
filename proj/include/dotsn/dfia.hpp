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

/**
 * @file dfia.hpp
 * @brief DDS flow identification: maintains per-topic writer/reader sets and
 *        the flow set from the stream of endpoint announcements seen by the
 *        Discovery Server, and reads/writes the FlowInfo XML document.
 */

#ifndef DOTSN_DFIA_HPP_
#define DOTSN_DFIA_HPP_

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dotsn/discovery.hpp"

namespace dotsn {

class SchemaError : public Error {
 public:
  using Error::Error;
};

class MissingRoute : public Error {
 public:
  using Error::Error;
};

/// Ethernet 14 + 802.1Q 4 + IPv4 20 + UDP 8 + RTPS header 16.
inline constexpr std::uint32_t kDefaultFixedSize = 62;

/// Node names from talker to listener.
using Route = std::vector<std::string>;

struct FlowId {
  Guid writer;
  Guid reader;

  auto operator<=>(const FlowId&) const = default;
};

struct DdsFlow {
  FlowId id;
  std::string topic;
  Locator src;
  Locator dst;
  std::uint32_t size = 0;  // full frame bytes
  std::uint16_t vid = 1;
  std::uint8_t prio = 0;
  Nanos prd = 0;
  Nanos latency = 0;
  Nanos jitter = 0;
  Reliability reliability = Reliability::kBestEffort;
  Route route;

  bool operator==(const DdsFlow&) const = default;
};

/// Canonical flow order: topic, then writer guid, then reader guid.
bool flow_order(const DdsFlow& a, const DdsFlow& b);

/// Static routes keyed by (source node, destination node), plus the
/// IP-to-node map needed to find the node hosting a locator.
class RouteTable {
 public:
  void add_host(std::uint32_t ip, std::string node) { hosts_[ip] = std::move(node); }
  void add_route(Route route);

  [[nodiscard]] const std::string* host_of(const Locator& l) const;
  [[nodiscard]] const Route* find(const std::string& from, const std::string& to) const;
  /// Route between the nodes hosting `src` and `dst`; nullptr if unknown.
  [[nodiscard]] const Route* resolve(const Locator& src, const Locator& dst) const;

  [[nodiscard]] const std::map<std::pair<std::string, std::string>, Route>& routes() const { return routes_; }

 private:
  std::map<std::uint32_t, std::string> hosts_;
  std::map<std::pair<std::string, std::string>, Route> routes_;
};

using EndpointSet = std::map<Guid, EndpointDescriptor>;

struct FlowRegistry {
  std::map<std::string, EndpointSet> writers;                  // W_tp
  std::map<std::string, EndpointSet> readers;                  // R_tp
  std::map<std::string, std::map<FlowId, DdsFlow>> flows;      // F_tp

  /// Flows of every topic in canonical order.
  [[nodiscard]] std::vector<DdsFlow> all_flows() const;
  [[nodiscard]] std::size_t flow_count() const;

  bool operator==(const FlowRegistry&) const = default;
};

struct UnroutedPair {
  FlowId id;
  std::string detail;
};

struct DfiaStep {
  std::vector<DdsFlow> added;
  std::vector<DdsFlow> removed;
  std::vector<UnroutedPair> missing_routes;

  [[nodiscard]] bool changed() const { return !added.empty() || !removed.empty(); }
};

/// Reader QoS is authoritative for every QoS-derived field.
DdsFlow map_flow(const EndpointDescriptor& writer, const EndpointDescriptor& reader, Route route,
                 std::uint32_t fixed_size = kDefaultFixedSize);

/// Applies one endpoint announcement. Pairs without a route are reported in
/// `missing_routes` and no flow is created for them.
DfiaStep dfia_step(FlowRegistry& registry, const EndpointAnnouncement& ann, const RouteTable& routes,
                   std::uint32_t fixed_size = kDefaultFixedSize);

std::string emit_flowinfo(const FlowRegistry& registry, std::string_view comment = {});
std::string emit_flowinfo(std::vector<DdsFlow> flows, std::string_view comment = {});

/// Inverse of emit_flowinfo up to flow ordering. Routes are resolved from the
/// talker/listener addresses; throws SchemaError on vocabulary problems and
/// MissingRoute when an address pair has no route.
std::vector<DdsFlow> parse_flowinfo(std::string_view doc, const RouteTable& routes);

/// Accepts 16 dotted bytes, or a 12-byte prefix which is zero-extended.
Guid parse_flowinfo_guid(std::string_view text);

/// Owns a FlowRegistry on its own thread and applies announcements in
/// arrival order, exactly once. Readers get immutable snapshots.
class DfiaWorker {
 public:
  using Listener = std::function<void(const DfiaStep&)>;

  DfiaWorker(RouteTable routes, std::uint32_t fixed_size = kDefaultFixedSize, Listener listener = {});
  ~DfiaWorker();
  DfiaWorker(const DfiaWorker&) = delete;
  DfiaWorker& operator=(const DfiaWorker&) = delete;

  void submit(EndpointAnnouncement ann);
  /// Blocks until every submitted announcement has been applied.
  void flush();

  [[nodiscard]] std::shared_ptr<const FlowRegistry> snapshot() const;
  [[nodiscard]] std::size_t processed() const;

 private:
  void loop(std::stop_token stop);

  RouteTable routes_;
  std::uint32_t fixed_size_;
  Listener listener_;

  mutable std::mutex mutex_;
  std::condition_variable_any cv_;
  std::condition_variable idle_cv_;
  std::deque<EndpointAnnouncement> queue_;
  bool busy_ = false;
  std::size_t processed_ = 0;
  std::shared_ptr<const FlowRegistry> snapshot_;
  std::jthread thread_;
};

}  // namespace dotsn

#endif  // DOTSN_DFIA_HPP_
