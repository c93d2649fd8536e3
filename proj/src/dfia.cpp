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

#include "dotsn/dfia.hpp"

#include <algorithm>
#include <charconv>

#include "dotsn/xml.hpp"

namespace dotsn {

bool flow_order(const DdsFlow& a, const DdsFlow& b) {
  if (a.topic != b.topic) return a.topic < b.topic;
  return a.id < b.id;
}

void RouteTable::add_route(Route route) {
  if (route.size() < 2) throw InvalidValue("route needs at least a source and a destination node");
  for (std::size_t i = 1; i < route.size(); ++i) {
    if (route[i] == route[i - 1]) throw InvalidValue("route repeats node " + route[i]);
  }
  auto key = std::make_pair(route.front(), route.back());
  routes_[key] = std::move(route);
}

const std::string* RouteTable::host_of(const Locator& l) const {
  auto it = hosts_.find(l.ip);
  return it == hosts_.end() ? nullptr : &it->second;
}

const Route* RouteTable::find(const std::string& from, const std::string& to) const {
  auto it = routes_.find({from, to});
  return it == routes_.end() ? nullptr : &it->second;
}

const Route* RouteTable::resolve(const Locator& src, const Locator& dst) const {
  const auto* from = host_of(src);
  const auto* to = host_of(dst);
  if (!from || !to) return nullptr;
  return find(*from, *to);
}

std::vector<DdsFlow> FlowRegistry::all_flows() const {
  std::vector<DdsFlow> out;
  for (const auto& [topic, set] : flows) {
    for (const auto& [id, f] : set) out.push_back(f);
  }
  std::sort(out.begin(), out.end(), flow_order);
  return out;
}

std::size_t FlowRegistry::flow_count() const {
  std::size_t n = 0;
  for (const auto& [topic, set] : flows) n += set.size();
  return n;
}

DdsFlow map_flow(const EndpointDescriptor& writer, const EndpointDescriptor& reader, Route route,
                 std::uint32_t fixed_size) {
  DdsFlow f;
  f.id = FlowId{writer.guid, reader.guid};
  f.topic = reader.topic;
  f.src = writer.locator;
  f.dst = reader.locator;
  f.size = fixed_size + reader.qos.size;
  f.vid = reader.qos.partition;
  f.prio = reader.qos.priority;
  f.prd = reader.qos.deadline;
  f.latency = reader.qos.latency;
  f.jitter = reader.qos.jitter;
  f.reliability = reader.qos.reliability;
  f.route = std::move(route);
  return f;
}

namespace {

void add_flow(FlowRegistry& registry, const EndpointDescriptor& w, const EndpointDescriptor& r,
              const RouteTable& routes, std::uint32_t fixed_size, DfiaStep& step) {
  const auto* route = routes.resolve(w.locator, r.locator);
  if (!route) {
    step.missing_routes.push_back(
        {FlowId{w.guid, r.guid}, "no route from " + w.locator.to_string() + " to " + r.locator.to_string()});
    return;
  }
  auto flow = map_flow(w, r, *route, fixed_size);
  registry.flows[w.topic][flow.id] = flow;
  step.added.push_back(std::move(flow));
}

// Deletes every flow of `topic` whose writer (or reader) is `guid`.
void remove_flows(FlowRegistry& registry, const std::string& topic, const Guid& guid, bool as_writer,
                  DfiaStep& step) {
  auto it = registry.flows.find(topic);
  if (it == registry.flows.end()) return;
  auto& set = it->second;
  for (auto f = set.begin(); f != set.end();) {
    const Guid& end = as_writer ? f->first.writer : f->first.reader;
    if (end == guid) {
      step.removed.push_back(f->second);
      f = set.erase(f);
    } else {
      ++f;
    }
  }
  if (set.empty()) registry.flows.erase(it);
}

bool contains(const std::map<std::string, EndpointSet>& sets, const std::string& topic, const Guid& guid) {
  auto it = sets.find(topic);
  return it != sets.end() && it->second.contains(guid);
}

void erase(std::map<std::string, EndpointSet>& sets, const std::string& topic, const Guid& guid) {
  auto it = sets.find(topic);
  if (it == sets.end()) return;
  it->second.erase(guid);
  if (it->second.empty()) sets.erase(it);
}

}  // namespace

DfiaStep dfia_step(FlowRegistry& registry, const EndpointAnnouncement& ann, const RouteTable& routes,
                   std::uint32_t fixed_size) {
  DfiaStep step;
  const auto& edp = ann.endpoint;
  const auto& tp = edp.topic;
  const bool is_writer = edp.kind == EndpointKind::kWriter;

  if (edp.status == Liveness::kUnalive) {
    if (is_writer && contains(registry.writers, tp, edp.guid)) {
      erase(registry.writers, tp, edp.guid);
      remove_flows(registry, tp, edp.guid, true, step);
    } else if (!is_writer && contains(registry.readers, tp, edp.guid)) {
      erase(registry.readers, tp, edp.guid);
      remove_flows(registry, tp, edp.guid, false, step);
    }
    return step;
  }

  if (is_writer && !contains(registry.writers, tp, edp.guid)) {
    registry.writers[tp].emplace(edp.guid, edp);
    if (auto rs = registry.readers.find(tp); rs != registry.readers.end()) {
      for (const auto& [guid, reader] : rs->second) {
        if (qos_compatible(edp.qos, reader.qos)) add_flow(registry, edp, reader, routes, fixed_size, step);
      }
    }
  } else if (!is_writer && !contains(registry.readers, tp, edp.guid)) {
    registry.readers[tp].emplace(edp.guid, edp);
    if (auto ws = registry.writers.find(tp); ws != registry.writers.end()) {
      for (const auto& [guid, writer] : ws->second) {
        if (qos_compatible(writer.qos, edp.qos)) add_flow(registry, writer, edp, routes, fixed_size, step);
      }
    }
  }
  return step;
}

// ---------------------------------------------------------------------------
// FlowInfo document.
// ---------------------------------------------------------------------------

std::string emit_flowinfo(const FlowRegistry& registry, std::string_view comment) {
  return emit_flowinfo(registry.all_flows(), comment);
}

std::string emit_flowinfo(std::vector<DdsFlow> flows, std::string_view comment) {
  std::sort(flows.begin(), flows.end(), flow_order);
  xml::Element root("Flow Features");
  std::size_t k = 0;
  for (const auto& f : flows) {
    ++k;
    auto& e = root.add(xml::Element("Flow" + std::to_string(k)));
    e.attr("Flow ID", std::to_string(k));
    e.add({"Topic Name", f.topic});
    e.add({"Size", std::to_string(f.size)});
    auto& node = e.add(xml::Element("Node Info"));
    node.add({"Talker Guid", f.id.writer.to_string()});
    node.add({"Talker Address", f.src.to_string()});
    node.add({"Listener Guid", f.id.reader.to_string()});
    node.add({"Listener Address", f.dst.to_string()});
    auto& qos = e.add(xml::Element("QoS Info"));
    qos.add({"VID", std::to_string(f.vid)});
    qos.add({"Priority", std::to_string(f.prio)});
    qos.add({"Deadline", std::to_string(f.prd)});
    qos.add({"Latency", std::to_string(f.latency)});
    qos.add({"Jitter", std::to_string(f.jitter)});
    qos.add({"Reliability", std::string(to_string(f.reliability))});
  }
  return xml::write_document(root, comment);
}

Guid parse_flowinfo_guid(std::string_view text) {
  auto dots = std::count(text.begin(), text.end(), '.');
  if (dots == 11) return Guid::parse(std::string(text) + ".00.00.00.00");
  return Guid::parse(text);
}

namespace {

const xml::Element& need(const xml::Element& parent, std::string_view name) {
  const auto* c = parent.child(name);
  if (!c) throw SchemaError("missing element <" + std::string(name) + "> in <" + parent.name + ">");
  return *c;
}

template <typename T>
T number(const xml::Element& e) {
  T value{};
  const auto& t = e.text;
  auto [next, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || next != t.data() + t.size()) {
    throw SchemaError("element <" + e.name + "> is not a valid number: '" + t + "'");
  }
  return value;
}

void expect_only(const xml::Element& e, std::initializer_list<std::string_view> names) {
  for (const auto& c : e.children) {
    if (std::find(names.begin(), names.end(), c.name) == names.end()) {
      throw SchemaError("unknown element <" + c.name + "> in <" + e.name + ">");
    }
  }
}

}  // namespace

std::vector<DdsFlow> parse_flowinfo(std::string_view doc, const RouteTable& routes) {
  xml::Element root;
  try {
    root = xml::parse_document(doc);
  } catch (const xml::ParseError& e) {
    throw SchemaError(std::string("FlowInfo is not well-formed: ") + e.what());
  }
  if (root.name != "Flow Features") throw SchemaError("root element must be <Flow Features>, got <" + root.name + ">");

  std::vector<DdsFlow> flows;
  for (const auto& fe : root.children) {
    if (!fe.name.starts_with("Flow") || !fe.attribute("Flow ID")) {
      throw SchemaError("unknown element <" + fe.name + "> in <Flow Features>");
    }
    expect_only(fe, {"Topic Name", "Size", "Node Info", "QoS Info"});
    DdsFlow f;
    try {
      f.topic = need(fe, "Topic Name").text;
      f.size = number<std::uint32_t>(need(fe, "Size"));
      const auto& node = need(fe, "Node Info");
      expect_only(node, {"Talker Guid", "Talker Address", "Listener Guid", "Listener Address"});
      f.id.writer = parse_flowinfo_guid(need(node, "Talker Guid").text);
      f.src = Locator::parse(need(node, "Talker Address").text);
      f.id.reader = parse_flowinfo_guid(need(node, "Listener Guid").text);
      f.dst = Locator::parse(need(node, "Listener Address").text);
      const auto& qos = need(fe, "QoS Info");
      expect_only(qos, {"VID", "Priority", "Deadline", "Latency", "Jitter", "Reliability"});
      f.vid = number<std::uint16_t>(need(qos, "VID"));
      f.prio = static_cast<std::uint8_t>(number<unsigned>(need(qos, "Priority")));
      f.prd = number<Nanos>(need(qos, "Deadline"));
      f.latency = number<Nanos>(need(qos, "Latency"));
      f.jitter = number<Nanos>(need(qos, "Jitter"));
      f.reliability = parse_reliability(need(qos, "Reliability").text);
    } catch (const InvalidValue& e) {
      throw SchemaError(std::string("bad value in <") + fe.name + ">: " + e.what());
    }
    if (f.prio > 7 || f.vid < 1 || f.vid > 4094) throw SchemaError("out-of-range QoS value in <" + fe.name + ">");

    const auto* route = routes.resolve(f.src, f.dst);
    if (!route) throw MissingRoute("no route from " + f.src.to_string() + " to " + f.dst.to_string());
    f.route = *route;
    flows.push_back(std::move(f));
  }
  return flows;
}

// ---------------------------------------------------------------------------

DfiaWorker::DfiaWorker(RouteTable routes, std::uint32_t fixed_size, Listener listener)
    : routes_(std::move(routes)),
      fixed_size_(fixed_size),
      listener_(std::move(listener)),
      snapshot_(std::make_shared<const FlowRegistry>()),
      thread_([this](std::stop_token st) { loop(st); }) {}

DfiaWorker::~DfiaWorker() {
  thread_.request_stop();
  cv_.notify_all();
}

void DfiaWorker::submit(EndpointAnnouncement ann) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(ann));
  }
  cv_.notify_one();
}

void DfiaWorker::flush() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && !busy_; });
}

std::shared_ptr<const FlowRegistry> DfiaWorker::snapshot() const {
  std::lock_guard lock(mutex_);
  return snapshot_;
}

std::size_t DfiaWorker::processed() const {
  std::lock_guard lock(mutex_);
  return processed_;
}

void DfiaWorker::loop(std::stop_token stop) {
  FlowRegistry registry;
  while (true) {
    EndpointAnnouncement ann;
    {
      std::unique_lock lock(mutex_);
      if (!cv_.wait(lock, stop, [this] { return !queue_.empty(); })) return;
      ann = std::move(queue_.front());
      queue_.pop_front();
      busy_ = true;
    }
    auto step = dfia_step(registry, ann, routes_, fixed_size_);
    auto snap = std::make_shared<const FlowRegistry>(registry);
    if (listener_) listener_(step);
    {
      std::lock_guard lock(mutex_);
      snapshot_ = std::move(snap);
      ++processed_;
      busy_ = false;
    }
    idle_cv_.notify_all();
  }
}

}  // namespace dotsn
