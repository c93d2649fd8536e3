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

#include "dotsn/netsim.hpp"

#include <array>
#include <cstdio>
#include <deque>
#include <functional>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <set>

#include <json.hpp>

namespace dotsn {

namespace {

Nanos sum_of(const std::vector<Nanos>& v) { return std::accumulate(v.begin(), v.end(), Nanos{0}); }

}  // namespace

Nanos EndpointLatencyModel::t_write() const { return t_ser + t_hd + sum_of(t_sub) + t_skt_s; }
Nanos EndpointLatencyModel::t_read() const { return t_skt_r + t_phd + sum_of(t_psub) + t_cb + t_dser; }
Nanos EndpointLatencyModel::t_total() const { return t_disc + t_write() + t_read() + sum_of(t_wait); }

void EndpointLatencyModel::validate() const {
  std::vector<Nanos> all{t_ser, t_hd, t_skt_s, t_skt_r, t_phd, t_cb, t_dser, t_disc, jitter_bound};
  all.insert(all.end(), t_sub.begin(), t_sub.end());
  all.insert(all.end(), t_psub.begin(), t_psub.end());
  all.insert(all.end(), t_wait.begin(), t_wait.end());
  for (auto v : all) {
    if (v < 0) throw InvalidValue("endpoint latency components must be >= 0");
  }
}

Nanos WriteBreakdown::sum() const { return t_ser + t_hd + sum_of(t_sub) + t_skt_s; }
Nanos ReadBreakdown::sum() const { return t_skt_r + t_phd + sum_of(t_psub) + t_cb + t_dser; }

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::kPublishStart: return "PublishStart";
    case EventKind::kEnqueuePort: return "EnqueuePort";
    case EventKind::kGateOpenTx: return "GateOpenTx";
    case EventKind::kLinkDeliver: return "LinkDeliver";
    case EventKind::kEliminated: return "Eliminated";
    case EventKind::kDelivered: return "Delivered";
    case EventKind::kDropped: return "Dropped";
  }
  return "?";
}

std::string_view to_string(Member m) { return m == Member::kPrimary ? "primary" : "replica"; }

std::optional<std::uint32_t> SimTrace::flow_index(std::string_view name) const {
  for (std::size_t i = 0; i < flows.size(); ++i) {
    if (flows[i] == name) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

double offered_load_bps(std::uint32_t size, Nanos period) {
  return static_cast<double>(size) * 8.0 * 1e9 / static_cast<double>(period);
}

namespace {

struct Frame {
  std::uint32_t flow = 0;
  std::uint64_t seq = 0;
  std::uint32_t size = 0;
  std::uint8_t prio = 0;
  Member member = Member::kPrimary;
  const Route* route = nullptr;
  std::size_t at = 0;  // index of the current node in *route
  Nanos t_write = 0;
  bool corrupt = false;
};

struct PortState {
  Port id;
  std::string to;
  std::int64_t bandwidth = 0;
  Nanos propagation = 0;
  std::size_t link = 0;
  std::array<std::deque<Frame>, 8> queues;
  bool busy = false;
  std::set<Nanos> wakes;
};

struct LinkState {
  bool up = true;
  std::uint64_t epoch = 0;
  bool corrupt_next = false;
};

struct FlowRuntime {
  std::string name;
  bool dds = false;
  Route route;
  std::optional<Route> secondary;
  const FrerPlan* plan = nullptr;
  std::uint32_t size = 0;
  std::uint8_t prio = 0;
  Nanos period = 0;
  Nanos first = 0;  // time of instance 0
  const EndpointLatencyModel* talker = nullptr;
  const EndpointLatencyModel* listener = nullptr;
  // sequence recovery at the elimination point
  bool seen_any = false;
  std::uint64_t highest = 0;
  std::set<std::uint64_t> seen;
};

class Engine {
 public:
  explicit Engine(const SimConfig& cfg) : cfg_(cfg), topo_(*cfg.topology), rng_(cfg.seed) {}

  SimTrace run() {
    setup();
    // Publications stop at `duration`; frames already in the network drain.
    const Nanos drain_limit = cfg_.duration + kSecond;
    while (!events_.empty() && events_.top().time < drain_limit) {
      auto ev = events_.top();
      events_.pop();
      now_ = ev.time;
      ev.fn();
    }
    trace_.duration = cfg_.duration;
    return std::move(trace_);
  }

 private:
  struct Event {
    Nanos time;
    std::uint64_t order;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.order > b.order;
    }
  };

  void at(Nanos t, std::function<void()> fn) { events_.push({t, next_order_++, std::move(fn)}); }

  TraceEvent& record(EventKind kind, const Frame& f, const std::string& node, int port = -1) {
    TraceEvent e;
    e.time = now_;
    e.kind = kind;
    e.flow = f.flow;
    e.seq = f.seq;
    e.node = node;
    e.port = port;
    e.member = f.member;
    trace_.events.push_back(std::move(e));
    return trace_.events.back();
  }

  void drop(const Frame& f, const std::string& node, std::string why, int port = -1) {
    record(EventKind::kDropped, f, node, port).detail = std::move(why);
    ++trace_.counters[f.flow].dropped;
  }

  Nanos draw(Nanos bound) {
    if (bound <= 0) return 0;
    return std::uniform_int_distribution<Nanos>(0, bound)(rng_);
  }

  const EndpointLatencyModel& model_of(const std::string& node) const {
    auto it = cfg_.models.find(node);
    return it == cfg_.models.end() ? cfg_.default_model : it->second;
  }

  void check_route(const Route& r, const std::string& what) {
    if (r.size() < 2) throw ConfigMismatch(what + ": route needs at least two nodes");
    for (const auto& n : r) {
      if (!topo_.has_node(n)) throw ConfigMismatch(what + ": unknown node " + n);
    }
    try {
      (void)topo_.hops(r);
    } catch (const InvalidValue& e) {
      throw ConfigMismatch(what + ": " + e.what());
    }
  }

  void setup() {
    if (!cfg_.topology) throw ConfigMismatch("no topology");
    if (cfg_.duration <= 0) throw InvalidValue("duration must be > 0");
    cfg_.default_model.validate();
    for (const auto& [n, m] : cfg_.models) m.validate();
    links_.assign(topo_.links().size(), {});

    if (cfg_.gcl) {
      for (const auto& [port, entries] : cfg_.gcl->ports) {
        bool found = false;
        for (const auto& l : topo_.links()) {
          found = found || (l.a == port.node && l.a_port == port.port) || (l.b == port.node && l.b_port == port.port);
        }
        if (!found) throw ConfigMismatch("gate control list for unknown port " + port.to_string());
      }
    }

    for (const auto& sf : cfg_.flows) {
      check_route(sf.flow.route, sf.name);
      FlowRuntime fr;
      fr.name = sf.name;
      fr.dds = sf.dds;
      fr.route = sf.flow.route;
      if (auto it = cfg_.frer.find(sf.flow.id); it != cfg_.frer.end()) {
        check_route(it->second.secondary, sf.name + " replica");
        fr.secondary = it->second.secondary;
        fr.plan = &it->second;
      }
      fr.size = sf.flow.size;
      fr.prio = sf.flow.prio;
      fr.period = sf.flow.prd;
      if (fr.period <= 0) throw InvalidValue(sf.name + ": period must be > 0");
      fr.talker = &model_of(fr.route.front());
      fr.listener = &model_of(fr.route.back());
      // The application writes early enough that its slowest write still
      // reaches the NIC by the release offset.
      Nanos write_max = sf.dds ? fr.talker->t_write() + fr.talker->jitter_bound : 0;
      fr.first = sf.release - write_max;
      add_flow(std::move(fr));
    }
    for (const auto& spec : cfg_.interference) {
      check_route(spec.path, spec.name);
      if (spec.period <= 0) throw InvalidValue(spec.name + ": period must be > 0");
      FlowRuntime fr;
      fr.name = spec.name;
      fr.route = spec.path;
      fr.size = spec.size;
      fr.prio = spec.prio;
      fr.period = spec.period;
      fr.first = draw(spec.period - 1);
      add_flow(std::move(fr));
    }

    for (const auto& f : cfg_.faults) {
      auto idx = link_index(f.a, f.b);
      if (!idx) throw ConfigMismatch("fault on unknown link " + f.a + "-" + f.b);
      at(f.time, [this, f, i = *idx] {
        auto& l = links_[i];
        switch (f.kind) {
          case FaultKind::kLinkDown:
            l.up = false;
            ++l.epoch;
            break;
          case FaultKind::kLinkUp: l.up = true; break;
          case FaultKind::kFrameCorrupt: l.corrupt_next = true; break;
        }
      });
    }

    for (std::uint32_t i = 0; i < runtime_.size(); ++i) {
      const auto& fr = runtime_[i];
      // First instance whose publication time is not negative.
      std::uint64_t k = fr.first >= 0 ? 0 : static_cast<std::uint64_t>((-fr.first + fr.period - 1) / fr.period);
      at(fr.first + static_cast<Nanos>(k) * fr.period, [this, i, k] { publish(i, k); });
    }
  }

  void add_flow(FlowRuntime fr) {
    trace_.flows.push_back(fr.name);
    trace_.counters.emplace_back();
    runtime_.push_back(std::move(fr));
  }

  std::optional<std::size_t> link_index(const std::string& a, const std::string& b) const {
    const auto& links = topo_.links();
    for (std::size_t i = 0; i < links.size(); ++i) {
      if ((links[i].a == a && links[i].b == b) || (links[i].a == b && links[i].b == a)) return i;
    }
    return std::nullopt;
  }

  void publish(std::uint32_t idx, std::uint64_t k) {
    if (now_ >= cfg_.duration) return;
    auto& fr = runtime_[idx];
    at(now_ + fr.period, [this, idx, k] { publish(idx, k + 1); });

    Frame f;
    f.flow = idx;
    f.seq = k;
    f.size = fr.size;
    f.prio = fr.prio;
    f.route = &fr.route;
    f.at = 0;
    auto& ev = record(EventKind::kPublishStart, f, fr.route.front());
    ++trace_.counters[idx].published;
    if (!fr.dds) {
      enqueue(f, fr.route.front());
      return;
    }
    const auto& m = *fr.talker;
    WriteBreakdown w;
    w.t_ser = m.t_ser;
    w.t_hd = m.t_hd;
    w.t_sub = m.t_sub;
    w.t_skt_s = m.t_skt_s + draw(m.jitter_bound);
    w.t_write = w.sum();
    f.t_write = w.t_write;
    ev.write = w;
    at(now_ + w.t_write, [this, f] { enqueue(f, runtime_[f.flow].route.front()); });
  }

  PortState& port_towards(const std::string& node, const std::string& next) {
    auto hop = topo_.hop(node, next);
    auto [it, inserted] = ports_.try_emplace(hop->egress);
    if (inserted) {
      it->second.id = hop->egress;
      it->second.to = next;
      it->second.bandwidth = hop->bandwidth_bps;
      it->second.propagation = hop->propagation;
      it->second.link = hop->link_index;
    }
    return it->second;
  }

  void enqueue(const Frame& f, const std::string& node) {
    const auto& route = *f.route;
    auto& ps = port_towards(node, route[f.at + 1]);
    auto& q = ps.queues[f.prio];
    if (q.size() >= cfg_.queue_capacity) {
      drop(f, node, "queue full", ps.id.port);
      return;
    }
    record(EventKind::kEnqueuePort, f, node, ps.id.port);
    q.push_back(f);
    try_send(ps);
  }

  void try_send(PortState& ps) {
    if (ps.busy) return;
    const bool gated = cfg_.gcl != nullptr;
    for (int q = 7; q >= 0; --q) {
      if (ps.queues[q].empty()) continue;
      const Frame& head = ps.queues[q].front();
      Nanos dur = wire_time(head.size, ps.bandwidth);
      if (gated && !cfg_.gcl->open_for(ps.id, static_cast<std::uint8_t>(q), now_, dur)) continue;
      transmit(ps, q, dur);
      return;
    }
    if (!gated) return;
    Nanos wake = INT64_MAX;
    for (int q = 0; q < 8; ++q) {
      if (!ps.queues[q].empty()) wake = std::min(wake, cfg_.gcl->next_open(ps.id, static_cast<std::uint8_t>(q), now_));
    }
    if (wake == INT64_MAX || wake <= now_ || !ps.wakes.insert(wake).second) return;
    PortState* p = &ps;
    at(wake, [this, p, wake] {
      p->wakes.erase(wake);
      try_send(*p);
    });
  }

  void transmit(PortState& ps, int q, Nanos dur) {
    Frame f = ps.queues[q].front();
    ps.queues[q].pop_front();
    ps.busy = true;
    record(EventKind::kGateOpenTx, f, ps.id.node, ps.id.port);
    trace_.link_bytes[ps.id] += f.size + kWireOverhead;
    auto& link = links_[ps.link];
    if (link.corrupt_next) {
      f.corrupt = true;
      link.corrupt_next = false;
    }
    const std::uint64_t epoch = link.epoch;
    PortState* p = &ps;
    at(now_ + dur, [this, p, f, epoch] {
      p->busy = false;
      const auto& l = links_[p->link];
      if (!l.up || l.epoch != epoch) {
        drop(f, p->id.node, "link down", p->id.port);
      } else {
        at(now_ + p->propagation, [this, f, to = p->to] { arrive(f, to); });
      }
      try_send(*p);
    });
  }

  void arrive(Frame f, const std::string& node) {
    record(EventKind::kLinkDeliver, f, node);
    if (f.corrupt) {
      drop(f, node, "FCS error");
      return;
    }
    ++f.at;
    if (f.at + 1 == f.route->size()) {
      deliver(f, node);
      return;
    }
    at(now_ + topo_.processing_delay(node), [this, f, node] { relay(f, node); });
  }

  void relay(Frame f, const std::string& node) {
    auto& fr = runtime_[f.flow];
    if (fr.plan) {
      if (f.member == Member::kPrimary && f.at == 1 && node == fr.plan->replication.node) {
        Frame copy = f;
        copy.member = Member::kReplica;
        copy.route = &*fr.secondary;
        copy.at = 1;
        ++trace_.counters[f.flow].replicated;
        enqueue(f, node);
        enqueue(copy, node);
        return;
      }
      if (node == fr.plan->elimination.node && (*f.route)[f.at + 1] == f.route->back()) {
        const std::uint64_t window = fr.plan->recovery_window;
        if (fr.seen_any && f.seq + window <= fr.highest) {
          drop(f, node, "outside recovery window");
          return;
        }
        if (fr.seen.contains(f.seq)) {
          record(EventKind::kEliminated, f, node);
          ++trace_.counters[f.flow].eliminated;
          return;
        }
        fr.seen.insert(f.seq);
        fr.highest = fr.seen_any ? std::max(fr.highest, f.seq) : f.seq;
        fr.seen_any = true;
        while (!fr.seen.empty() && *fr.seen.begin() + window <= fr.highest) fr.seen.erase(fr.seen.begin());
      }
    }
    enqueue(f, node);
  }

  void deliver(const Frame& f, const std::string& node) {
    auto& fr = runtime_[f.flow];
    if (!fr.dds) {
      record(EventKind::kDelivered, f, node);
      ++trace_.counters[f.flow].delivered;
      return;
    }
    const auto& m = *fr.listener;
    ReadBreakdown r;
    r.t_skt_r = m.t_skt_r + draw(m.jitter_bound);
    r.t_phd = m.t_phd;
    r.t_psub = m.t_psub;
    r.t_cb = m.t_cb;
    r.t_dser = m.t_dser;
    r.t_read = r.sum();
    r.t_disc = m.t_disc;
    r.t_wait = m.t_wait;
    r.t_write = f.t_write;
    r.t_total = r.t_disc + r.t_write + r.t_read + sum_of(r.t_wait);
    at(now_ + r.t_read + sum_of(r.t_wait), [this, f, node, r] {
      record(EventKind::kDelivered, f, node).read = r;
      ++trace_.counters[f.flow].delivered;
    });
  }

  const SimConfig& cfg_;
  const Topology& topo_;
  std::mt19937_64 rng_;
  SimTrace trace_;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::uint64_t next_order_ = 0;
  Nanos now_ = 0;
  std::vector<FlowRuntime> runtime_;
  std::map<Port, PortState> ports_;
  std::vector<LinkState> links_;
};

}  // namespace

SimTrace run(const SimConfig& config) { return Engine(config).run(); }

FlowStats measure(const SimTrace& trace, std::string_view flow) {
  auto idx = trace.flow_index(flow);
  if (!idx) throw UnknownFlow("unknown flow " + std::string(flow));
  FlowStats s;
  s.flow = std::string(flow);
  std::map<std::uint64_t, Nanos> published;
  std::map<std::uint64_t, Nanos> delivered;
  std::map<std::uint64_t, std::pair<int, int>> copies_drops;  // per seq
  for (const auto& e : trace.events) {
    if (e.flow != *idx) continue;
    if (e.kind == EventKind::kPublishStart) published.emplace(e.seq, e.time);
    if (e.kind == EventKind::kDelivered) delivered.emplace(e.seq, e.time);
    if (e.kind == EventKind::kEliminated) ++s.duplicates;
    auto& cd = copies_drops[e.seq];
    if (e.kind == EventKind::kEnqueuePort || e.kind == EventKind::kPublishStart) {
      cd.first = std::max(cd.first, e.member == Member::kReplica ? 2 : 1);
    }
    if (e.kind == EventKind::kDropped) ++cd.second;
  }
  s.published = published.size();
  for (const auto& [seq, t] : delivered) {
    auto it = published.find(seq);
    if (it != published.end()) s.latencies.push_back(t - it->second);
  }
  s.delivered = delivered.size();
  for (const auto& [seq, t] : published) {
    if (delivered.contains(seq)) continue;
    const auto& [copies, drops] = copies_drops[seq];
    if (drops >= copies) {
      ++s.loss;
    } else {
      ++s.pending;
    }
  }
  if (!s.latencies.empty()) {
    const auto [lo, hi] = std::minmax_element(s.latencies.begin(), s.latencies.end());
    s.min = *lo;
    s.max = *hi;
    s.jitter = *hi - *lo;
    s.mean = static_cast<double>(sum_of(s.latencies)) / static_cast<double>(s.latencies.size());
  }
  return s;
}

std::size_t count_latency_equation_mismatches(const SimTrace& trace) {
  std::size_t bad = 0;
  for (const auto& e : trace.events) {
    if (e.write && e.write->sum() != e.write->t_write) ++bad;
    if (e.read) {
      const auto& r = *e.read;
      if (r.sum() != r.t_read || r.t_total != r.t_disc + r.t_write + r.t_read + sum_of(r.t_wait)) ++bad;
    }
  }
  return bad;
}

void write_trace_ndjson(const SimTrace& trace, std::ostream& out) {
  for (const auto& e : trace.events) {
    nlohmann::ordered_json j;
    j["time"] = e.time;
    j["event"] = to_string(e.kind);
    j["flow"] = trace.flows[e.flow];
    j["seq"] = e.seq;
    j["node"] = e.node;
    j["port"] = e.port;
    j["member"] = to_string(e.member);
    if (!e.detail.empty()) j["detail"] = e.detail;
    if (e.write) j["t_write"] = e.write->t_write;
    if (e.read) {
      j["t_read"] = e.read->t_read;
      j["t_total"] = e.read->t_total;
    }
    out << j.dump() << '\n';
  }
}

void write_stats_csv(const std::vector<StatsRow>& rows, std::ostream& out) {
  out << "condition,flow,mean,max,jitter,delivered,duplicates,loss\n";
  for (const auto& r : rows) {
    char mean[32];
    std::snprintf(mean, sizeof mean, "%.1f", r.stats.mean);
    out << r.condition << ',' << r.stats.flow << ',' << mean << ',' << r.stats.max << ',' << r.stats.jitter << ','
        << r.stats.delivered << ',' << r.stats.duplicates << ',' << r.stats.loss << '\n';
  }
}

}  // namespace dotsn
