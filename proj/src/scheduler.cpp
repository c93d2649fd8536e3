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

#include "dotsn/scheduler.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace dotsn {

namespace {

Nanos floor_div(Nanos a, Nanos b) {
  Nanos q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Nanos mod(Nanos a, Nanos m) {
  Nanos r = a % m;
  return r < 0 ? r + m : r;
}

}  // namespace

Nanos hyperperiod(const std::vector<Nanos>& periods) {
  Nanos h = 1;
  for (auto p : periods) {
    if (p <= 0) throw InvalidValue("flow period must be > 0");
    Nanos g = std::gcd(h, p);
    __int128 l = static_cast<__int128>(h / g) * p;
    if (l > INT64_MAX) throw Overflow("hyperperiod exceeds the representable range");
    h = static_cast<Nanos>(l);
  }
  return h;
}

Nanos hyperperiod(const std::vector<DdsFlow>& flows) {
  std::vector<Nanos> periods;
  periods.reserve(flows.size());
  for (const auto& f : flows) periods.push_back(f.prd);
  return hyperperiod(periods);
}

std::string flow_label(const DdsFlow& f) {
  std::string w = f.id.writer.to_string();
  std::string r = f.id.reader.to_string();
  return f.topic + " " + w.substr(w.size() - 11) + "->" + r.substr(r.size() - 11);
}

// ---------------------------------------------------------------------------
// FRER planning.
// ---------------------------------------------------------------------------

FrerPlan plan_frer(const DdsFlow& flow, const Topology& topology, std::uint16_t recovery_window) {
  if (flow.reliability != Reliability::kReliable) throw InvalidValue("FRER is planned only for Reliable flows");
  const auto& route = flow.route;
  if (route.size() < 3) throw NoDisjointPath(flow.topic + ": route has no switch");
  const std::string& first = route[1];
  const std::string& last = route[route.size() - 2];
  if (first == last) throw NoDisjointPath(flow.topic + ": talker and listener share switch " + first);
  for (std::size_t i = 1; i + 1 < route.size(); ++i) {
    if (topology.node(route[i]).role != NodeRole::kSwitch) throw NoDisjointPath(flow.topic + ": non-switch relay");
  }

  std::set<std::pair<std::string, std::string>> used;
  for (std::size_t i = 1; i + 2 < route.size(); ++i) {
    used.insert(std::minmax(route[i], route[i + 1]));
  }

  // BFS over switches, avoiding the primary's inter-switch links.
  std::map<std::string, std::string> parent;
  std::deque<std::string> frontier{first};
  parent[first] = first;
  while (!frontier.empty() && !parent.contains(last)) {
    auto cur = frontier.front();
    frontier.pop_front();
    for (const auto& next : topology.neighbors(cur)) {
      if (parent.contains(next)) continue;
      if (topology.node(next).role != NodeRole::kSwitch) continue;
      if (used.contains(std::minmax(cur, next))) continue;
      parent[next] = cur;
      frontier.push_back(next);
    }
  }
  if (!parent.contains(last)) {
    throw NoDisjointPath(flow.topic + ": no link-disjoint path from " + first + " to " + last);
  }
  std::vector<std::string> segment;
  for (std::string n = last; n != first; n = parent[n]) segment.push_back(n);
  segment.push_back(first);
  std::reverse(segment.begin(), segment.end());

  FrerPlan plan;
  plan.flow = flow.id;
  plan.primary = route;
  plan.secondary.push_back(route.front());
  plan.secondary.insert(plan.secondary.end(), segment.begin(), segment.end());
  plan.secondary.push_back(route.back());
  auto in = topology.hop(route[0], first);
  auto out = topology.hop(last, route.back());
  if (!in || !out) throw InvalidValue(flow.topic + ": route not present in topology");
  plan.replication = Port{first, in->ingress_port};
  plan.elimination = out->egress;
  plan.recovery_window = recovery_window;
  return plan;
}

Nanos ScheduledFlow::latency(const Topology& topology) const {
  if (hops.empty()) return 0;
  const auto& last = hops.back();
  auto h = topology.hop(last.egress.node, last.to);
  Nanos prop = h ? h->propagation : 0;
  return last.start + last.duration + prop - release_time;
}

// ---------------------------------------------------------------------------
// Gate control lists.
// ---------------------------------------------------------------------------

namespace {

const GclEntry* entry_at(const std::vector<GclEntry>& entries, Nanos tm) {
  // Entries are sorted by start and non-overlapping.
  auto it = std::upper_bound(entries.begin(), entries.end(), tm,
                             [](Nanos v, const GclEntry& e) { return v < e.start; });
  if (it == entries.begin()) return nullptr;
  --it;
  return tm < it->start + it->duration ? &*it : nullptr;
}

}  // namespace

bool Gcl::open_for(const Port& port, std::uint8_t queue, Nanos t, Nanos len) const {
  auto it = ports.find(port);
  if (it == ports.end() || it->second.empty() || hyperperiod <= 0) return true;
  const auto& entries = it->second;
  const std::uint8_t bit = static_cast<std::uint8_t>(1u << queue);
  Nanos tm = mod(t, hyperperiod);
  Nanos need_end = tm + len;
  const auto* e = entry_at(entries, tm);
  if (!e || !(e->gate_states & bit)) return false;
  Nanos end = e->start + e->duration;
  if (need_end <= end) return true;
  // A window split at the hyperperiod boundary continues at 0.
  if (end != hyperperiod) return false;
  const auto* wrap = entry_at(entries, 0);
  return wrap && (wrap->gate_states & bit) && need_end - hyperperiod <= wrap->duration;
}

Nanos Gcl::next_open(const Port& port, std::uint8_t queue, Nanos t) const {
  auto it = ports.find(port);
  if (it == ports.end() || it->second.empty() || hyperperiod <= 0) return t;
  const std::uint8_t bit = static_cast<std::uint8_t>(1u << queue);
  Nanos base = t - mod(t, hyperperiod);
  for (int cycle = 0; cycle < 2; ++cycle) {
    for (const auto& e : it->second) {
      Nanos abs = base + cycle * hyperperiod + e.start;
      if ((e.gate_states & bit) && abs > t) return abs;
    }
  }
  return INT64_MAX;
}

Gcl build_gcl(const std::vector<ScheduledFlow>& flows, const Topology& topology, std::uint32_t guard_band_bytes) {
  Gcl gcl;
  std::vector<Nanos> periods;
  for (const auto& sf : flows) periods.push_back(sf.flow.prd);
  gcl.hyperperiod = flows.empty() ? 0 : hyperperiod(periods);
  for (const auto& sf : flows) gcl.scheduled_queues |= static_cast<std::uint8_t>(1u << sf.flow.prio);
  if (flows.empty()) return gcl;
  const Nanos H = gcl.hyperperiod;

  std::map<Port, std::vector<GclEntry>> windows;
  auto add_windows = [&](const ScheduledFlow& sf, const HopSlot& hop) {
    const auto bit = static_cast<std::uint8_t>(1u << sf.flow.prio);
    for (Nanos k = 0; k < H / sf.flow.prd; ++k) {
      Nanos s = mod(k * sf.flow.prd + hop.start, H);
      Nanos first = std::min(hop.duration, H - s);
      windows[hop.egress].push_back({bit, s, first});
      if (first < hop.duration) windows[hop.egress].push_back({bit, 0, hop.duration - first});
    }
  };
  for (const auto& sf : flows) {
    for (const auto& h : sf.hops) add_windows(sf, h);
    if (sf.replica) {
      for (const auto& h : sf.replica->hops) add_windows(sf, h);
    }
  }

  const std::uint8_t be_mask = static_cast<std::uint8_t>(~gcl.scheduled_queues);
  for (auto& [port, list] : windows) {
    std::sort(list.begin(), list.end(), [](const GclEntry& a, const GclEntry& b) { return a.start < b.start; });
    const auto link = topology.hop(port.node, [&] {
      for (const auto& sf : flows) {
        for (const auto& h : sf.hops) {
          if (h.egress == port) return h.to;
        }
        if (sf.replica) {
          for (const auto& h : sf.replica->hops) {
            if (h.egress == port) return h.to;
          }
        }
      }
      return std::string{};
    }());
    const Nanos guard = link ? wire_time(guard_band_bytes, link->bandwidth_bps) : 0;

    // Blocked intervals for best-effort queues: [start - guard, end), cyclic.
    std::vector<std::pair<Nanos, Nanos>> blocked;
    for (const auto& w : list) {
      Nanos lo = w.start - guard;
      Nanos hi = w.start + w.duration;
      if (lo >= 0) {
        blocked.emplace_back(lo, hi);
      } else {
        blocked.emplace_back(0, hi);
        blocked.emplace_back(H + lo, H);
      }
    }
    std::sort(blocked.begin(), blocked.end());
    std::vector<GclEntry> out = list;
    Nanos cursor = 0;
    for (const auto& [lo, hi] : blocked) {
      if (lo > cursor) out.push_back({be_mask, cursor, lo - cursor});
      cursor = std::max(cursor, hi);
    }
    if (cursor < H) out.push_back({be_mask, cursor, H - cursor});
    std::sort(out.begin(), out.end(), [](const GclEntry& a, const GclEntry& b) { return a.start < b.start; });
    gcl.ports[port] = std::move(out);
  }
  return gcl;
}

// ---------------------------------------------------------------------------
// Solver.
// ---------------------------------------------------------------------------

namespace {

struct HopTemplate {
  Port egress;
  std::string to;
  Nanos duration = 0;
  Nanos after = 0;  // propagation + processing at `to`
  Nanos propagation = 0;
};

struct FlowTemplate {
  DdsFlow flow;
  std::uint8_t queue = 0;
  std::vector<HopTemplate> primary;
  std::vector<HopTemplate> replica;  // empty unless replicated
  std::optional<Route> replica_route;
  Nanos min_latency = 0;
};

struct Occupation {
  Port port;
  std::uint8_t queue = 0;
  Nanos period = 0;
  Nanos arrive_lo = 0;
  Nanos arrive_hi = 0;
  Nanos start = 0;
  Nanos duration = 0;
  std::size_t owner = 0;
};

struct Placement {
  bool ok = false;
  Nanos hop0_shift = 0;  // > 0 when hop 0 itself collided
  std::vector<HopSlot> primary;
  std::vector<HopSlot> replica;
  std::vector<Occupation> occupations;
};

// Shift needed to clear `cand` of `other`: 0 if compatible, -1 if delaying
// `cand` cannot help.
Nanos conflict_shift(const Occupation& cand, const Occupation& other) {
  const Nanos g = std::gcd(cand.period, other.period);
  // Transmission exclusivity on the port.
  {
    Nanos d = cand.duration;
    Nanos d2 = other.duration;
    if (d + d2 > g) return -1;
    Nanos delta = mod(other.start - cand.start, g);
    if (delta < d) return delta + d2;
    if (delta > g - d2) return delta - (g - d2);
  }
  if (cand.queue != other.queue) return 0;

  // FIFO isolation for every combination of possible arrivals.
  Nanos best = 0;
  for (Nanos ra : {cand.arrive_lo, cand.arrive_hi}) {
    for (Nanos rb : {other.arrive_lo, other.arrive_hi}) {
      const Nanos a_tx = cand.start - ra;
      const Nanos a_end = a_tx + cand.duration;
      const Nanos b_tx = other.start - rb;
      const Nanos b_end = b_tx + other.duration;
      const Nanos lo = -b_end;  // exclusive
      const Nanos hi = a_end;   // exclusive
      const Nanos delta = mod(rb - ra, g);
      for (Nanos k = floor_div(lo - delta, g) + 1;; ++k) {
        Nanos x = delta + k * g;
        if (x >= hi) break;
        if (x == 0) return -1;
        if (x > 0) {
          if (x + b_tx < a_end) return -1;
        } else if (a_tx < x + b_end) {
          best = std::max(best, x + b_end - a_tx);
        }
      }
    }
  }
  return best;
}

class Solver {
 public:
  Solver(std::vector<FlowTemplate> flows, const ScheduleOptions& options)
      : flows_(std::move(flows)), options_(options) {}

  bool solve() {
    placements_.assign(flows_.size(), {});
    deepest_ = 0;
    return place_from(0);
  }

  [[nodiscard]] std::size_t deepest_failure() const { return deepest_; }
  [[nodiscard]] bool budget_exhausted() const { return attempts_ >= options_.search_budget; }
  [[nodiscard]] const std::vector<Placement>& placements() const { return placements_; }
  [[nodiscard]] const std::vector<FlowTemplate>& flows() const { return flows_; }

 private:
  bool place_from(std::size_t i) {
    if (i == flows_.size()) return true;
    if (options_.cancel && options_.cancel->load()) throw Error("cancelled");
    deepest_ = std::max(deepest_, i);
    for (Nanos o : candidates(i)) {
      if (++attempts_ > options_.search_budget) return false;
      auto p = place(i, o);
      if (!p.ok) continue;
      placements_[i] = p;
      committed_.insert(committed_.end(), p.occupations.begin(), p.occupations.end());
      if (place_from(i + 1)) return true;
      committed_.resize(committed_.size() - p.occupations.size());
      if (budget_exhausted()) return false;
    }
    return false;
  }

  // Hop-0 release offsets worth trying: 0 and every point where this flow,
  // sent without waiting, would start a hop right after an existing
  // transmission or queue residence ends.
  std::vector<Nanos> candidates(std::size_t i) const {
    const auto& ft = flows_[i];
    const Nanos p = ft.flow.prd;
    std::set<Nanos> out{0};
    auto add_hops = [&](const std::vector<HopTemplate>& hops, Nanos base) {
      Nanos offset = base;
      for (const auto& h : hops) {
        for (const auto& c : committed_) {
          if (c.port != h.egress) continue;
          const Nanos g = std::gcd(p, c.period);
          for (Nanos end : {c.start + c.duration}) {
            Nanos r = mod(end - offset, g);
            for (Nanos v = r; v < p; v += g) out.insert(v);
          }
        }
        offset += h.duration + h.after;
      }
    };
    add_hops(ft.primary, 0);
    if (!ft.replica.empty()) add_hops(ft.replica, ft.primary.front().duration + ft.primary.front().after);
    return {out.begin(), out.end()};
  }

  // Earliest start >= ready for one hop; -1 if impossible before `limit`.
  Nanos earliest(const Occupation& proto, Nanos ready, Nanos limit, const std::vector<Occupation>& own) const {
    Occupation cand = proto;
    cand.start = ready;
    while (cand.start <= limit) {
      Nanos shift = 0;
      for (const auto* list : {&committed_, &own}) {
        for (const auto& c : *list) {
          if (c.port != cand.port) continue;
          Nanos s = conflict_shift(cand, c);
          if (s < 0) return -1;
          shift = std::max(shift, s);
        }
      }
      if (shift == 0) return cand.start;
      cand.start += shift;
    }
    return -1;
  }

  Placement place(std::size_t i, Nanos o) const {
    const auto& ft = flows_[i];
    Placement p;
    const Nanos limit = o + ft.flow.latency;

    auto occ = [&](const HopTemplate& h, Nanos lo, Nanos hi) {
      Occupation c;
      c.port = h.egress;
      c.queue = ft.queue;
      c.period = ft.flow.prd;
      c.arrive_lo = lo;
      c.arrive_hi = hi;
      c.duration = h.duration;
      c.owner = i;
      return c;
    };

    // Hop 0 leaves exactly at the release offset.
    {
      auto c = occ(ft.primary[0], o, o);
      Nanos s = earliest(c, o, o, p.occupations);
      if (s != o) {
        // Report how far the collision reaches so the caller can skip ahead.
        c.start = o;
        Nanos shift = 0;
        for (const auto& other : committed_) {
          if (other.port == c.port) shift = std::max(shift, conflict_shift(c, other));
        }
        p.hop0_shift = shift;
        return p;
      }
      c.start = o;
      p.occupations.push_back(c);
      p.primary.push_back({c.port, ft.primary[0].to, o, c.duration});
    }
    const Nanos at_first = o + ft.primary[0].duration + ft.primary[0].after;

    auto chain = [&](const std::vector<HopTemplate>& hops, std::size_t from, std::size_t to, Nanos ready,
                     std::vector<HopSlot>& out) -> Nanos {
      for (std::size_t k = from; k < to; ++k) {
        auto c = occ(hops[k], ready, ready);
        Nanos s = earliest(c, ready, limit, p.occupations);
        if (s < 0) return -1;
        c.start = s;
        p.occupations.push_back(c);
        out.push_back({c.port, hops[k].to, s, c.duration});
        ready = s + hops[k].duration + hops[k].after;
      }
      return ready;
    };

    const std::size_t n = ft.primary.size();
    if (ft.replica.empty()) {
      if (chain(ft.primary, 1, n, at_first, p.primary) < 0) return p;
    } else {
      Nanos arr_p = chain(ft.primary, 1, n - 1, at_first, p.primary);
      if (arr_p < 0) return p;
      Nanos arr_r = chain(ft.replica, 0, ft.replica.size(), at_first, p.replica);
      if (arr_r < 0) return p;
      const auto& last = ft.primary[n - 1];
      auto c = occ(last, std::min(arr_p, arr_r), std::max(arr_p, arr_r));
      Nanos s = earliest(c, std::max(arr_p, arr_r), limit, p.occupations);
      if (s < 0) return p;
      c.start = s;
      p.occupations.push_back(c);
      p.primary.push_back({c.port, last.to, s, c.duration});
    }
    const auto& fin = p.primary.back();
    if (fin.start + fin.duration + ft.primary.back().propagation - o > ft.flow.latency) return p;
    p.ok = true;
    return p;
  }

  std::vector<FlowTemplate> flows_;
  const ScheduleOptions& options_;
  std::vector<Placement> placements_;
  std::vector<Occupation> committed_;
  std::size_t attempts_ = 0;
  std::size_t deepest_ = 0;
};

std::vector<HopTemplate> templates_for(const std::vector<Hop>& hops, std::uint32_t size, const Topology& topo) {
  std::vector<HopTemplate> out;
  for (const auto& h : hops) {
    HopTemplate t;
    t.egress = h.egress;
    t.to = h.to;
    t.duration = wire_time(size, h.bandwidth_bps);
    t.propagation = h.propagation;
    t.after = h.propagation + topo.processing_delay(h.to);
    out.push_back(t);
  }
  return out;
}

FlowTemplate make_template(const DdsFlow& f, const Topology& topo, const ScheduleOptions& options) {
  if (f.prd <= 0 || f.latency <= 0) throw InvalidValue(f.topic + ": period and latency must be > 0");
  if (f.prio > 7) throw InvalidValue(f.topic + ": priority must be 0..7");
  if (f.route.size() < 2) throw InvalidValue(f.topic + ": route needs at least two nodes");
  FlowTemplate ft;
  ft.flow = f;
  ft.queue = f.prio;
  ft.primary = templates_for(topo.hops(f.route), f.size, topo);
  if (auto it = options.frer.find(f.id); it != options.frer.end() && f.reliability == Reliability::kReliable) {
    const auto& sec = it->second.secondary;
    // Replica hops run between the replication and elimination switches.
    std::vector<std::string> segment(sec.begin() + 1, sec.end() - 1);
    ft.replica = templates_for(topo.hops(segment), f.size, topo);
    ft.replica_route = sec;
  }
  for (const auto& h : ft.primary) ft.min_latency += h.duration + h.after;
  ft.min_latency -= topo.processing_delay(ft.primary.back().to);
  return ft;
}

bool shares_port(const FlowTemplate& a, const FlowTemplate& b) {
  auto ports = [](const FlowTemplate& t) {
    std::set<Port> s;
    for (const auto& h : t.primary) s.insert(h.egress);
    for (const auto& h : t.replica) s.insert(h.egress);
    return s;
  };
  auto pa = ports(a);
  for (const auto& p : ports(b)) {
    if (pa.contains(p)) return true;
  }
  return false;
}

std::vector<FlowTemplate> ordered(std::vector<FlowTemplate> ts) {
  std::stable_sort(ts.begin(), ts.end(), [](const FlowTemplate& a, const FlowTemplate& b) {
    if (a.flow.prio != b.flow.prio) return a.flow.prio > b.flow.prio;
    if (a.flow.prd != b.flow.prd) return a.flow.prd < b.flow.prd;
    return flow_order(a.flow, b.flow);
  });
  return ts;
}

}  // namespace

ScheduleResult schedule(const std::vector<DdsFlow>& flows, const std::vector<DdsFlow>& static_flows,
                        const Topology& topology, const ScheduleOptions& options) {
  std::vector<FlowTemplate> templates;
  for (const auto* list : {&flows, &static_flows}) {
    for (const auto& f : *list) templates.push_back(make_template(f, topology, options));
  }
  templates = ordered(std::move(templates));

  for (const auto& t : templates) {
    if (t.min_latency > t.flow.latency) {
      return Infeasible{{flow_label(t.flow)},
                        {flow_label(t.flow) + ": contention-free path latency " + std::to_string(t.min_latency) +
                         " ns exceeds bound " + std::to_string(t.flow.latency) + " ns"}};
    }
  }

  Schedule result;
  if (templates.empty()) return result;
  {
    std::vector<Nanos> periods;
    for (const auto& t : templates) periods.push_back(t.flow.prd);
    hyperperiod(periods);  // throws Overflow
  }

  Solver solver(templates, options);
  if (!solver.solve()) {
    const std::size_t culprit = solver.deepest_failure();
    const auto& bad = templates[culprit];
    std::vector<FlowTemplate> conflict{bad};
    for (std::size_t i = 0; i < templates.size(); ++i) {
      if (i != culprit && shares_port(templates[i], bad)) conflict.push_back(templates[i]);
    }
    if (options.minimize_conflicts) {
      ScheduleOptions sub = options;
      sub.minimize_conflicts = false;
      sub.search_budget = std::min<std::size_t>(options.search_budget, 20'000);
      // Deletion filter: drop every member whose removal keeps the set infeasible.
      for (std::size_t k = 1; k < conflict.size();) {
        auto trial = conflict;
        trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(k));
        Solver s(ordered(trial), sub);
        if (!s.solve() && !s.budget_exhausted()) {
          conflict = std::move(trial);
        } else {
          ++k;
        }
      }
    }
    Infeasible inf;
    for (const auto& t : conflict) inf.conflict.push_back(flow_label(t.flow));
    std::sort(inf.conflict.begin(), inf.conflict.end());
    std::string ports;
    for (const auto& h : bad.primary) ports += (ports.empty() ? "" : ",") + h.egress.to_string();
    inf.constraints.push_back(flow_label(bad.flow) + ": no offset satisfies port exclusivity and the latency bound " +
                              std::to_string(bad.flow.latency) + " ns on ports " + ports);
    if (solver.budget_exhausted()) inf.constraints.push_back("search budget exhausted");
    return inf;
  }

  const auto& ts = solver.flows();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto& p = solver.placements()[i];
    ScheduledFlow sf;
    sf.flow = ts[i].flow;
    sf.hops = p.primary;
    sf.release_time = sf.hops.front().start;
    if (ts[i].replica_route) sf.replica = ReplicaSchedule{*ts[i].replica_route, p.replica};
    result.flows.push_back(std::move(sf));
  }
  for (const auto& f : flows) {
    if (f.reliability == Reliability::kReliable && !options.frer.contains(f.id)) {
      result.warnings.push_back(flow_label(f) + ": Reliable flow scheduled without replication");
    }
  }
  std::sort(result.flows.begin(), result.flows.end(),
            [](const ScheduledFlow& a, const ScheduledFlow& b) { return flow_order(a.flow, b.flow); });
  result.gcl = build_gcl(result.flows, topology, options.guard_band_bytes);
  return result;
}

// ---------------------------------------------------------------------------
// Validator. Works on explicit per-instance intervals, not on the solver's
// modular arithmetic.
// ---------------------------------------------------------------------------

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::kRoute: return "route";
    case ViolationKind::kDuration: return "duration";
    case ViolationKind::kPrecedence: return "precedence";
    case ViolationKind::kWindow: return "window";
    case ViolationKind::kOverlap: return "overlap";
    case ViolationKind::kLatency: return "latency";
    case ViolationKind::kJitter: return "jitter";
    case ViolationKind::kGcl: return "gcl";
  }
  return "?";
}

std::size_t ValidationReport::count(ViolationKind k) const {
  return static_cast<std::size_t>(
      std::count_if(violations.begin(), violations.end(), [k](const Violation& v) { return v.kind == k; }));
}

namespace {

struct Piece {
  Nanos start;
  Nanos end;
  std::string frame;
};

}  // namespace

ValidationReport validate_schedule(const std::vector<ScheduledFlow>& flows, const Gcl& gcl,
                                   const Topology& topology) {
  ValidationReport report;
  auto violate = [&](ViolationKind k, std::string detail) { report.violations.push_back({k, std::move(detail)}); };
  if (flows.empty()) return report;

  Nanos H = 1;
  for (const auto& sf : flows) H = std::lcm(H, sf.flow.prd);
  if (gcl.hyperperiod != H) {
    violate(ViolationKind::kGcl, "gcl hyperperiod " + std::to_string(gcl.hyperperiod) + " != lcm " + std::to_string(H));
  }

  std::map<Port, std::vector<Piece>> occupancy;

  for (const auto& sf : flows) {
    const auto& f = sf.flow;
    const std::string label = flow_label(f);
    const auto bit = static_cast<std::uint8_t>(1u << f.prio);

    // Route and durations.
    std::vector<std::string> expected_route;
    expected_route.push_back(sf.hops.empty() ? std::string{} : sf.hops.front().egress.node);
    for (const auto& h : sf.hops) expected_route.push_back(h.to);
    if (sf.hops.empty() || expected_route != f.route) {
      violate(ViolationKind::kRoute, label + ": hops do not follow the flow route");
      continue;
    }
    bool route_ok = true;
    auto check_hop = [&](const HopSlot& h, const std::string& from) {
      const Link* link = nullptr;
      std::uint8_t port = 0;
      for (const auto& l : topology.links()) {
        if (l.a == from && l.b == h.to) { link = &l; port = l.a_port; }
        if (l.b == from && l.a == h.to) { link = &l; port = l.b_port; }
      }
      if (!link || h.egress.node != from || h.egress.port != port) {
        violate(ViolationKind::kRoute, label + ": no egress " + h.egress.to_string() + " towards " + h.to);
        route_ok = false;
        return Nanos{0};
      }
      const Nanos expect = ((static_cast<__int128>(f.size) + 24) * 8 * 1'000'000'000 + link->bandwidth_bps - 1) /
                           link->bandwidth_bps;
      if (h.duration != expect) {
        violate(ViolationKind::kDuration, label + ": duration " + std::to_string(h.duration) + " on " +
                                              h.egress.to_string() + ", expected " + std::to_string(expect));
      }
      return link->propagation;
    };
    auto arrival = [&](const HopSlot& h, Nanos prop) {
      const auto& n = topology.node(h.to);
      return h.start + h.duration + prop + (n.role == NodeRole::kSwitch ? n.processing_delay : 0);
    };

    std::vector<Nanos> props;
    for (std::size_t i = 0; i < sf.hops.size(); ++i) props.push_back(check_hop(sf.hops[i], i ? sf.hops[i - 1].to : f.route.front()));
    std::vector<Nanos> replica_props;
    if (sf.replica) {
      const auto& rr = sf.replica->route;
      if (rr.size() < 4 || rr.front() != f.route.front() || rr.back() != f.route.back() ||
          sf.replica->hops.empty() || sf.replica->hops.front().egress.node != f.route[1] ||
          sf.replica->hops.back().to != f.route[f.route.size() - 2]) {
        violate(ViolationKind::kRoute, label + ": replica route does not join the primary's switches");
        route_ok = false;
      } else {
        for (std::size_t i = 0; i < sf.replica->hops.size(); ++i) {
          replica_props.push_back(
              check_hop(sf.replica->hops[i], i ? sf.replica->hops[i - 1].to : f.route[1]));
        }
      }
    }
    if (!route_ok) continue;

    if (sf.release_time != sf.hops.front().start) {
      violate(ViolationKind::kPrecedence, label + ": release time differs from hop-0 start");
    }
    // Precedence along the primary, and into the final hop from the replica.
    const std::size_t n = sf.hops.size();
    for (std::size_t i = 1; i < n; ++i) {
      Nanos ready = arrival(sf.hops[i - 1], props[i - 1]);
      if (sf.replica && i == n - 1 && !sf.replica->hops.empty()) {
        ready = std::max(ready, arrival(sf.replica->hops.back(), replica_props.back()));
      }
      if (sf.hops[i].start < ready) {
        violate(ViolationKind::kPrecedence, label + ": hop " + std::to_string(i) + " starts at " +
                                                std::to_string(sf.hops[i].start) + " before ready time " +
                                                std::to_string(ready));
      }
    }
    if (sf.replica) {
      for (std::size_t i = 0; i < sf.replica->hops.size(); ++i) {
        Nanos ready = i == 0 ? arrival(sf.hops[0], props[0])
                             : arrival(sf.replica->hops[i - 1], replica_props[i - 1]);
        if (sf.replica->hops[i].start < ready) {
          violate(ViolationKind::kPrecedence, label + ": replica hop " + std::to_string(i) + " starts before ready time");
        }
      }
    }

    // Expand every instance over the hyperperiod.
    std::vector<Nanos> latencies;
    auto expand = [&](const HopSlot& h, const std::string& frame) {
      for (Nanos t0 = 0; t0 < H; t0 += f.prd) {
        Nanos s = (t0 + h.start) % H;
        Nanos e = s + h.duration;
        std::vector<std::pair<Nanos, Nanos>> parts;
        if (e <= H) {
          parts.emplace_back(s, e);
        } else {
          parts.emplace_back(s, H);
          parts.emplace_back(0, e - H);
        }
        for (auto [a, b] : parts) {
          occupancy[h.egress].push_back({a, b, frame});
          bool covered = false;
          if (auto it = gcl.ports.find(h.egress); it != gcl.ports.end()) {
            for (const auto& w : it->second) {
              if ((w.gate_states & bit) && w.start <= a && b <= w.start + w.duration) covered = true;
            }
          }
          if (!covered) {
            violate(ViolationKind::kWindow, frame + ": no open window for queue " + std::to_string(f.prio) + " on " +
                                                h.egress.to_string() + " at [" + std::to_string(a) + "," +
                                                std::to_string(b) + ")");
          }
        }
      }
    };
    for (std::size_t i = 0; i < n; ++i) expand(sf.hops[i], label + " hop " + std::to_string(i));
    if (sf.replica) {
      for (std::size_t i = 0; i < sf.replica->hops.size(); ++i) {
        expand(sf.replica->hops[i], label + " replica hop " + std::to_string(i));
      }
    }
    for (Nanos t0 = 0; t0 < H; t0 += f.prd) {
      Nanos release = t0 + sf.hops.front().start;
      Nanos arrive = t0 + sf.hops.back().start + sf.hops.back().duration + props.back();
      latencies.push_back(arrive - release);
    }
    const auto [lo, hi] = std::minmax_element(latencies.begin(), latencies.end());
    if (*hi > f.latency) {
      violate(ViolationKind::kLatency, label + ": latency " + std::to_string(*hi) + " ns exceeds bound " +
                                           std::to_string(f.latency) + " ns");
    }
    if (*hi - *lo > 0 && *hi - *lo > f.jitter) {
      violate(ViolationKind::kJitter, label + ": latency varies by " + std::to_string(*hi - *lo) + " ns");
    }
  }

  for (auto& [port, pieces] : occupancy) {
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) { return a.start < b.start; });
    std::set<std::pair<std::string, std::string>> reported;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      for (std::size_t j = i + 1; j < pieces.size() && pieces[j].start < pieces[i].end; ++j) {
        auto key = std::minmax(pieces[i].frame, pieces[j].frame);
        if (reported.insert(key).second) {
          violate(ViolationKind::kOverlap, port.to_string() + ": " + key.first + " overlaps " + key.second);
        }
      }
    }
  }

  for (const auto& [port, entries] : gcl.ports) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (e.start < 0 || e.duration <= 0 || e.start + e.duration > gcl.hyperperiod) {
        violate(ViolationKind::kGcl, port.to_string() + ": entry outside [0, hyperperiod)");
      }
      if (i && entries[i - 1].start + entries[i - 1].duration > e.start) {
        violate(ViolationKind::kGcl, port.to_string() + ": entries overlap or are unsorted");
      }
    }
  }
  return report;
}

}  // namespace dotsn
