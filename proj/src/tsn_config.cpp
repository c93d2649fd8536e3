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

#include "dotsn/tsn_config.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>

#include "dotsn/xml.hpp"

namespace dotsn {

std::string_view to_string(FrerFunctionKind k) {
  switch (k) {
    case FrerFunctionKind::kIdentify: return "identify";
    case FrerFunctionKind::kReplicate: return "replicate";
    case FrerFunctionKind::kEliminate: return "eliminate";
  }
  return "?";
}

std::string_view to_string(TsnType t) {
  switch (t) {
    case TsnType::kAs: return "As";
    case TsnType::kQbv: return "Qbv";
    case TsnType::kCb: return "Cb";
  }
  return "?";
}

std::string_view to_string(ConfigResult r) {
  switch (r) {
    case ConfigResult::kOk: return "Ok";
    case ConfigResult::kParseError: return "ParseError";
    case ConfigResult::kApplyError: return "ApplyError";
  }
  return "?";
}

std::string_view to_string(PipelineState s) {
  switch (s) {
    case PipelineState::kIdle: return "idle";
    case PipelineState::kDirty: return "dirty";
    case PipelineState::kScheduling: return "scheduling";
    case PipelineState::kConfiguring: return "configuring";
    case PipelineState::kNotifying: return "notifying";
    case PipelineState::kRunTime: return "run-time";
    case PipelineState::kFailed: return "failed";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Documents.
// ---------------------------------------------------------------------------

std::vector<SwitchConfig> switch_configs(const Schedule& schedule, const std::map<FlowId, FrerPlan>& frer,
                                         const Topology& topology) {
  std::map<std::string, SwitchConfig> out;
  for (const auto& [name, node] : topology.nodes()) {
    if (node.role != NodeRole::kSwitch) continue;
    auto& c = out[name];
    c.name = name;
    c.device_id = node.device_id;
    c.hyperperiod = schedule.gcl.hyperperiod;
  }
  for (const auto& [port, entries] : schedule.gcl.ports) {
    auto it = out.find(port.node);
    if (it == out.end()) continue;  // end-station ports are not configured over 0xF123
    PortGcl p;
    p.port = port.port;
    for (const auto& l : topology.links()) {
      if (l.a == port.node && l.a_port == port.port) p.peer = l.b;
      if (l.b == port.node && l.b_port == port.port) p.peer = l.a;
    }
    p.entries = entries;
    it->second.ports.push_back(std::move(p));
  }

  std::vector<const DdsFlow*> reliable;
  for (const auto& sf : schedule.flows) {
    if (frer.contains(sf.flow.id)) reliable.push_back(&sf.flow);
  }
  std::sort(reliable.begin(), reliable.end(), [](const DdsFlow* a, const DdsFlow* b) { return flow_order(*a, *b); });
  std::uint16_t handle = 0;
  for (const auto* f : reliable) {
    ++handle;
    const auto& plan = frer.at(f->id);
    StreamIdentity sid{handle, f->src, f->dst, f->vid, f->prio};
    auto& rep = out.at(plan.replication.node);
    rep.streams.push_back(sid);
    rep.functions.push_back({plan.replication.port, FrerFunctionKind::kIdentify, handle, plan.recovery_window});
    rep.functions.push_back({plan.replication.port, FrerFunctionKind::kReplicate, handle, plan.recovery_window});
    auto& eli = out.at(plan.elimination.node);
    eli.streams.push_back(sid);
    eli.functions.push_back({plan.elimination.port, FrerFunctionKind::kEliminate, handle, plan.recovery_window});
  }

  std::vector<SwitchConfig> result;
  for (auto& [name, c] : out) {
    std::sort(c.ports.begin(), c.ports.end(), [](const PortGcl& a, const PortGcl& b) { return a.port < b.port; });
    result.push_back(std::move(c));
  }
  return result;
}

namespace {

std::string hex_byte(std::uint8_t v) {
  char buf[5];
  std::snprintf(buf, sizeof buf, "0x%02X", v);
  return buf;
}

std::string to_hex(ByteView b) {
  std::string s;
  for (auto v : b) {
    char buf[3];
    std::snprintf(buf, sizeof buf, "%02x", v);
    s += buf;
  }
  return s;
}

const xml::Element& need_child(const xml::Element& parent, std::string_view name) {
  const auto* c = parent.child(name);
  if (!c) throw SchemaError("missing element <" + std::string(name) + "> in <" + parent.name + ">");
  return *c;
}

std::string need_attr(const xml::Element& e, std::string_view key) {
  auto v = e.attribute(key);
  if (!v) throw SchemaError("element <" + e.name + "> lacks attribute " + std::string(key));
  return *v;
}

template <typename T>
T number_attr(const xml::Element& e, std::string_view key, long long lo, long long hi, int base = 10) {
  auto text = need_attr(e, key);
  try {
    std::size_t used = 0;
    long long v = std::stoll(text, &used, base);
    if (used != text.size() || v < lo || v > hi) throw std::out_of_range("range");
    return static_cast<T>(v);
  } catch (const std::exception&) {
    throw SchemaError("element <" + e.name + "> has invalid " + std::string(key) + "=\"" + text + "\"");
  }
}

Locator locator_attr(const xml::Element& e, std::string_view key) {
  try {
    return Locator::parse(need_attr(e, key));
  } catch (const InvalidValue&) {
    throw SchemaError("element <" + e.name + "> has invalid " + std::string(key));
  }
}

}  // namespace

std::string emit_switch_config(const SwitchConfig& c, std::string_view comment) {
  xml::Element root("tsn-config");
  root.attr("switch", c.name).attr("device-id", std::to_string(c.device_id));
  root.attr("hyperperiod-ns", std::to_string(c.hyperperiod));
  auto& ifaces = root.add(xml::Element("interfaces"));
  for (const auto& p : c.ports) {
    auto& iface = ifaces.add(xml::Element("interface"));
    iface.attr("port", std::to_string(p.port)).attr("peer", p.peer);
    auto& gcl = iface.add(xml::Element("gate-control-list"));
    std::size_t index = 0;
    for (const auto& e : p.entries) {
      auto& x = gcl.add(xml::Element("entry"));
      x.attr("index", std::to_string(index++)).attr("gate-states", hex_byte(e.gate_states));
      x.attr("start-ns", std::to_string(e.start)).attr("duration-ns", std::to_string(e.duration));
    }
  }
  auto& frer = root.add(xml::Element("frer"));
  for (const auto& s : c.streams) {
    auto& x = frer.add(xml::Element("stream-identity"));
    x.attr("handle", std::to_string(s.handle)).attr("source", s.src.to_string());
    x.attr("destination", s.dst.to_string()).attr("vid", std::to_string(s.vid));
    x.attr("priority", std::to_string(s.prio));
  }
  for (const auto& f : c.functions) {
    auto& x = frer.add(xml::Element("function"));
    x.attr("port", std::to_string(f.port)).attr("kind", std::string(to_string(f.kind)));
    x.attr("stream", std::to_string(f.stream)).attr("recovery-window", std::to_string(f.recovery_window));
  }
  if (!c.time_sync.empty()) root.add({"time-sync", to_hex(c.time_sync)});
  return xml::write_document(root, comment);
}

SwitchConfig parse_switch_config(std::string_view doc) {
  xml::Element root;
  try {
    root = xml::parse_document(doc);
  } catch (const xml::ParseError& e) {
    throw SchemaError(std::string("malformed document: ") + e.what());
  }
  if (root.name != "tsn-config") throw SchemaError("unexpected root element <" + root.name + ">");
  SwitchConfig c;
  c.name = need_attr(root, "switch");
  c.device_id = number_attr<std::uint8_t>(root, "device-id", 0, 255);
  c.hyperperiod = number_attr<Nanos>(root, "hyperperiod-ns", 0, INT64_MAX);
  for (const auto& child : root.children) {
    if (child.name != "interfaces" && child.name != "frer" && child.name != "time-sync") {
      throw SchemaError("unknown element <" + child.name + "> in <tsn-config>");
    }
  }
  for (const auto& iface : need_child(root, "interfaces").children) {
    if (iface.name != "interface") throw SchemaError("unknown element <" + iface.name + "> in <interfaces>");
    PortGcl p;
    p.port = number_attr<std::uint8_t>(iface, "port", 0, 255);
    p.peer = need_attr(iface, "peer");
    for (const auto& e : need_child(iface, "gate-control-list").children) {
      if (e.name != "entry") throw SchemaError("unknown element <" + e.name + "> in <gate-control-list>");
      GclEntry g;
      g.gate_states = number_attr<std::uint8_t>(e, "gate-states", 0, 255, 16);
      g.start = number_attr<Nanos>(e, "start-ns", 0, INT64_MAX);
      g.duration = number_attr<Nanos>(e, "duration-ns", 1, INT64_MAX);
      if (c.hyperperiod > 0 && g.start + g.duration > c.hyperperiod) {
        throw SchemaError("element <entry> extends past hyperperiod-ns");
      }
      p.entries.push_back(g);
    }
    c.ports.push_back(std::move(p));
  }
  for (const auto& x : need_child(root, "frer").children) {
    if (x.name == "stream-identity") {
      StreamIdentity s;
      s.handle = number_attr<std::uint16_t>(x, "handle", 0, 0xFFFF);
      s.src = locator_attr(x, "source");
      s.dst = locator_attr(x, "destination");
      s.vid = number_attr<std::uint16_t>(x, "vid", 0, 4095);
      s.prio = number_attr<std::uint8_t>(x, "priority", 0, 7);
      c.streams.push_back(s);
    } else if (x.name == "function") {
      FrerFunction f;
      f.port = number_attr<std::uint8_t>(x, "port", 0, 255);
      auto kind = need_attr(x, "kind");
      if (kind == "identify") {
        f.kind = FrerFunctionKind::kIdentify;
      } else if (kind == "replicate") {
        f.kind = FrerFunctionKind::kReplicate;
      } else if (kind == "eliminate") {
        f.kind = FrerFunctionKind::kEliminate;
      } else {
        throw SchemaError("element <function> has invalid kind=\"" + kind + "\"");
      }
      f.stream = number_attr<std::uint16_t>(x, "stream", 0, 0xFFFF);
      f.recovery_window = number_attr<std::uint16_t>(x, "recovery-window", 0, 0xFFFF);
      c.functions.push_back(f);
    } else {
      throw SchemaError("unknown element <" + x.name + "> in <frer>");
    }
  }
  if (const auto* ts = root.child("time-sync")) {
    const auto& t = ts->text;
    if (t.size() % 2) throw SchemaError("element <time-sync> has odd hex length");
    for (std::size_t i = 0; i < t.size(); i += 2) {
      try {
        std::size_t used = 0;
        auto v = std::stoul(t.substr(i, 2), &used, 16);
        if (used != 2) throw std::invalid_argument("hex");
        c.time_sync.push_back(static_cast<std::uint8_t>(v));
      } catch (const std::exception&) {
        throw SchemaError("element <time-sync> is not hex");
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Frames.
// ---------------------------------------------------------------------------

namespace {

std::uint32_t fcs(ByteView b) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), b.data(), static_cast<uInt>(b.size())));
}

bool valid_type(std::uint8_t t) { return t >= 1 && t <= 3; }

}  // namespace

Bytes encode_frame(const TsnConfigFrame& f) {
  if (f.chunk.size() > kMaxChunk) throw FrameError("chunk exceeds one frame");
  if (f.sequence > 0x7F) throw FrameError("sequence number exceeds 7 bits");
  ByteWriter w;
  w.raw(f.dst_mac);
  w.raw(f.src_mac);
  w.u16(kConfigEtherType);
  w.u8(static_cast<std::uint8_t>(f.tsn_type));
  w.u8(f.device_id);
  w.u16(static_cast<std::uint16_t>(f.chunk.size() + 1));
  w.u8(static_cast<std::uint8_t>((f.last ? 0x80 : 0) | f.sequence));
  w.raw(f.chunk);
  w.u32(fcs(w.bytes()));
  return w.take();
}

TsnConfigFrame decode_frame(ByteView bytes) {
  ByteReader<FrameError> r(bytes);
  TsnConfigFrame f;
  auto dst = r.raw(6);
  std::copy(dst.begin(), dst.end(), f.dst_mac.begin());
  auto src = r.raw(6);
  std::copy(src.begin(), src.end(), f.src_mac.begin());
  if (r.u16() != kConfigEtherType) throw FrameError("not a configuration frame");
  auto type = r.u8();
  if (!valid_type(type)) throw FrameError("unknown tsn_type " + std::to_string(type));
  f.tsn_type = static_cast<TsnType>(type);
  f.device_id = r.u8();
  auto len = r.u16();
  if (len < 1 || len > kMaxChunk + 1) throw FrameError("config_len out of range");
  if (r.remaining() != static_cast<std::size_t>(len) + 4) throw FrameError("frame length disagrees with config_len");
  auto seg = r.u8();
  f.last = (seg & 0x80) != 0;
  f.sequence = seg & 0x7F;
  auto chunk = r.raw(len - 1u);
  f.chunk.assign(chunk.begin(), chunk.end());
  auto body = bytes.first(bytes.size() - 4);
  if (r.u32() != fcs(body)) throw FrameError("FCS mismatch");
  return f;
}

std::vector<TsnConfigFrame> segment(TsnType type, std::uint8_t device_id, ByteView payload, const Mac& src,
                                    const Mac& dst) {
  std::vector<TsnConfigFrame> out;
  std::size_t pos = 0;
  do {
    if (out.size() > 0x7F) throw FrameError("payload needs more than 128 segments");
    TsnConfigFrame f;
    f.dst_mac = dst;
    f.src_mac = src;
    f.tsn_type = type;
    f.device_id = device_id;
    f.sequence = static_cast<std::uint8_t>(out.size());
    std::size_t n = std::min(kMaxChunk, payload.size() - pos);
    f.chunk.assign(payload.begin() + static_cast<std::ptrdiff_t>(pos),
                   payload.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    f.last = pos == payload.size();
    out.push_back(std::move(f));
  } while (pos < payload.size());
  return out;
}

Bytes encode_qbv(const SwitchConfig& c) {
  ByteWriter w;
  if (c.ports.size() > 0xFF) throw FrameError("too many ports");
  w.u8(static_cast<std::uint8_t>(c.ports.size()));
  for (const auto& p : c.ports) {
    if (p.entries.size() > 0xFFFF) throw FrameError("too many GCL entries");
    w.u8(p.port);
    w.i64(c.hyperperiod);
    w.u16(static_cast<std::uint16_t>(p.entries.size()));
    for (const auto& e : p.entries) {
      w.u8(e.gate_states);
      w.i64(e.start);
      w.i64(e.duration);
    }
  }
  return w.take();
}

Bytes encode_cb(const SwitchConfig& c) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(c.streams.size()));
  for (const auto& s : c.streams) {
    w.u16(s.handle);
    w.u32(s.src.ip);
    w.u16(s.src.port);
    w.u32(s.dst.ip);
    w.u16(s.dst.port);
    w.u16(s.vid);
    w.u8(s.prio);
  }
  w.u16(static_cast<std::uint16_t>(c.functions.size()));
  for (const auto& f : c.functions) {
    w.u8(f.port);
    w.u8(static_cast<std::uint8_t>(f.kind));
    w.u16(f.stream);
    w.u16(f.recovery_window);
  }
  return w.take();
}

namespace {

void decode_qbv(ByteView payload, SwitchState& s) {
  ByteReader<FrameError> r(payload);
  s.gcl.clear();
  s.hyperperiod = 0;
  auto ports = r.u8();
  for (int i = 0; i < ports; ++i) {
    auto port = r.u8();
    auto h = r.i64();
    if (i > 0 && h != s.hyperperiod) throw FrameError("ports disagree on the hyperperiod");
    s.hyperperiod = h;
    auto n = r.u16();
    auto& list = s.gcl[port];
    for (int k = 0; k < n; ++k) {
      GclEntry e;
      e.gate_states = r.u8();
      e.start = r.i64();
      e.duration = r.i64();
      if (e.start < 0 || e.duration <= 0 || e.start + e.duration > h) throw FrameError("GCL entry out of range");
      list.push_back(e);
    }
  }
  if (!r.done()) throw FrameError("trailing bytes in Qbv payload");
}

void decode_cb(ByteView payload, SwitchState& s) {
  ByteReader<FrameError> r(payload);
  s.streams.clear();
  s.functions.clear();
  auto ns = r.u16();
  for (int i = 0; i < ns; ++i) {
    StreamIdentity sid;
    sid.handle = r.u16();
    sid.src.ip = r.u32();
    sid.src.port = r.u16();
    sid.dst.ip = r.u32();
    sid.dst.port = r.u16();
    sid.vid = r.u16();
    sid.prio = r.u8();
    s.streams.push_back(sid);
  }
  auto nf = r.u16();
  for (int i = 0; i < nf; ++i) {
    FrerFunction f;
    f.port = r.u8();
    auto kind = r.u8();
    if (kind < 1 || kind > 3) throw FrameError("unknown FRER function kind");
    f.kind = static_cast<FrerFunctionKind>(kind);
    f.stream = r.u16();
    f.recovery_window = r.u16();
    s.functions.push_back(f);
  }
  if (!r.done()) throw FrameError("trailing bytes in Cb payload");
}

}  // namespace

Mac switch_mac(std::uint8_t device_id) { return {0x01, 0x80, 0xC2, 0xF1, 0x23, device_id}; }

std::vector<TsnConfigFrame> agent_translate(const SwitchConfig& c, const Mac& agent_mac) {
  std::vector<TsnConfigFrame> out;
  auto add = [&](TsnType t, const Bytes& payload) {
    auto frames = segment(t, c.device_id, payload, agent_mac, switch_mac(c.device_id));
    out.insert(out.end(), frames.begin(), frames.end());
  };
  // Qbv and Cb are always sent so that a push fully describes the switch.
  add(TsnType::kQbv, encode_qbv(c));
  add(TsnType::kCb, encode_cb(c));
  if (!c.time_sync.empty()) add(TsnType::kAs, c.time_sync);
  return out;
}

std::vector<TsnConfigFrame> agent_translate(std::string_view doc, const Mac& agent_mac) {
  return agent_translate(parse_switch_config(doc), agent_mac);
}

SwitchState expected_state(const SwitchConfig& c) {
  SwitchState s;
  s.hyperperiod = c.ports.empty() ? 0 : c.hyperperiod;
  for (const auto& p : c.ports) s.gcl[p.port] = p.entries;
  s.streams = c.streams;
  s.functions = c.functions;
  s.time_sync = c.time_sync;
  return s;
}

// ---------------------------------------------------------------------------
// Switch.
// ---------------------------------------------------------------------------

std::vector<ConfigStatus> SwitchDevice::apply(const std::vector<Bytes>& frames, Nanos now) {
  std::lock_guard lock(mutex_);
  struct Txn {
    std::map<std::uint8_t, TsnConfigFrame> segments;
    std::string error;
  };
  std::map<TsnType, Txn> txns;
  std::string unattributed;

  for (const auto& bytes : frames) {
    if (bytes.size() < kFrameHeader) continue;  // cannot be addressed
    if (((bytes[12] << 8) | bytes[13]) != kConfigEtherType) continue;
    if (bytes[15] != device_id_) continue;
    if (!valid_type(bytes[14])) {
      unattributed = "frame with unknown tsn_type";
      continue;
    }
    auto& txn = txns[static_cast<TsnType>(bytes[14])];
    try {
      auto f = decode_frame(bytes);
      if (!txn.segments.emplace(f.sequence, std::move(f)).second) txn.error = "duplicate segment";
    } catch (const FrameError& e) {
      txn.error = e.what();
    }
  }
  if (txns.empty() && unattributed.empty()) return {};

  for (auto t : {TsnType::kQbv, TsnType::kCb}) {
    if (!txns.contains(t)) txns[t].error = "missing transaction";
  }

  SwitchState next = live_;
  for (auto& [type, txn] : txns) {
    if (!txn.error.empty()) continue;
    Bytes payload;
    std::uint8_t expect = 0;
    bool ended = false;
    for (const auto& [seq, f] : txn.segments) {
      if (seq != expect++ || ended) {
        txn.error = "segment gap";
        break;
      }
      ended = f.last;
      payload.insert(payload.end(), f.chunk.begin(), f.chunk.end());
    }
    if (txn.error.empty() && !ended) txn.error = "last segment missing";
    if (!txn.error.empty()) continue;
    try {
      switch (type) {
        case TsnType::kQbv: decode_qbv(payload, next); break;
        case TsnType::kCb: decode_cb(payload, next); break;
        case TsnType::kAs: next.time_sync = payload; break;
      }
    } catch (const FrameError& e) {
      txn.error = e.what();
    }
  }

  bool failed = !unattributed.empty();
  for (const auto& [type, txn] : txns) failed = failed || !txn.error.empty();
  std::vector<ConfigStatus> statuses;
  for (const auto& [type, txn] : txns) {
    ConfigStatus s{device_id_, type, ConfigResult::kOk, {}};
    if (!txn.error.empty()) {
      s.result = ConfigResult::kParseError;
      s.detail = txn.error;
    } else if (!unattributed.empty()) {
      s.result = ConfigResult::kParseError;
      s.detail = unattributed;
    } else if (failed) {
      s.result = ConfigResult::kApplyError;
      s.detail = "rolled back";
    }
    statuses.push_back(std::move(s));
  }
  if (failed) return statuses;

  staged_ = std::move(next);
  if (configured_ && live_.hyperperiod > 0) {
    const Nanos h = live_.hyperperiod;
    activation_ = ((now + h - 1) / h) * h;
  } else {
    activation_ = now;
  }
  if (activation_ <= now) {
    live_ = std::move(*staged_);
    staged_.reset();
    configured_ = true;
  }
  return statuses;
}

void SwitchDevice::tick(Nanos now) {
  std::lock_guard lock(mutex_);
  if (staged_ && now >= activation_) {
    live_ = std::move(*staged_);
    staged_.reset();
    configured_ = true;
  }
}

// ---------------------------------------------------------------------------
// RPC.
// ---------------------------------------------------------------------------

Bytes encode_request(const RpcRequest& r) {
  ByteWriter w;
  w.u64(r.txn_id);
  w.u32(static_cast<std::uint32_t>(r.documents.size()));
  for (const auto& d : r.documents) {
    w.u32(static_cast<std::uint32_t>(d.size()));
    w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(d.data()), d.size()));
  }
  return w.take();
}

RpcRequest decode_request(ByteView bytes) {
  ByteReader<FrameError> r(bytes);
  RpcRequest req;
  req.txn_id = r.u64();
  auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto len = r.u32();
    auto v = r.raw(len);
    req.documents.emplace_back(v.begin(), v.end());
  }
  if (!r.done()) throw FrameError("trailing bytes in request");
  return req;
}

Bytes encode_reply(const RpcReply& r) {
  ByteWriter w;
  w.u64(r.txn_id);
  w.u32(static_cast<std::uint32_t>(r.statuses.size()));
  for (const auto& s : r.statuses) {
    w.u8(s.device_id);
    w.u8(static_cast<std::uint8_t>(s.tsn_type));
    w.u8(static_cast<std::uint8_t>(s.result));
    w.str16(s.detail);
  }
  w.i64(r.translate_ns);
  w.i64(r.apply_ns);
  return w.take();
}

RpcReply decode_reply(ByteView bytes) {
  ByteReader<FrameError> r(bytes);
  RpcReply rep;
  rep.txn_id = r.u64();
  auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    ConfigStatus s;
    s.device_id = r.u8();
    auto t = r.u8();
    if (!valid_type(t)) throw FrameError("unknown tsn_type in reply");
    s.tsn_type = static_cast<TsnType>(t);
    auto res = r.u8();
    if (res > 2) throw FrameError("unknown result in reply");
    s.result = static_cast<ConfigResult>(res);
    s.detail = r.str16();
    rep.statuses.push_back(std::move(s));
  }
  rep.translate_ns = r.i64();
  rep.apply_ns = r.i64();
  if (!r.done()) throw FrameError("trailing bytes in reply");
  return rep;
}

namespace {

Nanos steady_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Bytes Agent::call(ByteView request) {
  if (!reachable_) throw AgentUnreachable("agent does not answer");
  auto req = decode_request(request);
  RpcReply reply;
  reply.txn_id = req.txn_id;
  const Nanos now = now_ ? now_() : 0;
  for (const auto& doc : req.documents) {
    Nanos t0 = steady_ns();
    SwitchConfig cfg;
    try {
      cfg = parse_switch_config(doc);
    } catch (const SchemaError& e) {
      reply.statuses.push_back({0, TsnType::kQbv, ConfigResult::kParseError, e.what()});
      continue;
    }
    std::vector<Bytes> wire;
    for (const auto& f : agent_translate(cfg, mac_)) wire.push_back(encode_frame(f));
    if (filter_) filter_(wire);
    Nanos t1 = steady_ns();
    reply.translate_ns += t1 - t0;
    {
      std::lock_guard lock(mutex_);
      deliveries_.push_back({req.txn_id, cfg.name, cfg.device_id, wire.size()});
    }
    for (auto* sw : switches_) {
      auto st = sw->apply(wire, now);
      reply.statuses.insert(reply.statuses.end(), st.begin(), st.end());
    }
    reply.apply_ns += steady_ns() - t1;
  }
  return encode_reply(reply);
}

std::vector<DeliveryRecord> Agent::deliveries() const {
  std::lock_guard lock(mutex_);
  return deliveries_;
}

ConfigTransaction push_config(const std::vector<std::string>& documents, AgentEndpoint& agent,
                              std::uint64_t txn_id) {
  for (const auto& d : documents) parse_switch_config(d);
  ConfigTransaction t;
  t.txn_id = txn_id;
  if (documents.empty()) {
    std::promise<RpcReply> p;
    p.set_value(RpcReply{txn_id, {}, 0, 0});
    t.reply = p.get_future().share();
    return t;
  }
  auto request = encode_request({txn_id, documents});
  t.reply = std::async(std::launch::async, [&agent, request = std::move(request)] {
              return decode_reply(agent.call(request));
            }).share();
  return t;
}

// ---------------------------------------------------------------------------
// Endpoints.
// ---------------------------------------------------------------------------

std::vector<ReleaseNotice> release_notices(const Schedule& schedule, const std::set<FlowId>& dds_flows,
                                           Nanos effective_from) {
  std::vector<ReleaseNotice> out;
  for (const auto& sf : schedule.flows) {
    if (dds_flows.contains(sf.flow.id)) out.push_back({sf.flow.id, sf.release_time, effective_from});
  }
  return out;
}

std::optional<EndpointAck> DdsEndpointNode::receive(const std::vector<ReleaseNotice>& notices) {
  if (!responsive_) return std::nullopt;
  std::set<Guid> writers;
  for (const auto& [id, prd] : flows_) writers.insert(id.writer);
  EndpointAck ack{name_, ConfigResult::kOk, {}, 0};
  std::map<FlowId, ReleaseNotice> next = adopted_;
  for (const auto& n : notices) {
    if (!writers.contains(n.flow.writer)) continue;
    auto it = flows_.find(n.flow);
    if (it == flows_.end()) {
      ack.result = ConfigResult::kApplyError;
      ack.detail = "unknown flow " + n.flow.writer.to_string() + "->" + n.flow.reader.to_string();
      continue;
    }
    if (n.release_time < 0 || n.release_time >= it->second) {
      ack.result = ConfigResult::kApplyError;
      ack.detail = "release time outside the period";
      continue;
    }
    next[n.flow] = n;
    ++ack.adopted;
  }
  if (ack.result == ConfigResult::kOk) adopted_ = std::move(next);
  return ack;
}

std::optional<Nanos> DdsEndpointNode::next_publication(const FlowId& flow, Nanos now) const {
  auto it = adopted_.find(flow);
  if (it == adopted_.end()) return std::nullopt;
  const Nanos prd = flows_.at(flow);
  const Nanos t = std::max(now, it->second.effective_from);
  Nanos k = (t - it->second.release_time + prd - 1) / prd;
  if (t < it->second.release_time) k = 0;
  return k * prd + it->second.release_time;
}

bool NotifyResult::runtime_ready() const {
  return std::all_of(acks.begin(), acks.end(), [](const EndpointAck& a) { return a.result == ConfigResult::kOk; });
}

NotifyResult notify_endpoints(const std::vector<ReleaseNotice>& notices, std::vector<DdsEndpointNode*> endpoints) {
  NotifyResult result;
  std::string silent;
  for (auto* e : endpoints) {
    auto ack = e->receive(notices);
    if (!ack) {
      silent += (silent.empty() ? "" : ", ") + e->name();
      continue;
    }
    result.acks.push_back(std::move(*ack));
  }
  if (!silent.empty()) throw NotifyTimeout("no acknowledgement from " + silent);
  return result;
}

// ---------------------------------------------------------------------------
// Pipeline.
// ---------------------------------------------------------------------------

ConfigPipeline::ConfigPipeline(Topology topology, std::vector<DdsFlow> static_flows, AgentEndpoint& agent,
                               std::vector<DdsEndpointNode*> endpoints, PipelineOptions options)
    : topology_(std::move(topology)),
      static_flows_(std::move(static_flows)),
      agent_(agent),
      endpoints_(std::move(endpoints)),
      options_(std::move(options)) {}

void ConfigPipeline::on_flow_change(const DfiaStep& step, Nanos now, Nanos dfia_latency) {
  if (!step.changed()) return;
  state_ = PipelineState::kDirty;
  last_change_ = now;
  dfia_ns_ = dfia_latency;
}

std::optional<PipelineOutcome> ConfigPipeline::poll(const std::vector<DdsFlow>& flows, Nanos now) {
  if (state_ != PipelineState::kDirty || now - last_change_ < options_.debounce) return std::nullopt;
  return run(flows);
}

PipelineOutcome ConfigPipeline::run(const std::vector<DdsFlow>& flows) {
  ++runs_;
  PipelineOutcome out;
  out.timing.dfia_ns = dfia_ns_;
  state_ = PipelineState::kScheduling;

  auto opts = options_.schedule;
  for (const auto& f : flows) {
    if (f.reliability != Reliability::kReliable) continue;
    try {
      opts.frer.emplace(f.id, plan_frer(f, topology_, options_.recovery_window));
    } catch (const NoDisjointPath&) {
      // Scheduled without replication; schedule() reports a warning.
    }
  }
  out.frer = opts.frer;
  Nanos t0 = steady_ns();
  out.schedule = schedule(flows, static_flows_, topology_, opts);
  out.timing.schedule_ns = steady_ns() - t0;
  const auto* sched = std::get_if<Schedule>(&out.schedule);
  if (!sched) {
    state_ = PipelineState::kFailed;
    return out;
  }

  state_ = PipelineState::kConfiguring;
  out.configs = switch_configs(*sched, opts.frer, topology_);
  std::vector<std::string> docs;
  for (const auto& c : out.configs) docs.push_back(emit_switch_config(c));
  auto txn = push_config(docs, agent_, next_txn_++);
  auto reply = txn.reply.get();
  out.statuses = reply.statuses;
  out.timing.translate_ns = reply.translate_ns;
  out.timing.apply_ns = reply.apply_ns;
  for (const auto& s : out.statuses) {
    if (s.result != ConfigResult::kOk) {
      state_ = PipelineState::kFailed;
      return out;
    }
  }

  state_ = PipelineState::kNotifying;
  std::set<FlowId> ids;
  for (const auto& f : flows) ids.insert(f.id);
  out.notices = release_notices(*sched, ids, 0);
  out.notify = notify_endpoints(out.notices, endpoints_);
  state_ = out.notify.runtime_ready() ? PipelineState::kRunTime : PipelineState::kFailed;
  return out;
}

}  // namespace dotsn
