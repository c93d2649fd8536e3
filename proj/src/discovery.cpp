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

#include "dotsn/discovery.hpp"

#include <algorithm>

namespace dotsn {

namespace {

using Reader = ByteReader<MalformedMessage>;

void put_guid(ByteWriter& w, const Guid& g) { w.raw(g.bytes()); }

Guid get_guid(Reader& r) {
  Guid::Storage s{};
  auto view = r.raw(s.size());
  std::copy(view.begin(), view.end(), s.begin());
  return Guid(s);
}

void put_locator(ByteWriter& w, const Locator& l) {
  w.u32(l.ip);
  w.u16(l.port);
}

Locator get_locator(Reader& r) {
  Locator l;
  l.ip = r.u32();
  l.port = r.u16();
  return l;
}

Liveness get_liveness(Reader& r) {
  auto v = r.u8();
  if (v > 1) throw MalformedMessage("bad liveness value");
  return static_cast<Liveness>(v);
}

void put_endpoint(ByteWriter& w, const EndpointDescriptor& e) {
  w.u8(static_cast<std::uint8_t>(e.kind));
  w.u8(static_cast<std::uint8_t>(e.status));
  put_guid(w, e.guid);
  w.str16(e.topic);
  put_locator(w, e.locator);
  w.u16(e.qos.partition);
  w.u8(e.qos.priority);
  w.i64(e.qos.deadline);
  w.i64(e.qos.latency);
  w.u8(static_cast<std::uint8_t>(e.qos.reliability));
  w.i64(e.qos.jitter);
  w.u32(e.qos.size);
}

EndpointDescriptor get_endpoint(Reader& r) {
  EndpointDescriptor e;
  auto kind = r.u8();
  if (kind > 1) throw MalformedMessage("bad endpoint kind");
  e.kind = static_cast<EndpointKind>(kind);
  e.status = get_liveness(r);
  e.guid = get_guid(r);
  e.topic = r.str16();
  e.locator = get_locator(r);
  e.qos.partition = r.u16();
  e.qos.priority = r.u8();
  e.qos.deadline = r.i64();
  e.qos.latency = r.i64();
  auto rel = r.u8();
  if (rel > 1) throw MalformedMessage("bad reliability value");
  e.qos.reliability = static_cast<Reliability>(rel);
  e.qos.jitter = r.i64();
  e.qos.size = r.u32();
  return e;
}

}  // namespace

Bytes encode_message(const DiscoveryMessage& msg) {
  ByteWriter body;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ParticipantAnnouncement>) {
          put_guid(body, p.participant_guid);
          put_locator(body, p.locator);
          body.u8(static_cast<std::uint8_t>(p.status));
          body.i64(p.lease_duration);
        } else if constexpr (std::is_same_v<T, EndpointAnnouncement>) {
          put_guid(body, p.participant_guid);
          put_endpoint(body, p.endpoint);
        } else {
          body.raw(p);
        }
      },
      msg.payload);

  ByteWriter out;
  out.u8(static_cast<std::uint8_t>(msg.kind()));
  out.u32(static_cast<std::uint32_t>(body.size()));
  out.raw(body.bytes());
  return out.take();
}

DiscoveryMessage decode_message(ByteView bytes) {
  Reader header(bytes);
  auto kind = header.u8();
  auto length = header.u32();
  if (header.remaining() != length) throw MalformedMessage("length field mismatch");
  Reader r(header.raw(length));

  DiscoveryMessage msg;
  switch (kind) {
    case static_cast<std::uint8_t>(MessageKind::kPdp): {
      ParticipantAnnouncement p;
      p.participant_guid = get_guid(r);
      p.locator = get_locator(r);
      p.status = get_liveness(r);
      p.lease_duration = r.i64();
      msg.payload = p;
      break;
    }
    case static_cast<std::uint8_t>(MessageKind::kEdp): {
      EndpointAnnouncement e;
      e.participant_guid = get_guid(r);
      e.endpoint = get_endpoint(r);
      msg.payload = std::move(e);
      break;
    }
    case static_cast<std::uint8_t>(MessageKind::kData): {
      auto rest = r.raw(r.remaining());
      msg.payload = Bytes(rest.begin(), rest.end());
      break;
    }
    default:
      throw MalformedMessage("unknown message kind " + std::to_string(kind));
  }
  if (!r.done()) throw MalformedMessage("trailing bytes in payload");
  return msg;
}

// ---------------------------------------------------------------------------

std::vector<Guid> ServerRegistry::endpoints_of(const Guid& participant) const {
  std::vector<Guid> out;
  for (const auto& [guid, rec] : endpoints) {
    if (rec.participant == participant) out.push_back(guid);
  }
  return out;
}

bool endpoints_match(const EndpointDescriptor& a, const EndpointDescriptor& b) {
  if (a.kind == b.kind || a.topic != b.topic || a.guid == b.guid) return false;
  const auto& w = a.kind == EndpointKind::kWriter ? a : b;
  const auto& r = a.kind == EndpointKind::kWriter ? b : a;
  return qos_compatible(w.qos, r.qos);
}

namespace {

// Forwards of an Unalive endpoint to the owners of every endpoint it matched.
void withdraw(ServerRegistry& registry, const Guid& endpoint_guid, PdpOutcome& out) {
  auto it = registry.endpoints.find(endpoint_guid);
  if (it == registry.endpoints.end()) return;
  EndpointAnnouncement gone{it->second.participant, it->second.descriptor};
  gone.endpoint.status = Liveness::kUnalive;
  registry.endpoints.erase(it);

  std::set<Guid> informed;
  for (const auto& [guid, peer] : registry.endpoints) {
    if (peer.participant == gone.participant_guid) continue;
    if (!endpoints_match(gone.endpoint, peer.descriptor)) continue;
    if (informed.insert(peer.participant).second) out.forwards.push_back({peer.participant, gone});
  }
  out.withdrawn.push_back(std::move(gone));
}

void remove_participant(ServerRegistry& registry, const Guid& participant, PdpOutcome& out) {
  for (const auto& guid : registry.endpoints_of(participant)) withdraw(registry, guid, out);
  registry.participants.erase(participant);
}

}  // namespace

PdpOutcome server_handle_pdp(ServerRegistry& registry, const ParticipantAnnouncement& ann,
                             const ServerIdentity& server, Nanos now) {
  PdpOutcome out;
  if (ann.status == Liveness::kUnalive) {
    remove_participant(registry, ann.participant_guid, out);
    return out;
  }
  auto& rec = registry.participants[ann.participant_guid];
  rec.locator = ann.locator;
  rec.last_seen = now;
  rec.lease_duration = ann.lease_duration;

  ParticipantAnnouncement reply{server.guid, server.locator, Liveness::kAlive, server.lease_duration};
  out.responses.push_back({ann.participant_guid, ann.locator, DiscoveryMessage{reply}});
  return out;
}

std::vector<Forward> server_handle_edp(ServerRegistry& registry, const EndpointAnnouncement& ann, Nanos now) {
  auto owner = registry.participants.find(ann.participant_guid);
  if (owner == registry.participants.end()) {
    throw UnknownParticipant("endpoint announced by unregistered participant " + ann.participant_guid.to_string());
  }
  if (ann.endpoint.guid == ann.participant_guid) throw InvalidValue("endpoint guid equals participant guid");
  owner->second.last_seen = now;

  if (ann.endpoint.status == Liveness::kUnalive) {
    PdpOutcome out;
    withdraw(registry, ann.endpoint.guid, out);
    return out.forwards;
  }

  ann.endpoint.validate();
  if (registry.endpoints.contains(ann.endpoint.guid)) return {};
  registry.endpoints.emplace(ann.endpoint.guid, RegisteredEndpoint{ann.participant_guid, ann.endpoint});

  std::vector<Forward> forwards;
  for (const auto& [guid, peer] : registry.endpoints) {
    if (!endpoints_match(ann.endpoint, peer.descriptor)) continue;
    forwards.push_back({peer.participant, ann});
    forwards.push_back({ann.participant_guid, EndpointAnnouncement{peer.participant, peer.descriptor}});
  }
  return forwards;
}

PdpOutcome server_expire(ServerRegistry& registry, Nanos now) {
  PdpOutcome out;
  std::vector<Guid> expired;
  for (const auto& [guid, rec] : registry.participants) {
    if (now - rec.last_seen > rec.lease_duration) expired.push_back(guid);
  }
  for (const auto& guid : expired) remove_participant(registry, guid, out);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Datagram> DiscoveryServer::route(const std::vector<Forward>& forwards,
                                             const std::vector<Addressed>& direct) {
  std::vector<Datagram> out;
  for (const auto& a : direct) out.push_back({a.to, encode_message(a.message)});
  for (const auto& f : forwards) {
    auto it = registry_.participants.find(f.destination);
    if (it == registry_.participants.end()) continue;
    out.push_back({it->second.locator, encode_message(DiscoveryMessage{f.announcement})});
  }
  return out;
}

void DiscoveryServer::publish(const std::vector<EndpointAnnouncement>& anns, Nanos now) {
  if (!sink_) return;
  for (const auto& a : anns) sink_(a, now);
}

std::vector<Datagram> DiscoveryServer::handle(ByteView datagram, Nanos now) {
  DiscoveryMessage msg;
  try {
    msg = decode_message(datagram);
  } catch (const MalformedMessage&) {
    ++dropped_;
    return {};
  }

  if (const auto* pdp = std::get_if<ParticipantAnnouncement>(&msg.payload)) {
    if (pdp->status == Liveness::kAlive && pdp->lease_duration <= 0) {
      ++dropped_;
      return {};
    }
    auto outcome = server_handle_pdp(registry_, *pdp, identity_, now);
    publish(outcome.withdrawn, now);
    return route(outcome.forwards, outcome.responses);
  }
  if (const auto* edp = std::get_if<EndpointAnnouncement>(&msg.payload)) {
    try {
      auto forwards = server_handle_edp(registry_, *edp, now);
      publish({*edp}, now);
      return route(forwards, {});
    } catch (const Error&) {
      ++dropped_;
      return {};
    }
  }
  return {};  // user data is not the server's business
}

std::vector<Datagram> DiscoveryServer::tick(Nanos now) {
  auto outcome = server_expire(registry_, now);
  publish(outcome.withdrawn, now);
  return route(outcome.forwards, {});
}

// ---------------------------------------------------------------------------

ClientSession::ClientSession(Guid participant, Locator self, std::vector<EndpointDescriptor> local_endpoints,
                             Locator server, ClientOptions options)
    : participant_(participant),
      self_(self),
      locals_(std::move(local_endpoints)),
      server_(server),
      options_(options) {
  if (locals_.empty()) throw InvalidValue("client session needs at least one local endpoint");
  for (const auto& e : locals_) {
    e.validate();
    if (e.guid == participant_) throw InvalidValue("endpoint guid equals participant guid");
  }
}

Datagram ClientSession::pdp(Liveness status) const {
  ParticipantAnnouncement ann{participant_, self_, status, options_.lease_duration};
  return {server_, encode_message(DiscoveryMessage{ann})};
}

std::vector<Datagram> ClientSession::start(Nanos now) {
  state_ = State::kAnnouncing;
  started_at_ = now;
  last_change_ = now;
  next_pdp_ = now + options_.pdp_retry_interval;
  ++pdp_sent_;
  return {pdp(Liveness::kAlive)};
}

std::vector<Datagram> ClientSession::on_datagram(ByteView datagram, Nanos now) {
  DiscoveryMessage msg;
  try {
    msg = decode_message(datagram);
  } catch (const MalformedMessage&) {
    return {};
  }
  std::vector<Datagram> out;
  if (const auto* pdp_reply = std::get_if<ParticipantAnnouncement>(&msg.payload)) {
    if (state_ != State::kAnnouncing || pdp_reply->status != Liveness::kAlive) return {};
    state_ = State::kRegistered;
    registered_at_ = now;
    last_change_ = now;
    next_pdp_ = now + options_.lease_duration / 2;
    for (const auto& e : locals_) {
      out.push_back({server_, encode_message(DiscoveryMessage{EndpointAnnouncement{participant_, e}})});
    }
    return out;
  }
  if (const auto* edp = std::get_if<EndpointAnnouncement>(&msg.payload)) {
    if (state_ == State::kIdle || state_ == State::kTimedOut) return {};
    const auto& e = edp->endpoint;
    bool changed = false;
    if (e.status == Liveness::kAlive) {
      changed = discovered_.insert_or_assign(e.guid, e).second;
    } else {
      changed = discovered_.erase(e.guid) > 0;
    }
    if (changed) last_change_ = now;
  }
  return out;
}

std::vector<Datagram> ClientSession::on_tick(Nanos now) {
  std::vector<Datagram> out;
  switch (state_) {
    case State::kIdle:
    case State::kTimedOut:
      break;
    case State::kAnnouncing:
      if (now - started_at_ >= options_.discovery_timeout) {
        state_ = State::kTimedOut;
        break;
      }
      if (now >= next_pdp_) {
        ++pdp_sent_;
        next_pdp_ = now + options_.pdp_retry_interval;
        out.push_back(pdp(Liveness::kAlive));
      }
      break;
    case State::kRegistered:
    case State::kComplete:
      if (state_ == State::kRegistered && now - last_change_ >= options_.settle_time) {
        state_ = State::kComplete;
        completed_at_ = now;
      }
      if (now >= next_pdp_) {
        ++pdp_sent_;
        next_pdp_ = now + options_.lease_duration / 2;
        out.push_back(pdp(Liveness::kAlive));
      }
      break;
  }
  return out;
}

std::vector<Datagram> ClientSession::shutdown() {
  std::vector<Datagram> out;
  if (state_ == State::kRegistered || state_ == State::kComplete) {
    for (auto e : locals_) {
      e.status = Liveness::kUnalive;
      out.push_back({server_, encode_message(DiscoveryMessage{EndpointAnnouncement{participant_, e}})});
    }
    out.push_back(pdp(Liveness::kUnalive));
  }
  state_ = State::kIdle;
  return out;
}

Nanos ClientSession::next_deadline() const {
  switch (state_) {
    case State::kAnnouncing:
      return std::min(next_pdp_, started_at_ + options_.discovery_timeout);
    case State::kRegistered:
      return std::min(next_pdp_, last_change_ + options_.settle_time);
    case State::kComplete:
      return next_pdp_;
    default:
      return INT64_MAX;
  }
}

}  // namespace dotsn
