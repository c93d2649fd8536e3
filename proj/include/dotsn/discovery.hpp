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
 * @file discovery.hpp
 * @brief Centralized discovery: participant/endpoint announcements, their
 *        binary codec, the Discovery Server registry and the client session.
 *
 * Wire format (all integers big-endian):
 *
 *   kind:u8  length:u32  payload[length]
 *
 * kind 1 = participant (Pdp), 2 = endpoint (Edp), 3 = opaque user data.
 */

#ifndef DOTSN_DISCOVERY_HPP_
#define DOTSN_DISCOVERY_HPP_

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "dotsn/dds_model.hpp"

namespace dotsn {

class MalformedMessage : public Error {
 public:
  using Error::Error;
};

class UnknownParticipant : public Error {
 public:
  using Error::Error;
};

class DiscoveryTimeout : public Error {
 public:
  using Error::Error;
};

struct ParticipantAnnouncement {
  Guid participant_guid;
  Locator locator;
  Liveness status = Liveness::kAlive;
  Nanos lease_duration = 10 * kSecond;

  bool operator==(const ParticipantAnnouncement&) const = default;
};

struct EndpointAnnouncement {
  Guid participant_guid;
  EndpointDescriptor endpoint;

  bool operator==(const EndpointAnnouncement&) const = default;
};

enum class MessageKind : std::uint8_t { kPdp = 1, kEdp = 2, kData = 3 };

struct DiscoveryMessage {
  std::variant<ParticipantAnnouncement, EndpointAnnouncement, Bytes> payload;

  [[nodiscard]] MessageKind kind() const { return static_cast<MessageKind>(payload.index() + 1); }

  bool operator==(const DiscoveryMessage&) const = default;
};

Bytes encode_message(const DiscoveryMessage& msg);

/// Throws MalformedMessage on truncation, trailing bytes, an unknown kind
/// tag, an out-of-range enum value or a length-field mismatch.
DiscoveryMessage decode_message(ByteView bytes);

// ---------------------------------------------------------------------------
// Server registry and handlers.
// ---------------------------------------------------------------------------

struct ParticipantRecord {
  Locator locator;
  Nanos last_seen = 0;
  Nanos lease_duration = 0;
};

struct RegisteredEndpoint {
  Guid participant;
  EndpointDescriptor descriptor;
};

struct ServerRegistry {
  std::map<Guid, ParticipantRecord> participants;
  std::map<Guid, RegisteredEndpoint> endpoints;

  [[nodiscard]] std::vector<Guid> endpoints_of(const Guid& participant) const;
};

/// A message bound for one registered participant.
struct Addressed {
  Guid destination;
  Locator to;
  DiscoveryMessage message;
};

/// One "inform destination about this endpoint" decision of the server.
struct Forward {
  Guid destination;
  EndpointAnnouncement announcement;

  bool operator==(const Forward&) const = default;
};

struct ServerIdentity {
  Guid guid;
  Locator locator;
  Nanos lease_duration = 10 * kSecond;
};

struct PdpOutcome {
  std::vector<Addressed> responses;                // Pdp replies to the announcer
  std::vector<EndpointAnnouncement> withdrawn;     // Unalive, one per removed endpoint
  std::vector<Forward> forwards;                   // withdrawn endpoints to previously matched peers
};

/// True when the two endpoints would be matched by the server: opposite
/// kinds, same topic, compatible QoS in the writer->reader direction.
bool endpoints_match(const EndpointDescriptor& a, const EndpointDescriptor& b);

PdpOutcome server_handle_pdp(ServerRegistry& registry, const ParticipantAnnouncement& ann,
                             const ServerIdentity& server, Nanos now);

/// Throws UnknownParticipant if the announcing participant is not registered.
std::vector<Forward> server_handle_edp(ServerRegistry& registry, const EndpointAnnouncement& ann, Nanos now);

/// Treats every participant whose lease lapsed before `now` as Unalive.
PdpOutcome server_expire(ServerRegistry& registry, Nanos now);

/// Datagram produced by a protocol engine.
struct Datagram {
  Locator to;
  Bytes payload;
};

/// Stateful wrapper used by transports: decodes datagrams, applies the
/// handlers, encodes replies and publishes every observed endpoint
/// announcement to an optional sink (the flow identifier).
class DiscoveryServer {
 public:
  using AnnouncementSink = std::function<void(const EndpointAnnouncement&, Nanos)>;

  explicit DiscoveryServer(ServerIdentity identity) : identity_(identity) {}

  void set_sink(AnnouncementSink sink) { sink_ = std::move(sink); }

  std::vector<Datagram> handle(ByteView datagram, Nanos now);
  std::vector<Datagram> tick(Nanos now);

  [[nodiscard]] const ServerRegistry& registry() const { return registry_; }
  [[nodiscard]] const ServerIdentity& identity() const { return identity_; }
  [[nodiscard]] std::size_t dropped() const { return dropped_; }

 private:
  std::vector<Datagram> route(const std::vector<Forward>& forwards, const std::vector<Addressed>& direct);
  void publish(const std::vector<EndpointAnnouncement>& anns, Nanos now);

  ServerIdentity identity_;
  ServerRegistry registry_;
  AnnouncementSink sink_;
  std::size_t dropped_ = 0;
};

// ---------------------------------------------------------------------------
// Client session.
// ---------------------------------------------------------------------------

struct ClientOptions {
  Nanos pdp_retry_interval = 100 * kMilli;
  Nanos discovery_timeout = 5 * kSecond;
  Nanos lease_duration = 10 * kSecond;
  /// Session completes once registered and quiet for this long.
  Nanos settle_time = 300 * kMilli;
};

/// Transport-agnostic client engine: Pdp to the server (retried until
/// answered), then one Edp per local endpoint. Remote endpoints forwarded
/// by the server are tracked in `discovered()`.
class ClientSession {
 public:
  enum class State { kIdle, kAnnouncing, kRegistered, kComplete, kTimedOut };

  ClientSession(Guid participant, Locator self, std::vector<EndpointDescriptor> local_endpoints, Locator server,
                ClientOptions options = {});

  std::vector<Datagram> start(Nanos now);
  std::vector<Datagram> on_datagram(ByteView datagram, Nanos now);
  std::vector<Datagram> on_tick(Nanos now);
  /// Announces every local endpoint Unalive, then the participant.
  std::vector<Datagram> shutdown();

  /// Earliest time at which on_tick has something to do.
  [[nodiscard]] Nanos next_deadline() const;

  [[nodiscard]] State state() const { return state_; }
  [[nodiscard]] bool finished() const { return state_ == State::kComplete || state_ == State::kTimedOut; }
  [[nodiscard]] const Guid& participant() const { return participant_; }
  [[nodiscard]] const Locator& self() const { return self_; }
  [[nodiscard]] const std::map<Guid, EndpointDescriptor>& discovered() const { return discovered_; }
  [[nodiscard]] Nanos registered_at() const { return registered_at_; }
  [[nodiscard]] Nanos completed_at() const { return completed_at_; }
  [[nodiscard]] Nanos last_change() const { return last_change_; }
  [[nodiscard]] std::size_t pdp_sent() const { return pdp_sent_; }

 private:
  Datagram pdp(Liveness status) const;

  Guid participant_;
  Locator self_;
  std::vector<EndpointDescriptor> locals_;
  Locator server_;
  ClientOptions options_;
  State state_ = State::kIdle;
  Nanos started_at_ = 0;
  Nanos next_pdp_ = 0;
  Nanos registered_at_ = -1;
  Nanos completed_at_ = -1;
  Nanos last_change_ = 0;
  std::size_t pdp_sent_ = 0;
  std::map<Guid, EndpointDescriptor> discovered_;
};

}  // namespace dotsn

#endif  // DOTSN_DISCOVERY_HPP_
