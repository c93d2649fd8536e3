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
 * @file transport.hpp
 * @brief Bindings of the discovery engines to a deterministic in-memory
 *        network (virtual time) and to real UDP unicast sockets.
 */

#ifndef DOTSN_TRANSPORT_HPP_
#define DOTSN_TRANSPORT_HPP_

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <vector>

#include "dotsn/discovery.hpp"

namespace dotsn {

/// A datagram as observed on the in-memory wire.
struct WireRecord {
  Nanos sent_at = 0;
  Locator from;
  Locator to;
  MessageKind kind = MessageKind::kData;
  bool delivered = false;
};

struct ClientOutcome {
  Guid participant;
  ClientSession::State state = ClientSession::State::kIdle;
  std::map<Guid, EndpointDescriptor> discovered;
  Nanos registered_at = -1;
  Nanos completed_at = -1;
};

struct InMemoryOptions {
  Nanos link_delay = 100 * kMicro;
  /// Client i starts at i * start_stagger.
  Nanos start_stagger = 0;
  Nanos server_tick_interval = 1 * kSecond;
  Nanos horizon = 60 * kSecond;
};

/// Runs one (optional) server and any number of client sessions over a
/// lossless virtual-time network until every session has finished.
/// Deterministic: events are ordered by (time, insertion order).
class InMemoryDiscoveryNetwork {
 public:
  explicit InMemoryDiscoveryNetwork(InMemoryOptions options = {}) : options_(options) {}

  void attach_server(DiscoveryServer* server) { server_ = server; }
  void add_client(ClientSession session) { clients_.push_back(std::move(session)); }

  /// Runs to completion and returns one outcome per client, in insertion order.
  std::vector<ClientOutcome> run();

  /// Sends `Unalive` for every client's endpoints and participant, then
  /// drains the network.
  void shutdown_client(std::size_t index);

  [[nodiscard]] const std::vector<WireRecord>& wire() const { return wire_; }
  [[nodiscard]] Nanos now() const { return now_; }
  [[nodiscard]] std::vector<ClientSession>& clients() { return clients_; }

 private:
  struct Pending {
    Nanos at;
    std::uint64_t seq;
    Locator from;
    Datagram datagram;
  };

  void send(Locator from, std::vector<Datagram> out);
  void drain(Nanos until);

  InMemoryOptions options_;
  DiscoveryServer* server_ = nullptr;
  std::vector<ClientSession> clients_;
  std::vector<Pending> queue_;
  std::vector<WireRecord> wire_;
  std::uint64_t seq_ = 0;
  Nanos now_ = 0;
  Nanos next_server_tick_ = 0;
};

/// Single-client convenience over the in-memory network. Throws
/// DiscoveryTimeout if the server never answers.
ClientOutcome client_discover(std::vector<EndpointDescriptor> local_endpoints, Locator server_locator,
                              DiscoveryServer* server, ClientOptions options = {},
                              Guid participant = Guid::from_parts(0x010fabcd00000000ULL, 1, 0x000001c1));

// ---------------------------------------------------------------------------
// UDP unicast binding.
// ---------------------------------------------------------------------------

/// RAII UDP socket bound to 127.0.0.1 / any interface.
class UdpSocket {
 public:
  /// Binds to `bind_ip:port`; port 0 picks an ephemeral port.
  UdpSocket(std::uint32_t bind_ip, std::uint16_t port);
  ~UdpSocket();
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;
  UdpSocket(UdpSocket&& other) noexcept;
  UdpSocket& operator=(UdpSocket&& other) noexcept;

  void send_to(const Locator& to, ByteView payload);
  /// Waits up to `timeout`; nullopt on timeout.
  std::optional<Bytes> receive(std::chrono::milliseconds timeout);

  [[nodiscard]] Locator local() const { return local_; }

 private:
  int fd_ = -1;
  Locator local_;
};

/// Serves discovery on `socket` until `stop` becomes true.
void serve_udp(DiscoveryServer& server, UdpSocket& socket, const std::atomic<bool>& stop);

/// Runs a client session over `socket` against a real server. Throws
/// DiscoveryTimeout on an unreachable server.
ClientOutcome udp_client_discover(ClientSession& session, UdpSocket& socket);

Nanos monotonic_now();

}  // namespace dotsn

#endif  // DOTSN_TRANSPORT_HPP_
