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

#include "dotsn/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

namespace dotsn {

namespace {

ClientOutcome outcome_of(const ClientSession& s) {
  return {s.participant(), s.state(), s.discovered(), s.registered_at(), s.completed_at()};
}

}  // namespace

void InMemoryDiscoveryNetwork::send(Locator from, std::vector<Datagram> out) {
  for (auto& d : out) {
    queue_.push_back({now_ + options_.link_delay, seq_++, from, std::move(d)});
  }
}

void InMemoryDiscoveryNetwork::drain(Nanos until) {
  while (true) {
    // Next datagram, next client deadline, next server tick.
    auto it = std::min_element(queue_.begin(), queue_.end(), [](const Pending& a, const Pending& b) {
      return a.at != b.at ? a.at < b.at : a.seq < b.seq;
    });
    Nanos next_msg = it == queue_.end() ? INT64_MAX : it->at;
    Nanos next_client = INT64_MAX;
    bool all_done = true;
    for (const auto& c : clients_) {
      if (!c.finished()) all_done = false;
      if (c.state() != ClientSession::State::kIdle && c.state() != ClientSession::State::kTimedOut) {
        next_client = std::min(next_client, c.next_deadline());
      }
    }
    if (all_done && until == INT64_MAX && queue_.empty()) return;
    if (all_done && until == INT64_MAX) next_client = INT64_MAX;
    Nanos next_tick = server_ ? next_server_tick_ : INT64_MAX;
    if (all_done && until == INT64_MAX) next_tick = INT64_MAX;

    Nanos next = std::min({next_msg, next_client, next_tick});
    if (next == INT64_MAX || next > until || next > options_.horizon) return;
    now_ = next;

    if (next_msg == next) {
      Pending p = std::move(*it);
      queue_.erase(it);
      WireRecord rec{p.at - options_.link_delay, p.from, p.datagram.to, MessageKind::kData, false};
      if (!p.datagram.payload.empty()) rec.kind = static_cast<MessageKind>(p.datagram.payload[0]);
      if (server_ && p.datagram.to == server_->identity().locator) {
        rec.delivered = true;
        send(server_->identity().locator, server_->handle(p.datagram.payload, now_));
      } else {
        for (auto& c : clients_) {
          if (c.self() == p.datagram.to) {
            rec.delivered = true;
            send(c.self(), c.on_datagram(p.datagram.payload, now_));
          }
        }
      }
      wire_.push_back(rec);
      continue;
    }
    if (next_tick == next) {
      next_server_tick_ += options_.server_tick_interval;
      send(server_->identity().locator, server_->tick(now_));
      continue;
    }
    for (auto& c : clients_) {
      if (c.state() == ClientSession::State::kIdle || c.state() == ClientSession::State::kTimedOut) continue;
      if (c.next_deadline() <= now_) send(c.self(), c.on_tick(now_));
    }
  }
}

std::vector<ClientOutcome> InMemoryDiscoveryNetwork::run() {
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    if (clients_[i].state() != ClientSession::State::kIdle) continue;
    Nanos start = now_ + static_cast<Nanos>(i) * options_.start_stagger;
    // Stagger starts by draining up to each start instant.
    drain(start);
    now_ = std::max(now_, start);
    send(clients_[i].self(), clients_[i].start(now_));
  }
  if (server_ && next_server_tick_ <= now_) next_server_tick_ = now_ + options_.server_tick_interval;
  drain(INT64_MAX);

  std::vector<ClientOutcome> out;
  out.reserve(clients_.size());
  for (const auto& c : clients_) out.push_back(outcome_of(c));
  return out;
}

void InMemoryDiscoveryNetwork::shutdown_client(std::size_t index) {
  auto& c = clients_.at(index);
  send(c.self(), c.shutdown());
  // Drain only in-flight datagrams; idle sessions have no deadlines.
  Nanos until = now_ + 10 * options_.link_delay;
  drain(until);
  now_ = std::max(now_, until);
}

ClientOutcome client_discover(std::vector<EndpointDescriptor> local_endpoints, Locator server_locator,
                              DiscoveryServer* server, ClientOptions options, Guid participant) {
  if (local_endpoints.empty()) throw InvalidValue("client_discover needs at least one local endpoint");
  Locator self{local_endpoints.front().locator.ip, static_cast<std::uint16_t>(server_locator.port + 1)};
  InMemoryDiscoveryNetwork net;
  net.attach_server(server);
  net.add_client(ClientSession(participant, self, std::move(local_endpoints), server_locator, options));
  auto outcomes = net.run();
  if (outcomes.front().state == ClientSession::State::kTimedOut) {
    throw DiscoveryTimeout("no response from discovery server at " + server_locator.to_string());
  }
  return outcomes.front();
}

// ---------------------------------------------------------------------------

Nanos monotonic_now() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

UdpSocket::UdpSocket(std::uint32_t bind_ip, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(bind_ip);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    int err = errno;
    ::close(fd_);
    fd_ = -1;
    throw Error(std::string("bind: ") + std::strerror(err));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  local_ = Locator{ntohl(addr.sin_addr.s_addr), ntohs(addr.sin_port)};
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(other.fd_), local_(other.local_) { other.fd_ = -1; }

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.fd_;
    local_ = other.local_;
    other.fd_ = -1;
  }
  return *this;
}

void UdpSocket::send_to(const Locator& to, ByteView payload) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(to.port);
  addr.sin_addr.s_addr = htonl(to.ip);
  ::sendto(fd_, payload.data(), payload.size(), 0, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
}

std::optional<Bytes> UdpSocket::receive(std::chrono::milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  int ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  if (ready <= 0) return std::nullopt;
  Bytes buf(65536);
  auto n = ::recv(fd_, buf.data(), buf.size(), 0);
  if (n < 0) return std::nullopt;
  buf.resize(static_cast<std::size_t>(n));
  return buf;
}

void serve_udp(DiscoveryServer& server, UdpSocket& socket, const std::atomic<bool>& stop) {
  Nanos last_tick = monotonic_now();
  while (!stop.load()) {
    auto datagram = socket.receive(std::chrono::milliseconds(20));
    Nanos now = monotonic_now();
    if (now - last_tick >= kSecond) {
      last_tick = now;
      for (const auto& d : server.tick(now)) socket.send_to(d.to, d.payload);
    }
    if (!datagram) continue;
    for (const auto& d : server.handle(*datagram, now)) socket.send_to(d.to, d.payload);
  }
}

ClientOutcome udp_client_discover(ClientSession& session, UdpSocket& socket) {
  for (const auto& d : session.start(monotonic_now())) socket.send_to(d.to, d.payload);
  while (!session.finished()) {
    Nanos now = monotonic_now();
    Nanos wait_ns = std::clamp<Nanos>(session.next_deadline() - now, 0, 50 * kMilli);
    auto datagram = socket.receive(std::chrono::milliseconds(wait_ns / kMilli));
    now = monotonic_now();
    std::vector<Datagram> out;
    if (datagram) out = session.on_datagram(*datagram, now);
    if (session.next_deadline() <= now) {
      auto more = session.on_tick(now);
      out.insert(out.end(), more.begin(), more.end());
    }
    for (const auto& d : out) socket.send_to(d.to, d.payload);
  }
  if (session.state() == ClientSession::State::kTimedOut) {
    throw DiscoveryTimeout("no response from discovery server");
  }
  return outcome_of(session);
}

}  // namespace dotsn
