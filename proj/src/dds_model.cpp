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

#include "dotsn/dds_model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace dotsn {

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Guid Guid::from_parts(std::uint64_t prefix_hi, std::uint32_t prefix_lo, std::uint32_t entity) {
  Storage b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(prefix_hi >> (56 - 8 * i));
  for (int i = 0; i < 4; ++i) b[8 + i] = static_cast<std::uint8_t>(prefix_lo >> (24 - 8 * i));
  for (int i = 0; i < 4; ++i) b[12 + i] = static_cast<std::uint8_t>(entity >> (24 - 8 * i));
  return Guid(b);
}

Guid Guid::parse(std::string_view text) {
  Storage b{};
  std::size_t idx = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (idx == b.size()) throw InvalidValue("guid has more than 16 bytes: " + std::string(text));
    if (pos + 2 > text.size()) throw InvalidValue("malformed guid: " + std::string(text));
    int hi = hex_digit(text[pos]);
    int lo = hex_digit(text[pos + 1]);
    if (hi < 0 || lo < 0) throw InvalidValue("malformed guid: " + std::string(text));
    b[idx++] = static_cast<std::uint8_t>(hi * 16 + lo);
    pos += 2;
    if (pos < text.size()) {
      if (text[pos] != '.') throw InvalidValue("malformed guid: " + std::string(text));
      ++pos;
      if (pos == text.size()) throw InvalidValue("malformed guid: " + std::string(text));
    }
  }
  if (idx != b.size()) throw InvalidValue("guid must have 16 bytes: " + std::string(text));
  return Guid(b);
}

bool Guid::is_unset() const {
  return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t v) { return v == 0; });
}

std::string Guid::to_string() const {
  std::string out;
  out.reserve(47);
  char buf[3];
  for (std::size_t i = 0; i < bytes_.size(); ++i) {
    if (i) out.push_back('.');
    std::snprintf(buf, sizeof buf, "%02x", bytes_[i]);
    out.append(buf, 2);
  }
  return out;
}

std::uint32_t parse_ipv4(std::string_view dotted) {
  std::uint32_t ip = 0;
  int parts = 0;
  const char* p = dotted.data();
  const char* end = dotted.data() + dotted.size();
  while (parts < 4) {
    unsigned octet = 0;
    auto [next, ec] = std::from_chars(p, end, octet);
    if (ec != std::errc{} || octet > 255) throw InvalidValue("bad IPv4 address: " + std::string(dotted));
    ip = (ip << 8) | octet;
    ++parts;
    p = next;
    if (parts < 4) {
      if (p == end || *p != '.') throw InvalidValue("bad IPv4 address: " + std::string(dotted));
      ++p;
    }
  }
  if (p != end) throw InvalidValue("bad IPv4 address: " + std::string(dotted));
  return ip;
}

std::string format_ipv4(std::uint32_t ip) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", (ip >> 24) & 0xFF, (ip >> 16) & 0xFF, (ip >> 8) & 0xFF,
                ip & 0xFF);
  return buf;
}

Locator Locator::make(std::string_view dotted_ip, std::uint16_t port) {
  if (port == 0) throw InvalidValue("locator port must be > 0");
  return Locator{parse_ipv4(dotted_ip), port};
}

Locator Locator::parse(std::string_view text) {
  constexpr std::string_view kPrefix = "UDPv4:[";
  if (!text.starts_with(kPrefix)) throw InvalidValue("bad locator: " + std::string(text));
  auto close = text.find("]:", kPrefix.size());
  if (close == std::string_view::npos) throw InvalidValue("bad locator: " + std::string(text));
  auto ip = text.substr(kPrefix.size(), close - kPrefix.size());
  auto port_text = text.substr(close + 2);
  unsigned port = 0;
  auto [next, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || next != port_text.data() + port_text.size() || port == 0 || port > 0xFFFF) {
    throw InvalidValue("bad locator port: " + std::string(text));
  }
  return Locator{parse_ipv4(ip), static_cast<std::uint16_t>(port)};
}

std::string Locator::ip_string() const { return format_ipv4(ip); }

std::string Locator::to_string() const { return "UDPv4:[" + ip_string() + "]:" + std::to_string(port); }

std::string_view to_string(Reliability r) { return r == Reliability::kReliable ? "Reliable" : "BestEffort"; }

Reliability parse_reliability(std::string_view text) {
  if (text == "Reliable") return Reliability::kReliable;
  if (text == "BestEffort") return Reliability::kBestEffort;
  throw InvalidValue("unknown reliability: " + std::string(text));
}

std::string_view to_string(EndpointKind k) { return k == EndpointKind::kWriter ? "writer" : "reader"; }
std::string_view to_string(Liveness s) { return s == Liveness::kAlive ? "alive" : "unalive"; }

bool QosPolicies::valid() const {
  return priority <= 7 && deadline > 0 && latency > 0 && jitter >= 0 && size > 0 && partition >= 1 &&
         partition <= 4094;
}

void QosPolicies::validate() const {
  if (priority > 7) throw InvalidValue("qos.priority must be 0..7");
  if (deadline <= 0) throw InvalidValue("qos.deadline must be > 0");
  if (latency <= 0) throw InvalidValue("qos.latency must be > 0");
  if (jitter < 0) throw InvalidValue("qos.jitter must be >= 0");
  if (size == 0) throw InvalidValue("qos.size must be > 0");
  if (partition < 1 || partition > 4094) throw InvalidValue("qos.partition must be 1..4094");
}

void EndpointDescriptor::validate() const {
  if (topic.empty()) throw InvalidValue("endpoint topic must be non-empty");
  if (guid.is_unset()) throw InvalidValue("endpoint guid is unset");
  if (!locator.valid()) throw InvalidValue("endpoint locator port must be > 0");
  qos.validate();
}

bool qos_compatible(const QosPolicies& writer_qos, const QosPolicies& reader_qos) {
  if (writer_qos.partition != reader_qos.partition) return false;
  if (reader_qos.reliability == Reliability::kReliable && writer_qos.reliability != Reliability::kReliable) {
    return false;
  }
  return writer_qos.deadline <= reader_qos.deadline && writer_qos.latency <= reader_qos.latency &&
         writer_qos.jitter <= reader_qos.jitter;
}

}  // namespace dotsn
