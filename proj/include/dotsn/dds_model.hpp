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
 * @file dds_model.hpp
 * @brief Endpoint-level DDS types shared by discovery, flow identification,
 *        scheduling and simulation.
 */

#ifndef DOTSN_DDS_MODEL_HPP_
#define DOTSN_DDS_MODEL_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "dotsn/common.hpp"

namespace dotsn {

class InvalidValue : public Error {
 public:
  using Error::Error;
};

/// 16-byte entity identifier. The all-zero value means "unset".
class Guid {
 public:
  using Storage = std::array<std::uint8_t, 16>;

  constexpr Guid() = default;
  constexpr explicit Guid(const Storage& bytes) : bytes_(bytes) {}

  /// Builds a guid from a 12-byte prefix-like seed and a 4-byte entity id.
  static Guid from_parts(std::uint64_t prefix_hi, std::uint32_t prefix_lo, std::uint32_t entity);

  /// Parses 16 dot-separated hex bytes ("01.0f.c5...").
  static Guid parse(std::string_view text);

  [[nodiscard]] const Storage& bytes() const { return bytes_; }
  [[nodiscard]] bool is_unset() const;

  /// Dotted lowercase hex, all 16 bytes.
  [[nodiscard]] std::string to_string() const;

  auto operator<=>(const Guid&) const = default;

 private:
  Storage bytes_{};
};

struct Locator {
  std::uint32_t ip = 0;  // host order
  std::uint16_t port = 0;

  static Locator make(std::string_view dotted_ip, std::uint16_t port);

  /// "UDPv4:[a.b.c.d]:port"
  static Locator parse(std::string_view text);

  [[nodiscard]] std::string ip_string() const;
  [[nodiscard]] std::string to_string() const;
  [[nodiscard]] bool valid() const { return port > 0; }

  auto operator<=>(const Locator&) const = default;
};

std::uint32_t parse_ipv4(std::string_view dotted);
std::string format_ipv4(std::uint32_t ip);

enum class Reliability : std::uint8_t { kBestEffort = 0, kReliable = 1 };

std::string_view to_string(Reliability r);
Reliability parse_reliability(std::string_view text);

struct QosPolicies {
  std::uint16_t partition = 1;  // VLAN id, 1..4094
  std::uint8_t priority = 0;    // 0..7
  Nanos deadline = 0;           // publication period
  Nanos latency = 0;            // end-to-end budget
  Reliability reliability = Reliability::kBestEffort;
  Nanos jitter = 0;
  std::uint32_t size = 0;  // topic payload bytes

  [[nodiscard]] bool valid() const;
  /// Throws InvalidValue naming the first violated bound.
  void validate() const;

  bool operator==(const QosPolicies&) const = default;
};

enum class EndpointKind : std::uint8_t { kWriter = 0, kReader = 1 };
enum class Liveness : std::uint8_t { kAlive = 0, kUnalive = 1 };

std::string_view to_string(EndpointKind k);
std::string_view to_string(Liveness s);

struct EndpointDescriptor {
  EndpointKind kind = EndpointKind::kWriter;
  Liveness status = Liveness::kAlive;
  Guid guid;
  std::string topic;
  Locator locator;
  QosPolicies qos;

  void validate() const;

  bool operator==(const EndpointDescriptor&) const = default;
};

/// Request-offered matching: the writer's offer must be at least as strong as
/// what the reader requests. Priority and size never block a match.
bool qos_compatible(const QosPolicies& writer_qos, const QosPolicies& reader_qos);

}  // namespace dotsn

#endif  // DOTSN_DDS_MODEL_HPP_
