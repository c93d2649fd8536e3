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
 * @file tsn_config.hpp
 * @brief Configuration plane: per-switch XML documents, the CNC-to-agent
 *        RPC, agent translation into 0xF123 configuration frames, switch-side
 *        transactional apply, and release-time notification of endpoints.
 *
 * Frame layout (big-endian):
 *
 *   dst_mac[6] src_mac[6] ether_type[2]=0xF123 tsn_type[1] device_id[1]
 *   config_len[2] tsn_config[config_len] fcs[4]
 *
 * tsn_config starts with a segment header byte (bit 7 = last segment,
 * bits 0-6 = sequence number) followed by at most kMaxChunk payload bytes,
 * which keeps every frame (without FCS) within 1514 bytes.
 */

#ifndef DOTSN_TSN_CONFIG_HPP_
#define DOTSN_TSN_CONFIG_HPP_

#include <array>
#include <chrono>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dotsn/scheduler.hpp"

namespace dotsn {

class AgentUnreachable : public Error {
 public:
  using Error::Error;
};

class NotifyTimeout : public Error {
 public:
  using Error::Error;
};

class FrameError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Switch configuration documents.
// ---------------------------------------------------------------------------

struct StreamIdentity {
  std::uint16_t handle = 0;
  Locator src;
  Locator dst;
  std::uint16_t vid = 0;
  std::uint8_t prio = 0;

  bool operator==(const StreamIdentity&) const = default;
};

enum class FrerFunctionKind : std::uint8_t { kIdentify = 1, kReplicate = 2, kEliminate = 3 };

std::string_view to_string(FrerFunctionKind k);

struct FrerFunction {
  std::uint8_t port = 0;
  FrerFunctionKind kind = FrerFunctionKind::kIdentify;
  std::uint16_t stream = 0;
  std::uint16_t recovery_window = 0;

  bool operator==(const FrerFunction&) const = default;
};

struct PortGcl {
  std::uint8_t port = 0;
  std::string peer;
  std::vector<GclEntry> entries;

  bool operator==(const PortGcl&) const = default;
};

struct SwitchConfig {
  std::string name;
  std::uint8_t device_id = 0;
  Nanos hyperperiod = 0;
  std::vector<PortGcl> ports;           // sorted by port
  std::vector<StreamIdentity> streams;  // sorted by handle
  std::vector<FrerFunction> functions;
  Bytes time_sync;                      // opaque As parameters

  bool operator==(const SwitchConfig&) const = default;
};

/// One document per switch in the topology, sorted by switch name. Stream
/// handles are assigned 1.. in canonical flow order over the Reliable flows.
std::vector<SwitchConfig> switch_configs(const Schedule& schedule, const std::map<FlowId, FrerPlan>& frer,
                                         const Topology& topology);

std::string emit_switch_config(const SwitchConfig& config, std::string_view comment = {});
/// Throws SchemaError naming the offending element.
SwitchConfig parse_switch_config(std::string_view doc);

// ---------------------------------------------------------------------------
// Configuration frames.
// ---------------------------------------------------------------------------

using Mac = std::array<std::uint8_t, 6>;

inline constexpr std::uint16_t kConfigEtherType = 0xF123;
inline constexpr std::size_t kMaxFrame = 1514;
inline constexpr std::size_t kFrameHeader = 18;
inline constexpr std::size_t kMaxChunk = kMaxFrame - kFrameHeader - 1;

enum class TsnType : std::uint8_t { kAs = 1, kQbv = 2, kCb = 3 };

std::string_view to_string(TsnType t);

struct TsnConfigFrame {
  Mac dst_mac{};
  Mac src_mac{};
  TsnType tsn_type = TsnType::kQbv;
  std::uint8_t device_id = 0;
  std::uint8_t sequence = 0;
  bool last = true;
  Bytes chunk;

  bool operator==(const TsnConfigFrame&) const = default;
};

Bytes encode_frame(const TsnConfigFrame& frame);
/// Throws FrameError on truncation, a foreign ether type, a bad length or FCS.
TsnConfigFrame decode_frame(ByteView bytes);

/// Splits a payload into frames numbered 0..n-1, last flag on the final one.
std::vector<TsnConfigFrame> segment(TsnType type, std::uint8_t device_id, ByteView payload, const Mac& src,
                                    const Mac& dst);

Bytes encode_qbv(const SwitchConfig& config);
Bytes encode_cb(const SwitchConfig& config);

/// Frames for one switch document: Qbv when any port has a GCL, Cb when any
/// FRER function is present, As when time-sync parameters are present.
std::vector<TsnConfigFrame> agent_translate(std::string_view doc, const Mac& agent_mac = {});
std::vector<TsnConfigFrame> agent_translate(const SwitchConfig& config, const Mac& agent_mac = {});

/// Broadcast MAC of switch `device_id` on the configuration VLAN.
Mac switch_mac(std::uint8_t device_id);

// ---------------------------------------------------------------------------
// Switch side.
// ---------------------------------------------------------------------------

enum class ConfigResult : std::uint8_t { kOk = 0, kParseError = 1, kApplyError = 2 };

std::string_view to_string(ConfigResult r);

struct ConfigStatus {
  std::uint8_t device_id = 0;
  TsnType tsn_type = TsnType::kQbv;
  ConfigResult result = ConfigResult::kOk;
  std::string detail;

  bool operator==(const ConfigStatus&) const = default;
};

/// Live tables of one switch.
struct SwitchState {
  Nanos hyperperiod = 0;
  std::map<std::uint8_t, std::vector<GclEntry>> gcl;
  std::vector<StreamIdentity> streams;
  std::vector<FrerFunction> functions;
  Bytes time_sync;

  bool operator==(const SwitchState&) const = default;
};

/// The state a switch should hold after applying `config`.
SwitchState expected_state(const SwitchConfig& config);

class SwitchDevice {
 public:
  explicit SwitchDevice(std::uint8_t device_id) : device_id_(device_id) {}

  /// Applies one push (a frame stream). Frames for other devices are
  /// ignored. Transactions are grouped by tsn_type; if any of them fails
  /// nothing is staged. The staged state becomes live at the next
  /// hyperperiod boundary of the live configuration (immediately when no
  /// configuration is live), see tick().
  std::vector<ConfigStatus> apply(const std::vector<Bytes>& frames, Nanos now = 0);
  /// Activates the staged configuration once `now` reaches its activation time.
  void tick(Nanos now);

  [[nodiscard]] std::uint8_t device_id() const { return device_id_; }
  [[nodiscard]] const SwitchState& live() const { return live_; }
  [[nodiscard]] bool has_staged() const { return staged_.has_value(); }
  [[nodiscard]] Nanos activation_time() const { return activation_; }

 private:
  std::uint8_t device_id_;
  SwitchState live_;
  bool configured_ = false;
  std::optional<SwitchState> staged_;
  Nanos activation_ = 0;
  std::mutex mutex_;  // one transaction at a time
};

// ---------------------------------------------------------------------------
// CNC <-> agent RPC.
// ---------------------------------------------------------------------------

struct RpcRequest {
  std::uint64_t txn_id = 0;
  std::vector<std::string> documents;

  bool operator==(const RpcRequest&) const = default;
};

struct RpcReply {
  std::uint64_t txn_id = 0;
  std::vector<ConfigStatus> statuses;
  Nanos translate_ns = 0;  // agent parse + frame send
  Nanos apply_ns = 0;      // switch apply + status return

  bool operator==(const RpcReply&) const = default;
};

Bytes encode_request(const RpcRequest& r);
RpcRequest decode_request(ByteView bytes);
Bytes encode_reply(const RpcReply& r);
RpcReply decode_reply(ByteView bytes);

class AgentEndpoint {
 public:
  virtual ~AgentEndpoint() = default;
  /// Request bytes in, reply bytes out. Throws AgentUnreachable.
  virtual Bytes call(ByteView request) = 0;
};

struct DeliveryRecord {
  std::uint64_t txn_id = 0;
  std::string switch_name;
  std::uint8_t device_id = 0;
  std::size_t frames = 0;
};

/// The agent node: parses documents, translates them to frames and sends
/// them over its Ethernet segment to every attached switch.
class Agent : public AgentEndpoint {
 public:
  using FrameFilter = std::function<void(std::vector<Bytes>&)>;

  explicit Agent(Mac mac = {0x02, 0, 0, 0, 0, 0xA0}) : mac_(mac) {}

  void attach(SwitchDevice* device) { switches_.push_back(device); }
  void set_reachable(bool r) { reachable_ = r; }
  /// Sees (and may modify) the encoded frame stream before it is sent.
  void set_frame_filter(FrameFilter f) { filter_ = std::move(f); }
  void set_clock(std::function<Nanos()> now) { now_ = std::move(now); }

  Bytes call(ByteView request) override;

  [[nodiscard]] std::vector<DeliveryRecord> deliveries() const;

 private:
  Mac mac_;
  std::vector<SwitchDevice*> switches_;
  bool reachable_ = true;
  FrameFilter filter_;
  std::function<Nanos()> now_;
  mutable std::mutex mutex_;
  std::vector<DeliveryRecord> deliveries_;
};

struct ConfigTransaction {
  std::uint64_t txn_id = 0;
  std::shared_future<RpcReply> reply;

  [[nodiscard]] std::vector<ConfigStatus> statuses() const { return reply.get().statuses; }
};

/// Validates every document (SchemaError) and hands them to the agent
/// asynchronously. AgentUnreachable surfaces from the handle.
ConfigTransaction push_config(const std::vector<std::string>& documents, AgentEndpoint& agent,
                              std::uint64_t txn_id);

// ---------------------------------------------------------------------------
// Endpoint notification.
// ---------------------------------------------------------------------------

struct ReleaseNotice {
  FlowId flow;
  Nanos release_time = 0;    // hop-0 offset within the period
  Nanos effective_from = 0;  // absolute

  bool operator==(const ReleaseNotice&) const = default;
};

/// Notices for every scheduled flow whose id is in `dds_flows`.
std::vector<ReleaseNotice> release_notices(const Schedule& schedule, const std::set<FlowId>& dds_flows,
                                           Nanos effective_from);

struct EndpointAck {
  std::string endpoint;
  ConfigResult result = ConfigResult::kOk;
  std::string detail;
  std::size_t adopted = 0;
};

/// A talker node as seen by the configuration plane: it owns DataWriters
/// and adopts release times for the flows they source.
class DdsEndpointNode {
 public:
  explicit DdsEndpointNode(std::string name) : name_(std::move(name)) {}

  void add_flow(const DdsFlow& flow) { flows_[flow.id] = flow.prd; }
  void set_responsive(bool r) { responsive_ = r; }

  /// Handles one notification round; nullopt when the node does not answer.
  /// Only notices whose writer belongs to this node are considered.
  std::optional<EndpointAck> receive(const std::vector<ReleaseNotice>& notices);

  /// First publication time >= now for an adopted flow.
  [[nodiscard]] std::optional<Nanos> next_publication(const FlowId& flow, Nanos now) const;

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const std::map<FlowId, ReleaseNotice>& adopted() const { return adopted_; }

 private:
  std::string name_;
  std::map<FlowId, Nanos> flows_;  // flow -> period
  std::map<FlowId, ReleaseNotice> adopted_;
  bool responsive_ = true;
};

struct NotifyResult {
  std::vector<EndpointAck> acks;

  /// The run-time phase may begin only when every node acknowledged Ok.
  [[nodiscard]] bool runtime_ready() const;
};

/// Publishes the notices to every endpoint. Throws NotifyTimeout naming the
/// nodes that did not answer.
NotifyResult notify_endpoints(const std::vector<ReleaseNotice>& notices, std::vector<DdsEndpointNode*> endpoints);

// ---------------------------------------------------------------------------
// Reconfiguration pipeline.
// ---------------------------------------------------------------------------

struct TimingReport {
  Nanos dfia_ns = 0;
  Nanos schedule_ns = 0;   // delta t1
  Nanos translate_ns = 0;  // delta t2
  Nanos apply_ns = 0;      // delta t3

  [[nodiscard]] Nanos total() const { return schedule_ns + translate_ns + apply_ns; }
};

enum class PipelineState { kIdle, kDirty, kScheduling, kConfiguring, kNotifying, kRunTime, kFailed };

std::string_view to_string(PipelineState s);

struct PipelineOptions {
  Nanos debounce = 10 * kMilli;
  ScheduleOptions schedule;
  std::uint16_t recovery_window = 32;
};

struct PipelineOutcome {
  ScheduleResult schedule;
  std::vector<SwitchConfig> configs;
  std::vector<ConfigStatus> statuses;
  std::vector<ReleaseNotice> notices;
  NotifyResult notify;
  TimingReport timing;
  std::map<FlowId, FrerPlan> frer;
};

/// identify -> schedule -> translate -> apply -> notify, re-run whenever the
/// flow set changes, with a debounce to batch bursts of DFIA events.
class ConfigPipeline {
 public:
  ConfigPipeline(Topology topology, std::vector<DdsFlow> static_flows, AgentEndpoint& agent,
                 std::vector<DdsEndpointNode*> endpoints, PipelineOptions options = {});

  /// Records a DFIA step observed at `now` (any time base).
  void on_flow_change(const DfiaStep& step, Nanos now, Nanos dfia_latency = 0);
  /// Runs the pipeline if dirty and the debounce interval has passed.
  std::optional<PipelineOutcome> poll(const std::vector<DdsFlow>& flows, Nanos now);
  /// Unconditional run.
  PipelineOutcome run(const std::vector<DdsFlow>& flows);

  [[nodiscard]] PipelineState state() const { return state_; }
  [[nodiscard]] std::size_t runs() const { return runs_; }

 private:
  Topology topology_;
  std::vector<DdsFlow> static_flows_;
  AgentEndpoint& agent_;
  std::vector<DdsEndpointNode*> endpoints_;
  PipelineOptions options_;
  PipelineState state_ = PipelineState::kIdle;
  Nanos last_change_ = 0;
  Nanos dfia_ns_ = 0;
  std::uint64_t next_txn_ = 1;
  std::size_t runs_ = 0;
};

}  // namespace dotsn

#endif  // DOTSN_TSN_CONFIG_HPP_
