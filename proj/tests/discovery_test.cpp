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

#include <gtest/gtest.h>

#include <thread>

#include "dotsn/discovery.hpp"
#include "dotsn/transport.hpp"
#include "test_support.hpp"

namespace dotsn {
namespace {

using testing::announce;
using testing::endpoint;
using testing::make_qos;
using testing::participant_guid;

const ServerIdentity kServer{Guid::from_parts(0x010fffff00000000ULL, 1, 0x1c1), Locator::make("10.0.0.1", 11811)};

ParticipantAnnouncement pdp_of(std::uint32_t p, Liveness s = Liveness::kAlive) {
  return ParticipantAnnouncement{participant_guid(p), Locator{0x0a000000u + p, 7410}, s, 10 * kSecond};
}

TEST(Codec, RoundTripEveryKind) {
  auto w = endpoint(EndpointKind::kWriter, 1, 1, "ExampleTopic", make_qos());
  std::vector<DiscoveryMessage> msgs{
      DiscoveryMessage{pdp_of(1)},
      DiscoveryMessage{pdp_of(2, Liveness::kUnalive)},
      DiscoveryMessage{announce(w, 1)},
      DiscoveryMessage{Bytes{1, 2, 3, 0, 255}},
      DiscoveryMessage{Bytes{}},
  };
  for (const auto& m : msgs) {
    auto bytes = encode_message(m);
    EXPECT_EQ(decode_message(bytes), m);
    EXPECT_EQ(encode_message(m), bytes);
  }
}

TEST(Codec, TopicBytesAppearExactlyOnce) {
  auto w = endpoint(EndpointKind::kWriter, 1, 1, "ExampleTopic", make_qos());
  auto bytes = encode_message(DiscoveryMessage{announce(w, 1)});
  const std::string text(bytes.begin(), bytes.end());
  auto first = text.find("ExampleTopic");
  ASSERT_NE(first, std::string::npos);
  EXPECT_EQ(text.find("ExampleTopic", first + 1), std::string::npos);
}

TEST(Codec, MalformedInputsRejected) {
  EXPECT_THROW(decode_message(Bytes{}), MalformedMessage);
  auto w = endpoint(EndpointKind::kReader, 1, 1, "T", make_qos());
  auto bytes = encode_message(DiscoveryMessage{announce(w, 1)});
  auto cut = bytes;
  cut.pop_back();
  EXPECT_THROW(decode_message(cut), MalformedMessage);
  auto bad_tag = bytes;
  bad_tag[0] = 9;
  EXPECT_THROW(decode_message(bad_tag), MalformedMessage);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_message(trailing), MalformedMessage);
}

TEST(Codec, EveryTruncationOfARandomMessageIsRejected) {
  std::mt19937_64 rng(3);
  auto w = endpoint(EndpointKind::kWriter, 4, 2, "Sensor", testing::random_qos(rng));
  auto bytes = encode_message(DiscoveryMessage{announce(w, 4)});
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    EXPECT_THROW(decode_message(ByteView(bytes.data(), n)), MalformedMessage) << n;
  }
}

TEST(ServerPdp, FirstAliveRegistersAndAnswersOnce) {
  ServerRegistry reg;
  auto out = server_handle_pdp(reg, pdp_of(1), kServer, 0);
  EXPECT_TRUE(reg.participants.contains(participant_guid(1)));
  ASSERT_EQ(out.responses.size(), 1u);
  EXPECT_EQ(out.responses[0].destination, participant_guid(1));
}

TEST(ServerPdp, DuplicateAliveIsIdempotent) {
  ServerRegistry reg;
  server_handle_pdp(reg, pdp_of(1), kServer, 0);
  auto before = reg.participants.size();
  auto out = server_handle_pdp(reg, pdp_of(1), kServer, 0);
  EXPECT_EQ(reg.participants.size(), before);
  EXPECT_EQ(out.responses.size(), 1u);
}

TEST(ServerPdp, UnaliveRemovesParticipantAndItsEndpoints) {
  ServerRegistry reg;
  server_handle_pdp(reg, pdp_of(1), kServer, 0);
  server_handle_edp(reg, announce(endpoint(EndpointKind::kWriter, 1, 1, "A", make_qos()), 1), 0);
  server_handle_edp(reg, announce(endpoint(EndpointKind::kReader, 1, 2, "B", make_qos()), 1), 0);
  ASSERT_EQ(reg.endpoints.size(), 2u);
  auto out = server_handle_pdp(reg, pdp_of(1, Liveness::kUnalive), kServer, 1);
  EXPECT_FALSE(reg.participants.contains(participant_guid(1)));
  EXPECT_TRUE(reg.endpoints.empty());
  ASSERT_EQ(out.withdrawn.size(), 2u);
  for (const auto& w : out.withdrawn) EXPECT_EQ(w.endpoint.status, Liveness::kUnalive);
}

TEST(ServerEdp, WriterWithoutReadersForwardsNothing) {
  ServerRegistry reg;
  server_handle_pdp(reg, pdp_of(1), kServer, 0);
  auto fw = server_handle_edp(reg, announce(endpoint(EndpointKind::kWriter, 1, 1, "T", make_qos()), 1), 0);
  EXPECT_TRUE(fw.empty());
}

TEST(ServerEdp, OneCompatibleReaderYieldsMutualPair) {
  ServerRegistry reg;
  server_handle_pdp(reg, pdp_of(1), kServer, 0);
  server_handle_pdp(reg, pdp_of(2), kServer, 0);
  auto r = endpoint(EndpointKind::kReader, 2, 1, "T", make_qos());
  auto w = endpoint(EndpointKind::kWriter, 1, 1, "T", make_qos());
  EXPECT_TRUE(server_handle_edp(reg, announce(r, 2), 0).empty());
  auto fw = server_handle_edp(reg, announce(w, 1), 0);
  ASSERT_EQ(fw.size(), 2u);
  std::set<std::pair<Guid, Guid>> got;
  for (const auto& f : fw) got.insert({f.destination, f.announcement.endpoint.guid});
  EXPECT_TRUE(got.contains({participant_guid(2), w.guid}));
  EXPECT_TRUE(got.contains({participant_guid(1), r.guid}));
}

TEST(ServerEdp, FourReadersYieldEightPairsMatchingBruteForce) {
  ServerRegistry reg;
  server_handle_pdp(reg, pdp_of(1), kServer, 0);
  std::vector<EndpointDescriptor> all;
  for (std::uint32_t p = 2; p <= 5; ++p) {
    server_handle_pdp(reg, pdp_of(p), kServer, 0);
    auto r = endpoint(EndpointKind::kReader, p, 1, "T", make_qos());
    all.push_back(r);
    server_handle_edp(reg, announce(r, p), 0);
  }
  // an incompatible and an off-topic reader must not be forwarded
  server_handle_pdp(reg, pdp_of(6), kServer, 0);
  auto strict = make_qos();
  strict.deadline = 100 * kMicro;
  server_handle_edp(reg, announce(endpoint(EndpointKind::kReader, 6, 1, "T", strict), 6), 0);
  server_handle_edp(reg, announce(endpoint(EndpointKind::kReader, 6, 2, "Other", make_qos()), 6), 0);

  auto w = endpoint(EndpointKind::kWriter, 1, 1, "T", make_qos());
  auto fw = server_handle_edp(reg, announce(w, 1), 0);
  all.push_back(w);
  EXPECT_EQ(fw.size(), 2 * testing::brute_force_flows(all).size());
  EXPECT_EQ(fw.size(), 8u);
  for (const auto& f : fw) {
    const auto& e = f.announcement.endpoint;
    EXPECT_EQ(e.topic, "T");
  }
}

TEST(ServerEdp, EdpBeforePdpIsAProtocolError) {
  ServerRegistry reg;
  EXPECT_THROW(server_handle_edp(reg, announce(endpoint(EndpointKind::kWriter, 9, 1, "T", make_qos()), 9), 0),
               UnknownParticipant);
}

TEST(ServerExpire, LapsedLeaseActsAsUnalive) {
  ServerRegistry reg;
  auto p = pdp_of(1);
  p.lease_duration = 1 * kSecond;
  server_handle_pdp(reg, p, kServer, 0);
  server_handle_edp(reg, announce(endpoint(EndpointKind::kWriter, 1, 1, "T", make_qos()), 1), 0);
  EXPECT_TRUE(server_expire(reg, kSecond / 2).withdrawn.empty());
  auto out = server_expire(reg, 2 * kSecond);
  EXPECT_EQ(out.withdrawn.size(), 1u);
  EXPECT_TRUE(reg.participants.empty());
}

TEST(Client, WriterDiscoversRegisteredReader) {
  DiscoveryServer server(kServer);
  auto r = endpoint(EndpointKind::kReader, 2, 1, "T", make_qos(), Locator::make("10.0.0.2", 7410));
  auto w = endpoint(EndpointKind::kWriter, 1, 1, "T", make_qos(), Locator::make("10.0.0.3", 7410));
  client_discover({r}, kServer.locator, &server, {}, participant_guid(2));
  auto out = client_discover({w}, kServer.locator, &server, {}, participant_guid(1));
  EXPECT_EQ(out.state, ClientSession::State::kComplete);
  ASSERT_EQ(out.discovered.size(), 1u);
  EXPECT_EQ(out.discovered.begin()->second, r);
}

TEST(Client, UnreachableServerTimesOut) {
  auto w = endpoint(EndpointKind::kWriter, 1, 1, "T", make_qos());
  EXPECT_THROW(client_discover({w}, kServer.locator, nullptr), DiscoveryTimeout);
}

TEST(Client, ConcurrentClientsLearnEachOtherOnlyThroughTheServer) {
  DiscoveryServer server(kServer);
  InMemoryDiscoveryNetwork net;
  net.attach_server(&server);
  auto la = Locator::make("10.0.0.2", 7410);
  auto lb = Locator::make("10.0.0.3", 7410);
  auto w = endpoint(EndpointKind::kWriter, 1, 1, "T", make_qos(), la);
  auto r = endpoint(EndpointKind::kReader, 2, 1, "T", make_qos(), lb);
  net.add_client(ClientSession(participant_guid(1), la, {w}, kServer.locator));
  net.add_client(ClientSession(participant_guid(2), lb, {r}, kServer.locator));
  auto out = net.run();
  ASSERT_EQ(out.size(), 2u);
  ASSERT_EQ(out[0].discovered.size(), 1u);
  ASSERT_EQ(out[1].discovered.size(), 1u);
  EXPECT_EQ(out[0].discovered.begin()->first, r.guid);
  EXPECT_EQ(out[1].discovered.begin()->first, w.guid);
  for (const auto& rec : net.wire()) {
    EXPECT_TRUE(rec.from == kServer.locator || rec.to == kServer.locator)
        << rec.from.to_string() << " -> " << rec.to.to_string();
  }
}

TEST(Client, ForwardingIsCompleteAndOrderIndependent) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 20; ++round) {
    std::vector<std::pair<std::uint32_t, EndpointDescriptor>> eps;
    for (std::uint32_t p = 1; p <= 6; ++p) {
      for (std::uint32_t e = 1; e <= 2; ++e) {
        auto kind = std::bernoulli_distribution(0.5)(rng) ? EndpointKind::kWriter : EndpointKind::kReader;
        auto topic = std::string("T") + std::to_string(std::uniform_int_distribution<int>(0, 1)(rng));
        eps.push_back({p, endpoint(kind, p, e, topic, testing::random_qos(rng))});
      }
    }
    std::vector<EndpointDescriptor> all;
    for (const auto& [p, d] : eps) all.push_back(d);
    const auto expected = testing::brute_force_flows(all);
    std::optional<std::set<std::pair<Guid, Guid>>> first;
    for (int perm = 0; perm < 5; ++perm) {
      std::shuffle(eps.begin(), eps.end(), rng);
      ServerRegistry reg;
      std::set<std::pair<Guid, Guid>> informed;  // (participant informed, endpoint)
      for (std::uint32_t p = 1; p <= 6; ++p) server_handle_pdp(reg, pdp_of(p), kServer, 0);
      for (const auto& [p, d] : eps) {
        for (const auto& f : server_handle_edp(reg, announce(d, p), 0)) {
          informed.insert({f.destination, f.announcement.endpoint.guid});
        }
      }
      std::size_t pairs = 0;
      for (const auto& id : expected) {
        auto owner = [&](const Guid& g) {
          for (const auto& [p, d] : eps) {
            if (d.guid == g) return participant_guid(p);
          }
          return Guid{};
        };
        EXPECT_TRUE(informed.contains({owner(id.reader), id.writer}));
        EXPECT_TRUE(informed.contains({owner(id.writer), id.reader}));
        pairs += 2;
      }
      EXPECT_EQ(informed.size(), pairs);
      if (!first) first = informed;
      EXPECT_EQ(*first, informed);
    }
  }
}

TEST(Udp, LoopbackSessionCompletes) {
  UdpSocket server_socket(parse_ipv4("127.0.0.1"), 0);
  ServerIdentity id = kServer;
  id.locator = server_socket.local();
  DiscoveryServer server(id);
  std::atomic<bool> stop{false};
  std::thread serving([&] { serve_udp(server, server_socket, stop); });
  ClientOptions opts;
  opts.settle_time = 200 * kMilli;
  UdpSocket a(parse_ipv4("127.0.0.1"), 0);
  UdpSocket b(parse_ipv4("127.0.0.1"), 0);
  ClientSession sa(participant_guid(1), a.local(), {endpoint(EndpointKind::kWriter, 1, 1, "T", make_qos())},
                   id.locator, opts);
  ClientSession sb(participant_guid(2), b.local(), {endpoint(EndpointKind::kReader, 2, 1, "T", make_qos())},
                   id.locator, opts);
  ClientOutcome oa, ob;
  std::thread ta([&] { oa = udp_client_discover(sa, a); });
  std::thread tb([&] { ob = udp_client_discover(sb, b); });
  ta.join();
  tb.join();
  stop = true;
  serving.join();
  EXPECT_EQ(oa.state, ClientSession::State::kComplete);
  EXPECT_EQ(ob.state, ClientSession::State::kComplete);
  EXPECT_EQ(oa.discovered.size(), 1u);
  EXPECT_EQ(ob.discovered.size(), 1u);
}

}  // namespace
}  // namespace dotsn
