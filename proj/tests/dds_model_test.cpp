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

#include "dotsn/dds_model.hpp"
#include "test_support.hpp"

namespace dotsn {
namespace {

using testing::make_qos;

TEST(QosCompatible, IdenticalPoliciesMatch) {
  auto q = make_qos();
  EXPECT_TRUE(qos_compatible(q, q));
}

TEST(QosCompatible, ReliableWriterServesBestEffortReader) {
  auto w = make_qos(7, 500 * kMicro, Reliability::kReliable);
  auto r = make_qos(7, 500 * kMicro, Reliability::kBestEffort);
  EXPECT_TRUE(qos_compatible(w, r));
}

TEST(QosCompatible, BestEffortWriterCannotServeReliableReader) {
  auto w = make_qos(7, 500 * kMicro, Reliability::kBestEffort);
  auto r = make_qos(7, 500 * kMicro, Reliability::kReliable);
  EXPECT_FALSE(qos_compatible(w, r));
}

TEST(QosCompatible, WriterDeadlineLongerThanReaderFails) {
  auto w = make_qos();
  auto r = make_qos();
  w.deadline = 600 * kMicro;
  r.deadline = 500 * kMicro;
  EXPECT_FALSE(qos_compatible(w, r));
}

TEST(QosCompatible, PartitionLatencyAndJitterBoundsBlock) {
  auto base = make_qos();
  auto w = base;
  w.partition = 3;
  EXPECT_FALSE(qos_compatible(w, base));
  w = base;
  w.latency = base.latency + 1;
  EXPECT_FALSE(qos_compatible(w, base));
  w = base;
  w.jitter = base.jitter + 1;
  EXPECT_FALSE(qos_compatible(w, base));
}

TEST(QosCompatible, PriorityAndSizeNeverBlock) {
  auto w = make_qos(1);
  auto r = make_qos(7);
  w.size = 1;
  r.size = 1400;
  EXPECT_TRUE(qos_compatible(w, r));
}

TEST(QosCompatible, ReflexiveOverRandomPolicies) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    auto q = testing::random_qos(rng);
    EXPECT_TRUE(qos_compatible(q, q));
  }
}

TEST(QosPolicies, ValidateRejectsOutOfRangeFields) {
  auto q = make_qos();
  EXPECT_NO_THROW(q.validate());
  auto bad = q;
  bad.priority = 8;
  EXPECT_THROW(bad.validate(), InvalidValue);
  bad = q;
  bad.deadline = 0;
  EXPECT_THROW(bad.validate(), InvalidValue);
  bad = q;
  bad.partition = 4095;
  EXPECT_THROW(bad.validate(), InvalidValue);
  bad = q;
  bad.size = 0;
  EXPECT_THROW(bad.validate(), InvalidValue);
  bad = q;
  bad.jitter = -1;
  EXPECT_THROW(bad.validate(), InvalidValue);
}

TEST(Guid, DottedHexRoundTrip) {
  auto g = Guid::from_parts(0x010fc51c312ce4d7ULL, 0, 0x000001c1);
  EXPECT_EQ(g.to_string(), "01.0f.c5.1c.31.2c.e4.d7.00.00.00.00.00.00.01.c1");
  EXPECT_EQ(Guid::parse(g.to_string()), g);
  EXPECT_TRUE(Guid().is_unset());
  EXPECT_FALSE(g.is_unset());
  EXPECT_THROW(Guid::parse("01.02"), InvalidValue);
}

TEST(Locator, TextFormRoundTrip) {
  auto l = Locator::make("192.168.137.181", 7411);
  EXPECT_EQ(l.to_string(), "UDPv4:[192.168.137.181]:7411");
  EXPECT_EQ(Locator::parse(l.to_string()), l);
  EXPECT_FALSE(Locator{}.valid());
  EXPECT_THROW(Locator::parse("UDPv4:[300.1.1.1]:1"), InvalidValue);
}

TEST(EndpointDescriptor, EmptyTopicRejected) {
  auto d = testing::endpoint(EndpointKind::kWriter, 1, 1, "", make_qos());
  EXPECT_THROW(d.validate(), InvalidValue);
}

}  // namespace
}  // namespace dotsn
