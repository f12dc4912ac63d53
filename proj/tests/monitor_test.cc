/* Copyright 2026 The Pipelink Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <cmath>
#include <fstream>
#include <thread>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "pipelink/graph/decoder_graph.h"
#include "pipelink/graph/graph.h"
#include "pipelink/monitor/fleet.h"
#include "pipelink/monitor/measure.h"
#include "pipelink/monitor/snapshot.h"

namespace pipelink {
namespace {

using ::testing::HasSubstr;

constexpr char kThreeDevices[] = R"(fleet v1 3
device 0 3e9 1000 900
device 1 3e9 1000 800
device 2 1e9 500 500
link 0 1 1e6 0.01
link 0 2 2e6 0.02
link 1 0 1e6 0.01
link 1 2 3e6 0.03
link 2 0 2e6 0.02
link 2 1 3e6 0.03
)";

TEST(FleetTest, ParsesSampleConfig) {
  auto fleet = ParseFleet(kThreeDevices);
  ASSERT_TRUE(fleet.ok()) << fleet.status();
  EXPECT_EQ(fleet->size(), 3u);
  EXPECT_EQ(fleet->devices[1].mem_avail_bytes, 800);
  EXPECT_DOUBLE_EQ(fleet->bandwidth(1, 2), 3e6);
  EXPECT_DOUBLE_EQ(fleet->latency(2, 0), 0.02);
  EXPECT_EQ(fleet->bandwidth(1, 1), 0);
}

TEST(FleetTest, RoundTrip) {
  auto fleet = ParseFleet(kThreeDevices);
  auto again = ParseFleet(SerializeFleet(*fleet));
  ASSERT_TRUE(again.ok());
  EXPECT_EQ(*again, *fleet);
}

TEST(FleetTest, NegativeBandwidthNamesField) {
  std::string text = kThreeDevices;
  text.replace(text.find("link 0 1 1e6"), 12, "link 0 1 -1e6");
  auto fleet = ParseFleet(text);
  ASSERT_FALSE(fleet.ok());
  EXPECT_THAT(fleet.status().message(), HasSubstr("bandwidth_Bps"));
}

TEST(FleetTest, MissingLinkAndBadMemory) {
  std::string text = kThreeDevices;
  text.erase(text.find("link 2 1"));
  auto fleet = ParseFleet(text);
  ASSERT_FALSE(fleet.ok());
  EXPECT_THAT(fleet.status().message(), HasSubstr("2->1"));
  auto mem = ParseFleet("fleet v1 1\ndevice 0 1e9 10 20\n");
  ASSERT_FALSE(mem.ok());
  EXPECT_THAT(mem.status().message(), HasSubstr("mem_avail"));
}

TEST(FleetTest, LoadsShippedConfig) {
  auto fleet = LoadFleet(PIPELINK_SOURCE_DIR "/configs/fleet_3dev.txt");
  ASSERT_TRUE(fleet.ok()) << fleet.status();
  EXPECT_EQ(fleet->size(), 3u);
}

TEST(MeasureTest, BandwidthFromSample) {
  MeasurementSample s{10'000'000, 2.0, 0, 1};
  EXPECT_DOUBLE_EQ(*BandwidthFromSample(s), 5e6);
  s.elapsed_sec = 0;
  EXPECT_FALSE(BandwidthFromSample(s).ok());
}

TEST(MeasureTest, RejectsTinyChunk) {
  auto sample = MeasureBandwidth(0, 1, std::nullopt, 0);
  ASSERT_FALSE(sample.ok());
  EXPECT_EQ(sample.status().code(), absl::StatusCode::kInvalidArgument);
}

TEST(MeasureTest, ConnectionRefused) {
  auto status = SendProbe(0, {"127.0.0.1", 1}, kMinProbeBytes, std::nullopt,
                          1.0, 1.0);
  EXPECT_EQ(status.code(), absl::StatusCode::kUnavailable);
}

TEST(MeasureTest, LoopbackIsStable) {
  BandwidthProbeOptions options;
  options.chunk_bytes = 4 << 20;
  options.warmup_rounds = 1;
  auto estimate = EstimateBandwidth(0, 1, std::nullopt, options);
  ASSERT_TRUE(estimate.ok()) << estimate.status();
  ASSERT_EQ(estimate->samples_bps.size(), 5u);
  double mean = 0;
  for (double b : estimate->samples_bps) mean += b / 5;
  double var = 0;
  for (double b : estimate->samples_bps) var += (b - mean) * (b - mean) / 5;
  EXPECT_GT(mean, 0);
  EXPECT_LT(std::sqrt(var) / mean, 0.5);
}

TEST(MeasureTest, ShapedLinkIsRecovered) {
  // 1 MB over a 10 MB/s link at time scale 0.2.
  auto sample = MeasureBandwidth(0, 1, LinkShape{1e7, 0}, 1'000'000, 0.2);
  ASSERT_TRUE(sample.ok()) << sample.status();
  const double bw = *BandwidthFromSample(*sample);
  EXPECT_LE(bw, 1e7 * 1.02);
  EXPECT_GT(bw, 1e7 * 0.8);
}

TEST(MeasureTest, FlopsOfSimulatedDevice) {
  ComputationGraph model = GenerateDecoderGraph(2, 64, 0);
  SimulatedDevice device(model.total_flops() / 0.2, 1.0);
  auto flops = MeasureFlops(device, model);
  ASSERT_TRUE(flops.ok());
  EXPECT_NEAR(*flops, model.total_flops() / 0.2, 0.01 * *flops);
}

TEST(MeasureTest, FlopsErrors) {
  GraphBuilder b;
  b.AddNode("nop", 0, 0, 0);
  ComputationGraph empty = *std::move(b).Build();
  SimulatedDevice device(1e9, 1.0);
  EXPECT_FALSE(MeasureFlops(device, empty).ok());
  device.Stop();
  auto stopped = MeasureFlops(device, GenerateDecoderGraph(1, 8, 0));
  EXPECT_EQ(stopped.status().code(), absl::StatusCode::kUnavailable);
}

TEST(SnapshotTest, LoadingModulesLowersAvailableMemory) {
  FleetProfile fleet = *ParseFleet(kThreeDevices);
  fleet.devices[0].mem_total_bytes = fleet.devices[0].mem_avail_bytes =
      1'000'000'000;
  ResidentSetAgent a0(0, 1'000'000'000), a1(1, 800), a2(2, 500);
  std::vector<DeviceAgent*> agents = {&a0, &a1, &a2};
  auto idle = SnapshotRuntime(fleet, agents);
  ASSERT_TRUE(idle.ok());
  a0.Load(3, 100'000'000);
  a0.Load(4, 100'000'000);
  auto loaded = SnapshotRuntime(fleet, agents);
  ASSERT_TRUE(loaded.ok());
  EXPECT_GE(idle->devices[0].mem_avail_bytes - loaded->devices[0].mem_avail_bytes,
            200'000'000);
  a0.Load(5, 1);
  auto more = SnapshotRuntime(fleet, agents);
  EXPECT_LE(more->devices[0].mem_avail_bytes, loaded->devices[0].mem_avail_bytes);
}

TEST(SnapshotTest, UnresponsiveDevicesAreListed) {
  FleetProfile fleet = *ParseFleet(kThreeDevices);
  ResidentSetAgent a0(0, 900), a1(1, 800), a2(2, 500);
  a0.SetResponsive(false);
  a2.SetResponsive(false);
  std::vector<DeviceAgent*> agents = {&a0, &a1, &a2};
  auto snap = SnapshotRuntime(fleet, agents);
  ASSERT_FALSE(snap.ok());
  EXPECT_THAT(snap.status().message(), HasSubstr("[0,2]"));
}

}  // namespace
}  // namespace pipelink
