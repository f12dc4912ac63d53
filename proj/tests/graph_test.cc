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

#include <algorithm>
#include <random>
#include <set>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "pipelink/graph/decoder_graph.h"
#include "pipelink/graph/graph.h"
#include "pipelink/graph/graph_io.h"
#include "pipelink/graph/partition.h"

namespace pipelink {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;
using ::testing::IsEmpty;

ComputationGraph Chain() {
  GraphBuilder b;
  NodeId a = b.AddNode("A", 10, 100, 1000);
  NodeId bb = b.AddNode("B", 20, 200, 2000);
  NodeId c = b.AddNode("C", 30, 300, 3000);
  b.AddEdge(a, bb);
  b.AddEdge(bb, c);
  return *std::move(b).Build();
}

// A -> B, B -> C, A -> C.
ComputationGraph SkipTriangle() {
  GraphBuilder b;
  b.AddNode("A", 1, 1, 1);
  b.AddNode("B", 1, 1, 1);
  b.AddNode("C", 1, 1, 1);
  b.AddEdge(0, 1);
  b.AddEdge(1, 2);
  b.AddEdge(0, 2);
  return *std::move(b).Build();
}

// Random single-source, single-sink DAG whose ids are a topological order.
ComputationGraph RandomDag(std::mt19937_64& rng, int n) {
  std::set<Edge> edges;
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> pick(0, v - 1);
    edges.insert({pick(rng), v});
  }
  for (int v = 0; v + 1 < n; ++v) {
    bool has_out = false;
    for (const Edge& e : edges) has_out |= e.src == v;
    if (!has_out) {
      std::uniform_int_distribution<int> pick(v + 1, n - 1);
      edges.insert({v, pick(rng)});
    }
  }
  std::uniform_int_distribution<int> any(0, n - 1);
  const int extra = std::uniform_int_distribution<int>(0, n)(rng);
  for (int k = 0; k < extra; ++k) {
    int a = any(rng), b = any(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    // Keep node 0 the only source: it may not gain inbound edges.
    edges.insert({a, b});
  }
  std::vector<NodeProfile> nodes;
  std::uniform_int_distribution<int64_t> val(0, 1000);
  for (int v = 0; v < n; ++v) {
    nodes.push_back({v, "op", val(rng), val(rng), val(rng)});
  }
  return *ComputationGraph::Create(std::move(nodes),
                                   {edges.begin(), edges.end()});
}

TEST(GraphTest, RejectsCycleAndNamesIt) {
  auto g = ComputationGraph::Create(
      {{0, "A", 1, 1, 1}, {1, "B", 1, 1, 1}}, {{0, 1}, {1, 0}});
  ASSERT_FALSE(g.ok());
  EXPECT_THAT(g.status().message(), HasSubstr("cycle"));
  EXPECT_THAT(g.status().message(), HasSubstr("0 -> 1 -> 0"));
}

TEST(GraphTest, RejectsDuplicateIdAndUnknownEndpoint) {
  auto dup = ComputationGraph::Create({{0, "A", 1, 1, 1}, {0, "B", 1, 1, 1}},
                                      {});
  ASSERT_FALSE(dup.ok());
  EXPECT_THAT(dup.status().message(), HasSubstr("0"));
  auto unknown = ComputationGraph::Create({{0, "A", 1, 1, 1}}, {{0, 5}});
  EXPECT_FALSE(unknown.ok());
}

TEST(GraphTest, RejectsNegativeProfileAndTwoSources) {
  EXPECT_FALSE(ComputationGraph::Create({{0, "A", -1, 1, 1}}, {}).ok());
  auto two = ComputationGraph::Create(
      {{0, "A", 1, 1, 1}, {1, "B", 1, 1, 1}, {2, "C", 1, 1, 1}},
      {{0, 2}, {1, 2}});
  EXPECT_FALSE(two.ok());
}

TEST(GraphTest, TopoOrderRespectsEdges) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    ComputationGraph g = RandomDag(rng, 2 + trial % 40);
    for (const Edge& e : g.edges()) {
      EXPECT_LT(g.topo_index(e.src), g.topo_index(e.dst));
    }
  }
}

TEST(CandidatesTest, ChainHasNone) { EXPECT_THAT(FindCandidates(Chain()), IsEmpty()); }

TEST(CandidatesTest, FanOutNodeIsCandidate) {
  GraphBuilder b;
  b.AddNode("A", 1, 1, 1);
  b.AddNode("B", 1, 1, 1);
  b.AddNode("C", 1, 1, 1);
  b.AddNode("D", 1, 1, 1);
  b.AddNode("E", 1, 1, 1);
  b.AddEdge(0, 1);
  b.AddEdge(1, 2);
  b.AddEdge(1, 3);
  b.AddEdge(2, 4);
  b.AddEdge(3, 4);
  ComputationGraph g = *std::move(b).Build();
  EXPECT_THAT(FindCandidates(g), ElementsAre(1));
}

// Independent degree scan over the edge list.
std::vector<NodeId> DegreeScanCandidates(const ComputationGraph& g) {
  std::vector<int> in(g.num_nodes()), out(g.num_nodes());
  for (const Edge& e : g.edges()) {
    ++out[e.src];
    ++in[e.dst];
  }
  std::vector<NodeId> result;
  for (NodeId v : g.topo_order()) {
    if (out[v] > 1 && in[v] == 1) result.push_back(v);
  }
  return result;
}

TEST(CandidatesTest, DecoderGraphMatchesDegreeScan) {
  ComputationGraph g = GenerateDecoderGraph(4, 64, 1);
  std::vector<NodeId> got = FindCandidates(g);
  EXPECT_EQ(got, DegreeScanCandidates(g));
  EXPECT_GE(got.size(), 4u);
}

TEST(PartitionTest, ChainExamples) {
  ComputationGraph g = Chain();
  auto whole = Partition(g, {});
  ASSERT_TRUE(whole.ok());
  EXPECT_THAT(whole->subgraphs, ElementsAre(ElementsAre(0, 1, 2)));

  auto split = Partition(g, {1});
  ASSERT_TRUE(split.ok());
  EXPECT_THAT(split->subgraphs, ElementsAre(ElementsAre(0), ElementsAre(1, 2)));
  ASSERT_EQ(split->sdm.size(), 1u);
  EXPECT_EQ(split->sdm[0].producer, (NodeRef{0, 0}));
  EXPECT_EQ(split->sdm[0].consumer, (NodeRef{1, 1}));
  EXPECT_THAT(split->rdm, IsEmpty());
}

TEST(PartitionTest, RejectsEmptySubgraphAndUnsortedCandidates) {
  ComputationGraph g = Chain();
  EXPECT_FALSE(Partition(g, {0}).ok());
  EXPECT_FALSE(Partition(g, {1, 1}).ok());
  EXPECT_FALSE(Partition(g, {2, 1}).ok());
  EXPECT_FALSE(Partition(g, {7}).ok());
}

TEST(DependencySearchTest, SkipEdgeBecomesResidual) {
  ComputationGraph g = SkipTriangle();
  auto maps = DependencySearch(g, {{0}, {1}, {2}});
  ASSERT_TRUE(maps.ok());
  ASSERT_EQ(maps->sdm.size(), 2u);
  EXPECT_EQ(maps->sdm[0].producer.node, 0);
  EXPECT_EQ(maps->sdm[0].consumer.node, 1);
  EXPECT_EQ(maps->sdm[1].producer.node, 1);
  EXPECT_EQ(maps->sdm[1].consumer.node, 2);
  ASSERT_EQ(maps->rdm.size(), 1u);
  EXPECT_EQ(maps->rdm[0].producer, (NodeRef{0, 0}));
  EXPECT_EQ(maps->rdm[0].consumer, (NodeRef{2, 2}));
  EXPECT_EQ(maps->intra_edges, 0);
}

TEST(DependencySearchTest, RejectsBackwardEdge) {
  ComputationGraph g = Chain();
  auto maps = DependencySearch(g, {{1, 2}, {0}});
  EXPECT_FALSE(maps.ok());
}

TEST(DependencySearchTest, DecoderResidualsMatchEdgeScan) {
  ComputationGraph g = GenerateDecoderGraph(6, 64, 7);
  auto plan = Partition(g, FindCandidates(g));
  ASSERT_TRUE(plan.ok());
  std::set<std::pair<NodeId, NodeId>> sdm, rdm;
  for (const Edge& e : g.edges()) {
    const int gap = plan->subgraph_of[e.dst] - plan->subgraph_of[e.src];
    if (gap == 1) sdm.insert({e.src, e.dst});
    if (gap >= 2) rdm.insert({e.src, e.dst});
  }
  std::set<std::pair<NodeId, NodeId>> got_sdm, got_rdm;
  for (const auto& d : plan->sdm) got_sdm.insert({d.producer.node, d.consumer.node});
  for (const auto& d : plan->rdm) got_rdm.insert({d.producer.node, d.consumer.node});
  EXPECT_EQ(got_sdm, sdm);
  EXPECT_EQ(got_rdm, rdm);
  EXPECT_GE(rdm.size(), 2u);
}

TEST(ProfileTest, SingleSubgraphHasGraphTotals) {
  ComputationGraph g = Chain();
  auto plan = *Partition(g, {});
  auto profiles = ProfileSubmodules(g, plan);
  ASSERT_EQ(profiles.size(), 1u);
  EXPECT_EQ(profiles[0].flops, 60);
  EXPECT_EQ(profiles[0].mem_bytes, 600);
  EXPECT_THAT(profiles[0].out_to, IsEmpty());
}

TEST(ProfileTest, TwoSubgraphOutput) {
  GraphBuilder b;
  b.AddNode("A", 1, 1, 1000);
  b.AddNode("B", 1, 1, 5);
  b.AddEdge(0, 1);
  ComputationGraph g = *std::move(b).Build();
  auto profiles = ProfileSubmodules(g, *Partition(g, {1}));
  ASSERT_EQ(profiles.size(), 2u);
  EXPECT_EQ(profiles[0].out_to, (std::map<int, int64_t>{{1, 1000}}));
}

// Walks every edge and accumulates producer bytes once per target subgraph.
Matrix<int64_t> EdgeWalkOutputMatrix(const ComputationGraph& g,
                                     const PartitionPlan& plan) {
  const size_t n = plan.size();
  Matrix<int64_t> o(n, n, 0);
  std::set<std::pair<NodeId, int>> seen;
  for (const Edge& e : g.edges()) {
    const int i = plan.subgraph_of[e.src];
    const int k = plan.subgraph_of[e.dst];
    if (i == k || !seen.insert({e.src, k}).second) continue;
    o(i, k) += g.node(e.src).out_bytes;
  }
  return o;
}

TEST(ProfileTest, DecoderOutputMatrixMatchesEdgeWalk) {
  for (int blocks : {1, 3, 6, 9}) {
    ComputationGraph g = GenerateDecoderGraph(blocks, 128, blocks);
    auto plan = *Partition(g, FindCandidates(g));
    auto profiles = ProfileSubmodules(g, plan);
    Matrix<int64_t> o = ModuleOutputMatrix(profiles);
    EXPECT_EQ(o, EdgeWalkOutputMatrix(g, plan)) << "blocks=" << blocks;
    for (size_t j = 0; j < o.rows(); ++j) {
      for (size_t k = 0; k <= j; ++k) EXPECT_EQ(o(j, k), 0);
    }
  }
}

TEST(DecoderGraphTest, OneBlockHasOneInBlockCandidate) {
  ComputationGraph g = GenerateDecoderGraph(1, 64, 0);
  int in_block = 0;
  for (NodeId v : FindCandidates(g)) in_block += g.node(v).kind == "split";
  EXPECT_EQ(in_block, 1);
}

TEST(DecoderGraphTest, Deterministic) {
  EXPECT_EQ(SerializeGraph(GenerateDecoderGraph(6, 64, 7)),
            SerializeGraph(GenerateDecoderGraph(6, 64, 7)));
}

TEST(GraphIoTest, RoundTrip) {
  ComputationGraph g = GenerateDecoderGraph(5, 96, 11);
  auto parsed = ParseGraph(SerializeGraph(g));
  ASSERT_TRUE(parsed.ok()) << parsed.status();
  EXPECT_EQ(*parsed, g);
}

TEST(GraphIoTest, ErrorsCarryLineNumbers) {
  auto cyc = ParseGraph(
      "graph v1 2 2\nnode 0 a 1 1 1\nnode 1 b 1 1 1\nedge 0 1\nedge 1 0\n");
  ASSERT_FALSE(cyc.ok());
  EXPECT_THAT(cyc.status().message(), HasSubstr("0 -> 1 -> 0"));
  auto dup = ParseGraph("graph v1 2 0\nnode 0 a 1 1 1\nnode 0 b 1 1 1\n");
  ASSERT_FALSE(dup.ok());
  EXPECT_THAT(dup.status().message(), HasSubstr("duplicate node id 0"));
  auto bad = ParseGraph("graph v1 1 0\nnode 0 a x 1 1\n");
  ASSERT_FALSE(bad.ok());
  EXPECT_THAT(bad.status().message(), HasSubstr("line 2"));
}

TEST(GraphIoTest, CycleFromUnorderedIdsIsNamed) {
  auto g = ComputationGraph::Create(
      {{0, "s", 1, 1, 1}, {1, "A", 1, 1, 1}, {2, "B", 1, 1, 1}},
      {{0, 1}, {1, 2}, {2, 1}});
  ASSERT_FALSE(g.ok());
  EXPECT_THAT(g.status().message(), HasSubstr("1 -> 2 -> 1"));
}

// Random candidate subsets of random DAGs: edges split exactly into intra,
// sequential and residual classes, and the classes agree with an
// independent scan by subgraph gap.
TEST(PartitionPropertyTest, EdgePartitionOnRandomDags) {
  std::mt19937_64 rng(20260101);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 199);
    ComputationGraph g = RandomDag(rng, n);
    std::vector<NodeId> candidates;
    for (NodeId v : FindCandidates(g)) {
      if (rng() % 2 && v != g.source()) candidates.push_back(v);
    }
    auto plan = Partition(g, candidates);
    ASSERT_TRUE(plan.ok()) << plan.status();
    auto maps = *DependencySearch(g, plan->subgraphs);
    EXPECT_EQ(maps.intra_edges + maps.sdm.size() + maps.rdm.size(),
              g.num_edges());
    size_t intra = 0, seq = 0, res = 0;
    for (const Edge& e : g.edges()) {
      const int gap = plan->subgraph_of[e.dst] - plan->subgraph_of[e.src];
      ASSERT_GE(gap, 0);
      (gap == 0 ? intra : gap == 1 ? seq : res)++;
    }
    EXPECT_EQ(maps.intra_edges, static_cast<int>(intra));
    EXPECT_EQ(maps.sdm.size(), seq);
    EXPECT_EQ(maps.rdm.size(), res);
    // Boundary property and profile conservation.
    std::set<NodeId> cand(candidates.begin(), candidates.end());
    for (const auto& s : plan->subgraphs) {
      EXPECT_TRUE(s.front() == g.source() || cand.count(s.front()));
    }
    int64_t flops = 0, mem = 0;
    for (const auto& p : ProfileSubmodules(g, *plan)) {
      flops += p.flops;
      mem += p.mem_bytes;
    }
    EXPECT_EQ(flops, g.total_flops());
    EXPECT_EQ(mem, g.total_mem_bytes());
  }
}

}  // namespace
}  // namespace pipelink
