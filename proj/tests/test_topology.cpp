//
// Copyright 2026 The privagg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <gtest/gtest.h>

#include <cmath>
#include <queue>
#include <set>
#include <sstream>

#include "privagg/error.hpp"
#include "privagg/topology.hpp"

namespace privagg {
namespace {

// Independent BFS over the canonical edge list.
bool BfsConnected(const Graph& g) {
  std::vector<std::vector<NodeId>> adj(g.n());
  for (const auto& [i, j] : g.edges()) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<bool> seen(g.n(), false);
  std::queue<NodeId> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop();
    for (NodeId v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
    }
  }
  return count == g.n();
}

template <typename F>
void ExpectCode(ErrorCode code, F f) {
  try {
    f();
    ADD_FAILURE() << "expected " << ErrorCodeName(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

TEST(Topology, RingHasDegreeTwo) {
  const Graph g = Generate({TopologyKind::kRing, 15}).graph;
  ASSERT_EQ(g.n(), 15u);
  for (NodeId i = 0; i < 15; ++i) EXPECT_EQ(g.degree(i), 2u);
  EXPECT_TRUE(BfsConnected(g));
}

TEST(Topology, CompleteHasDegreeNMinusOne) {
  const Graph g = Generate({TopologyKind::kComplete, 15}).graph;
  for (NodeId i = 0; i < 15; ++i) EXPECT_EQ(g.degree(i), 14u);
  EXPECT_EQ(g.num_edges(), 105u);
}

TEST(Topology, SeededRggIsConnected) {
  const auto gen = Generate({TopologyKind::kRgg, 15, 0.4, 7});
  EXPECT_EQ(gen.graph.n(), 15u);
  EXPECT_TRUE(BfsConnected(gen.graph));
  EXPECT_TRUE(gen.graph.connected());
}

TEST(Topology, RggUnconnectableAtTinyRadius) {
  TopologySpec spec{TopologyKind::kRgg, 15, 0.01, 3, 5};
  ExpectCode(ErrorCode::kRggUnconnectable, [&] { Generate(spec); });
}

TEST(Topology, TwoNodeRingIsOneEdge) {
  const Graph g = Generate({TopologyKind::kRing, 2}).graph;
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(g.degree(0), 1u);
}

TEST(Topology, InvalidSpecs) {
  ExpectCode(ErrorCode::kInvalidSpec, [] { Generate({TopologyKind::kRing, 1}); });
  ExpectCode(ErrorCode::kInvalidSpec, [] { Generate({TopologyKind::kRgg, 5, 0.0}); });
  ExpectCode(ErrorCode::kInvalidSpec, [] { Generate({TopologyKind::kRgg, 5, 1.5}); });
  ExpectCode(ErrorCode::kInvalidSpec, [] { ParseTopologyKind("torus"); });
}

TEST(Topology, RadiusSqrtTwoIsComplete) {
  const Graph g = Generate({TopologyKind::kRgg, 9, std::sqrt(2.0), 11}).graph;
  EXPECT_EQ(g.num_edges(), 36u);
}

TEST(Topology, GraphRejectsBadEdges) {
  ExpectCode(ErrorCode::kInvalidSpec, [] { Graph(3, {{0, 0}}); });
  ExpectCode(ErrorCode::kInvalidSpec, [] { Graph(3, {{0, 1}, {1, 0}}); });
  ExpectCode(ErrorCode::kInvalidSpec, [] { Graph(3, {{0, 3}}); });
}

TEST(EdgeSign, Examples) {
  const Graph g = Generate({TopologyKind::kComplete, 6}).graph;
  EXPECT_EQ(EdgeSign(g, 2, 5), 1);
  EXPECT_EQ(EdgeSign(g, 5, 2), -1);
  ExpectCode(ErrorCode::kNotAnEdge, [&] { EdgeSign(g, 3, 3); });
  const Graph ring = Generate({TopologyKind::kRing, 6}).graph;
  ExpectCode(ErrorCode::kNotAnEdge, [&] { EdgeSign(ring, 0, 3); });
}

class TopologyProperties : public ::testing::TestWithParam<TopologySpec> {};

TEST_P(TopologyProperties, Invariants) {
  const TopologySpec spec = GetParam();
  const Graph g = Generate(spec).graph;
  std::size_t degree_sum = 0;
  std::set<std::pair<NodeId, NodeId>> seen;
  for (NodeId i = 0; i < g.n(); ++i) {
    degree_sum += g.degree(i);
    for (NodeId j : g.neighbors(i)) {
      EXPECT_NE(i, j);
      EXPECT_TRUE(g.has_edge(j, i));
      EXPECT_EQ(EdgeSign(g, i, j), -EdgeSign(g, j, i));
      EXPECT_EQ(g.slot_sign(g.slot(i, j)), EdgeSign(g, i, j));
      EXPECT_EQ(g.reverse(g.slot(i, j)), g.slot(j, i));
      EXPECT_TRUE(seen.insert({i, j}).second);
    }
  }
  EXPECT_EQ(degree_sum, 2 * g.num_edges());
  EXPECT_TRUE(BfsConnected(g));
  EXPECT_EQ(Generate(spec).graph, g);
}

std::vector<TopologySpec> PropertySpecs() {
  std::vector<TopologySpec> out;
  for (std::size_t n : {2, 3, 7, 15, 30}) {
    out.push_back({TopologyKind::kRing, n});
    out.push_back({TopologyKind::kComplete, n});
    for (std::uint64_t seed : {1, 7, 99}) out.push_back({TopologyKind::kRgg, n, 0.5, seed});
  }
  return out;
}

INSTANTIATE_TEST_SUITE_P(Generated, TopologyProperties, ::testing::ValuesIn(PropertySpecs()));

TEST(EdgeList, RoundTrip) {
  const Graph g = Generate({TopologyKind::kRgg, 15, 0.4, 7}).graph;
  std::stringstream ss;
  WriteEdgeList(g, ss);
  std::string first;
  std::getline(ss, first);
  EXPECT_EQ(first, "15");
  ss.seekg(0);
  EXPECT_EQ(ReadEdgeList(ss), g);
}

TEST(EdgeList, RejectsMalformedInput) {
  std::stringstream bad("3\n0 1\n2 x\n");
  EXPECT_THROW(ReadEdgeList(bad), Error);
  std::stringstream loop("3\n1 1\n");
  EXPECT_THROW(ReadEdgeList(loop), Error);
}

TEST(Components, RemovingANodeSplitsTheRing) {
  const Graph g = Generate({TopologyKind::kRing, 6}).graph;
  std::vector<bool> keep(6, true);
  keep[0] = keep[3] = false;
  const auto comps = g.components(keep);
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(comps[0], (std::vector<NodeId>{1, 2}));
  EXPECT_EQ(comps[1], (std::vector<NodeId>{4, 5}));
}

}  // namespace
}  // namespace privagg
