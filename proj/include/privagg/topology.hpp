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

#ifndef PRIVAGG_TOPOLOGY_HPP_
#define PRIVAGG_TOPOLOGY_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace privagg {

using NodeId = std::uint32_t;

enum class TopologyKind { kRing, kComplete, kRgg };

std::string TopologyKindName(TopologyKind kind);
TopologyKind ParseTopologyKind(const std::string& name);

struct TopologySpec {
  TopologyKind kind = TopologyKind::kRgg;
  std::size_t n = 15;
  // Connection radius in the unit square; rgg only.
  double radius = 0.4;
  std::uint64_t seed = 7;
  std::size_t max_retries = 1000;

  void Validate() const;
};

// Undirected simple graph on nodes 0..n-1.
//
// Directed edges are addressed by "slots" in compressed adjacency form: the
// slot of (i -> j) is the position of j in i's sorted neighbor list, offset
// by the total degree of the nodes before i. A slot holds the dual z_{i|j}
// (the value node i keeps about the edge to j). Reverse(slot) gives z_{j|i}.
class Graph {
 public:
  Graph() = default;
  // Builds from an undirected edge list. Throws kInvalidSpec on self-loops,
  // duplicates, or out-of-range ids.
  Graph(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges);

  std::size_t n() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_slots() const { return targets_.size(); }

  // Canonical (i < j) edges in lexicographic order.
  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {targets_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }

  std::size_t slot_begin(NodeId i) const { return offsets_[i]; }
  std::size_t slot_end(NodeId i) const { return offsets_[i + 1]; }
  NodeId slot_source(std::size_t slot) const { return sources_[slot]; }
  NodeId slot_target(std::size_t slot) const { return targets_[slot]; }
  std::size_t reverse(std::size_t slot) const { return reverse_[slot]; }
  // a_ij of the slot's (source, target) pair.
  double slot_sign(std::size_t slot) const { return signs_[slot]; }

  bool has_edge(NodeId i, NodeId j) const;
  // Throws kNotAnEdge when (i, j) is not an edge.
  std::size_t slot(NodeId i, NodeId j) const;

  bool connected() const;
  // Connected components of the subgraph induced by nodes with keep[i] set,
  // each sorted ascending, ordered by smallest member.
  std::vector<std::vector<NodeId>> components(const std::vector<bool>& keep) const;

  bool operator==(const Graph& other) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> targets_;
  std::vector<NodeId> sources_;
  std::vector<std::size_t> reverse_;
  std::vector<double> signs_;
};

// Edge orientation: +1 when i < j, -1 when i > j.
int EdgeSign(const Graph& graph, NodeId i, NodeId j);

struct GeneratedGraph {
  Graph graph;
  // Number of rgg position resamples before a connected draw; 0 otherwise.
  std::size_t retries = 0;
};

GeneratedGraph Generate(const TopologySpec& spec);

// Edge-list text: first line "n", then one "i j" line per edge with i < j.
void WriteEdgeList(const Graph& graph, std::ostream& out);
Graph ReadEdgeList(std::istream& in);

}  // namespace privagg

#endif  // PRIVAGG_TOPOLOGY_HPP_
