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

#include "privagg/topology.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <random>
#include <string>

#include "privagg/error.hpp"

namespace privagg {

std::string TopologyKindName(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kRing: return "ring";
    case TopologyKind::kComplete: return "complete";
    case TopologyKind::kRgg: return "rgg";
  }
  return "unknown";
}

TopologyKind ParseTopologyKind(const std::string& name) {
  if (name == "ring") return TopologyKind::kRing;
  if (name == "complete") return TopologyKind::kComplete;
  if (name == "rgg") return TopologyKind::kRgg;
  throw Error(ErrorCode::kInvalidSpec, "unknown topology kind '" + name + "'");
}

void TopologySpec::Validate() const {
  if (n < 2) throw Error(ErrorCode::kInvalidSpec, "topology needs n >= 2");
  if (kind == TopologyKind::kRgg) {
    if (!(radius > 0.0) || radius > std::sqrt(2.0)) {
      throw Error(ErrorCode::kInvalidSpec, "rgg radius must lie in (0, sqrt(2)]");
    }
    if (max_retries == 0) {
      throw Error(ErrorCode::kInvalidSpec, "rgg retry budget must be positive");
    }
  }
}

Graph::Graph(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges) : n_(n) {
  for (auto& [i, j] : edges) {
    if (i >= n || j >= n) {
      throw Error(ErrorCode::kInvalidSpec, "edge endpoint out of range");
    }
    if (i == j) throw Error(ErrorCode::kInvalidSpec, "self-loop");
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw Error(ErrorCode::kInvalidSpec, "duplicate edge");
  }
  edges_ = std::move(edges);

  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& [i, j] : edges_) {
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adj[i].begin(), adj[i].end());
    offsets_[i + 1] = offsets_[i] + adj[i].size();
  }
  targets_.reserve(offsets_[n]);
  sources_.reserve(offsets_[n]);
  signs_.reserve(offsets_[n]);
  for (std::size_t i = 0; i < n; ++i) {
    for (NodeId j : adj[i]) {
      targets_.push_back(j);
      sources_.push_back(static_cast<NodeId>(i));
      signs_.push_back(i < j ? 1.0 : -1.0);
    }
  }
  reverse_.resize(targets_.size());
  for (std::size_t s = 0; s < targets_.size(); ++s) {
    reverse_[s] = slot(targets_[s], sources_[s]);
  }
}

bool Graph::has_edge(NodeId i, NodeId j) const {
  if (i >= n_ || j >= n_) return false;
  auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::size_t Graph::slot(NodeId i, NodeId j) const {
  if (i >= n_ || j >= n_) {
    throw Error(ErrorCode::kNotAnEdge, "node id out of range");
  }
  auto nb = neighbors(i);
  auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) {
    throw Error(ErrorCode::kNotAnEdge,
                "(" + std::to_string(i) + "," + std::to_string(j) + ") is not an edge");
  }
  return offsets_[i] + static_cast<std::size_t>(it - nb.begin());
}

std::vector<std::vector<NodeId>> Graph::components(const std::vector<bool>& keep) const {
  std::vector<std::vector<NodeId>> out;
  std::vector<bool> seen(n_, false);
  for (NodeId root = 0; root < n_; ++root) {
    if (!keep[root] || seen[root]) continue;
    std::vector<NodeId> comp;
    std::queue<NodeId> frontier;
    frontier.push(root);
    seen[root] = true;
    while (!frontier.empty()) {
      NodeId u = frontier.front();
      frontier.pop();
      comp.push_back(u);
      for (NodeId v : neighbors(u)) {
        if (keep[v] && !seen[v]) {
          seen[v] = true;
          frontier.push(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

bool Graph::connected() const {
  if (n_ == 0) return false;
  return components(std::vector<bool>(n_, true)).size() == 1;
}

int EdgeSign(const Graph& graph, NodeId i, NodeId j) {
  if (i == j || !graph.has_edge(i, j)) {
    throw Error(ErrorCode::kNotAnEdge,
                "(" + std::to_string(i) + "," + std::to_string(j) + ") is not an edge");
  }
  return i < j ? 1 : -1;
}

namespace {

Graph Ring(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>((i + 1) % n));
  }
  // n == 2 collapses the ring onto a single edge.
  if (n == 2) edges.resize(1);
  return Graph(n, std::move(edges));
}

Graph Complete(std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
  }
  return Graph(n, std::move(edges));
}

}  // namespace

GeneratedGraph Generate(const TopologySpec& spec) {
  spec.Validate();
  switch (spec.kind) {
    case TopologyKind::kRing: return {Ring(spec.n), 0};
    case TopologyKind::kComplete: return {Complete(spec.n), 0};
    case TopologyKind::kRgg: break;
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r2 = spec.radius * spec.radius;
  std::vector<double> px(spec.n), py(spec.n);
  for (std::size_t attempt = 0; attempt < spec.max_retries; ++attempt) {
    for (std::size_t i = 0; i < spec.n; ++i) {
      px[i] = unit(rng);
      py[i] = unit(rng);
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t i = 0; i < spec.n; ++i) {
      for (std::size_t j = i + 1; j < spec.n; ++j) {
        const double dx = px[i] - px[j];
        const double dy = py[i] - py[j];
        if (dx * dx + dy * dy <= r2) {
          edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        }
      }
    }
    Graph g(spec.n, std::move(edges));
    if (g.connected()) return {std::move(g), attempt};
  }
  throw Error(ErrorCode::kRggUnconnectable,
              "no connected draw after " + std::to_string(spec.max_retries) +
                  " attempts at radius " + std::to_string(spec.radius));
}

void WriteEdgeList(const Graph& graph, std::ostream& out) {
  out << graph.n() << '\n';
  for (const auto& [i, j] : graph.edges()) out << i << ' ' << j << '\n';
}

Graph ReadEdgeList(std::istream& in) {
  std::size_t n = 0;
  if (!(in >> n)) throw Error(ErrorCode::kIo, "edge list: missing node count");
  std::vector<std::pair<NodeId, NodeId>> edges;
  long long i = 0, j = 0;
  while (in >> i >> j) {
    if (i < 0 || j < 0) throw Error(ErrorCode::kIo, "edge list: negative id");
    edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
  }
  if (!in.eof()) throw Error(ErrorCode::kIo, "edge list: malformed line");
  return Graph(n, std::move(edges));
}

}  // namespace privagg
