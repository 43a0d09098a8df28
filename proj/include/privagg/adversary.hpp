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

#ifndef PRIVAGG_ADVERSARY_HPP_
#define PRIVAGG_ADVERSARY_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "privagg/operators.hpp"
#include "privagg/pdmm.hpp"
#include "privagg/topology.hpp"

namespace privagg {

// Passive corruption plus optional global eavesdropping.
struct CorruptionSpec {
  std::vector<NodeId> corrupted;  // sorted, unique
  bool eavesdrop = true;

  // Throws kOutOfRange for bad ids and kInvalidSpec when no node is honest.
  void Validate(std::size_t n) const;
  bool IsCorrupted(NodeId i) const;
};

// z_{from|to}^(t) for t = 0..rounds.
struct DualHistory {
  NodeId from;
  NodeId to;
  std::vector<double> values;
};

// The adversary's information set after redundancy elimination. Public
// protocol constants (graph, c, theta) are known to everyone.
struct Observation {
  std::size_t n = 0;
  std::size_t rounds = 0;
  double c = 1.0;
  double theta = 0.5;
  bool eavesdrop = false;
  std::map<NodeId, double> corrupted_inputs;
  // Both directions of every edge incident to a corrupted node.
  std::vector<DualHistory> corrupted_duals;
  // x_j^(t) for every node whose broadcasts reach the adversary: all nodes
  // when eavesdropping, otherwise the corrupted nodes and their neighbours.
  std::map<NodeId, std::vector<double>> broadcasts;
  // Every initial dual message; present only when eavesdropping.
  std::optional<DualState> init_msgs;
};

Observation CollectObservation(const Transcript& transcript, const Graph& graph,
                               const CorruptionSpec& corruption);

// First round with |x_i^(t) - s_i| <= tol, per node.
std::vector<std::optional<std::size_t>> DetectMatchingEvents(const Transcript& transcript,
                                                             std::span<const double> s,
                                                             double tol);

// Trajectory indicators. y marks the upper consensus branch held at every
// round (V_p, or V_p1 for median/quantile); for min it marks the lower
// branch. y_prime marks the lower branch of median/quantile (V_p2).
struct IndicatorSet {
  std::vector<std::uint8_t> y;
  std::vector<std::uint8_t> y_prime;
  std::vector<std::optional<std::size_t>> matched_at;
  bool has_y_prime = false;
};

inline constexpr double kDefaultReconTol = 1e-9;

// Adversary-side inference: replays the dual recursion from the intercepted
// z^(0) and broadcasts, and tests every broadcast against the linear
// branches. matched_at is the first round where no linear branch reproduces
// the broadcast (the private value was emitted). Needs eavesdropping.
IndicatorSet InferIndicators(const Observation& obs, const Graph& graph,
                             const OperatorSpec& op, double recon_tol = kDefaultReconTol);

// Simulator-side oracle: evaluates the strict branch inequalities on the
// recorded dual sums.
IndicatorSet EvaluateConditionP(const Transcript& transcript, const Graph& graph,
                                const OperatorSpec& op);

// What any exact protocol must reveal under this adversary.
struct IdealSideInfo {
  // x* for scalar operators; the K values for top-K; for trimmed mean the
  // trimmed mean followed by the K largest and the K smallest values.
  std::vector<double> aggregate;
  // s_j attains the extremum (max, or min for the min operator).
  std::vector<std::uint8_t> max_membership;
  // s_j <= x* and s_j >= x* (median and quantile).
  std::vector<std::uint8_t> med_leq;
  std::vector<std::uint8_t> med_geq;
  // Top-K (and, for trimmed mean, bottom-K) membership.
  std::vector<std::uint8_t> topk_membership;
  std::vector<std::uint8_t> bottomk_membership;
  // Components of the graph with corrupted nodes removed, and their sums.
  std::vector<std::vector<NodeId>> honest_components;
  std::vector<double> honest_component_sums;
  std::map<NodeId, double> corrupted_inputs;
};

IdealSideInfo ComputeIdealSideInfo(std::span<const double> s, const Graph& graph,
                                   const CorruptionSpec& corruption, const OperatorSpec& op);

// CSV rows keyed by (trial, node).
void WriteIndicatorCsvHeader(std::ostream& out);
void WriteIndicatorCsvRows(std::ostream& out, std::size_t trial, const IndicatorSet& ind);
void WriteIdealSideInfoCsvHeader(std::ostream& out);
void WriteIdealSideInfoCsvRows(std::ostream& out, std::size_t trial, const IdealSideInfo& info,
                               std::size_t n);

}  // namespace privagg

#endif  // PRIVAGG_ADVERSARY_HPP_
