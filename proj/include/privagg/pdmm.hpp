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

#ifndef PRIVAGG_PDMM_HPP_
#define PRIVAGG_PDMM_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "privagg/error.hpp"
#include "privagg/topology.hpp"

namespace privagg {

struct EngineConfig {
  // Larger c means smaller primal steps.
  double c = 1.0;
  // theta = 1/2 is the ADMM-equivalent averaged variant.
  double theta = 0.5;
  std::size_t t_max = 300;
  // Absolute tolerance for declaring x_i^(t) == s_i.
  double match_tol = 1e-9;
  // Keep every dual round in the transcript. Long runs without corrupted
  // nodes can switch this off; only z0 and the final duals are kept then.
  bool record_dual_history = true;

  void Validate() const;
};

// Any |x| above this aborts the run.
inline constexpr double kDivergenceBound = 1e12;

enum class InitKind { kZero, kSignedGaussian, kGaussian, kCustomPerNode };

// Sign convention of the signed initialisations. From above draws
// z_{i|j} ~ N(-a_ij * mu, sigma^2), which puts every max-style start point
// near +mu / c. From below flips the sign (min-style start near -mu / c).
enum class InitDirection { kAuto, kFromAbove, kFromBelow };

std::string InitKindName(InitKind kind);
InitKind ParseInitKind(const std::string& name);
std::string InitDirectionName(InitDirection d);
InitDirection ParseInitDirection(const std::string& name);

struct InitSpec {
  InitKind kind = InitKind::kZero;
  double mu_z = 0.0;
  double sigma_z = 0.0;
  std::uint64_t seed = 0;
  InitDirection direction = InitDirection::kAuto;
  // kCustomPerNode: node i's duals are drawn around a signed per-node mean.
  std::vector<double> per_node_mu;

  void Validate(std::size_t n) const;
};

// z_{i|j} for every directed edge, indexed by Graph slot.
struct DualState {
  std::vector<double> z;

  double at(const Graph& g, NodeId i, NodeId j) const { return z[g.slot(i, j)]; }
  bool operator==(const DualState&) const = default;
};

DualState InitDuals(const Graph& graph, const InitSpec& spec);

// New z_{j|i}: (1 - theta) z_{j|i} + theta (z_{i|j} + 2 c a_ij x_i).
inline double ZUpdate(double z_j_given_i, double z_i_given_j, double x_i, double a_ij,
                      double c, double theta) {
  return (1.0 - theta) * z_j_given_i + theta * (z_i_given_j + 2.0 * c * a_ij * x_i);
}

// sum_{j in N_i} a_ij z_{i|j}.
inline double DualSum(const Graph& graph, std::span<const double> z, NodeId i) {
  double sum = 0.0;
  for (std::size_t s = graph.slot_begin(i); s < graph.slot_end(i); ++s) {
    sum += graph.slot_sign(s) * z[s];
  }
  return sum;
}
inline double DualSum(const Graph& graph, const DualState& duals, NodeId i) {
  return DualSum(graph, std::span<const double>(duals.z), i);
}

// Everything a local primal update may look at.
struct RoundContext {
  NodeId node;
  double s;
  std::size_t degree;
  double dual_sum;
  double c;
  std::size_t t;
};

using LocalRule = std::function<double(const RoundContext&)>;

struct Transcript {
  EngineConfig config;
  std::size_t n = 0;
  std::size_t num_slots = 0;
  std::vector<double> s;
  DualState z0;
  // rounds x n, round-major.
  std::vector<double> x_hist;
  // (rounds + 1) x num_slots, round-major; row 0 equals z0. Holds only z0
  // and the final row when the config disables dual recording.
  std::vector<double> z_hist;
  // rounds x n: the signed dual sum each node used for x_i^(t). Simulator
  // internal state, never part of an adversary view.
  std::vector<double> sum_hist;
  std::size_t rounds = 0;
  bool diverged = false;

  double x(std::size_t t, NodeId i) const { return x_hist[t * n + i]; }
  std::span<const double> x_at(std::size_t t) const { return {x_hist.data() + t * n, n}; }
  double dual_sum(std::size_t t, NodeId i) const { return sum_hist[t * n + i]; }
  bool has_dual_history() const { return config.record_dual_history; }
  // Requires the dual history unless t is 0 or the final round.
  std::span<const double> z_at(std::size_t t) const;
  DualState final_duals() const;
  // Mean of the last broadcast round.
  double consensus_value() const;
};

template <class Rule>
Transcript RunWithRule(const Graph& graph, std::span<const double> s, Rule&& rule,
                       DualState z0, const EngineConfig& config) {
  config.Validate();
  const std::size_t n = graph.n();
  if (s.size() != n) {
    throw Error(ErrorCode::kInvalidSpec, "private value count does not match graph");
  }
  if (n < 2 || !graph.connected()) {
    throw Error(ErrorCode::kInvalidSpec, "engine needs a connected graph with n >= 2");
  }
  if (z0.z.size() != graph.num_slots()) {
    throw Error(ErrorCode::kInvalidSpec, "dual state does not match graph");
  }
  const std::size_t slots = graph.num_slots();
  const bool full = config.record_dual_history;
  Transcript tr;
  tr.config = config;
  tr.n = n;
  tr.num_slots = slots;
  tr.s.assign(s.begin(), s.end());
  tr.z0 = std::move(z0);
  tr.x_hist.resize(config.t_max * n);
  tr.sum_hist.resize(config.t_max * n);
  tr.z_hist.resize((full ? config.t_max + 1 : 2) * slots);
  std::copy(tr.z0.z.begin(), tr.z0.z.end(), tr.z_hist.begin());
  // Rolling buffers when only the endpoints are kept.
  std::vector<double> scratch(full ? 0 : 2 * slots);
  if (!full) std::copy(tr.z0.z.begin(), tr.z0.z.end(), scratch.begin());

  const double c = config.c;
  const double theta = config.theta;
  for (std::size_t t = 0; t < config.t_max; ++t) {
    const double* z = full ? tr.z_hist.data() + t * slots : scratch.data() + (t % 2) * slots;
    double* x = tr.x_hist.data() + t * n;
    double* sums = tr.sum_hist.data() + t * n;
    for (NodeId i = 0; i < n; ++i) {
      sums[i] = DualSum(graph, std::span<const double>(z, slots), i);
      const RoundContext ctx{i, s[i], graph.degree(i), sums[i], c, t};
      x[i] = rule(ctx);
      if (!std::isfinite(x[i]) || std::abs(x[i]) > kDivergenceBound) {
        tr.diverged = true;
      }
    }
    if (tr.diverged) break;
    double* z_next = full ? tr.z_hist.data() + (t + 1) * slots
                          : scratch.data() + ((t + 1) % 2) * slots;
    for (std::size_t sl = 0; sl < slots; ++sl) {
      // Slot (i -> j) holds z_{i|j}; it is refreshed from j's broadcast.
      const std::size_t rev = graph.reverse(sl);
      z_next[sl] = ZUpdate(z[sl], z[rev], x[graph.slot_target(sl)], graph.slot_sign(rev), c,
                           theta);
    }
    tr.rounds = t + 1;
  }
  tr.x_hist.resize(tr.rounds * n);
  tr.sum_hist.resize(tr.rounds * n);
  if (full) {
    tr.z_hist.resize((tr.rounds + 1) * slots);
  } else {
    const double* last = scratch.data() + (tr.rounds % 2) * slots;
    std::copy(last, last + slots, tr.z_hist.begin() + slots);
  }
  return tr;
}

Transcript Run(const Graph& graph, std::span<const double> s, const LocalRule& rule,
               const InitSpec& init, const EngineConfig& config);

// Columnar "t,i,x" rows plus a "i,j,z0" sidecar.
void WriteTranscriptCsv(const Transcript& tr, std::ostream& out);
void WriteInitialDualsCsv(const Graph& graph, const DualState& z0, std::ostream& out);

}  // namespace privagg

#endif  // PRIVAGG_PDMM_HPP_
