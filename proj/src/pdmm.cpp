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

#include "privagg/pdmm.hpp"

#include <numeric>
#include <ostream>
#include <random>

#include "privagg/format.hpp"

namespace privagg {

void EngineConfig::Validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(ErrorCode::kInvalidSpec, "c must be > 0");
  if (!(theta > 0.0) || theta > 1.0) {
    throw Error(ErrorCode::kInvalidSpec, "theta must lie in (0, 1]");
  }
  if (t_max < 1) throw Error(ErrorCode::kInvalidSpec, "t_max must be >= 1");
  if (!(match_tol >= 0.0)) throw Error(ErrorCode::kInvalidSpec, "match_tol must be >= 0");
}

std::string InitKindName(InitKind kind) {
  switch (kind) {
    case InitKind::kZero: return "zero";
    case InitKind::kSignedGaussian: return "signed-gaussian";
    case InitKind::kGaussian: return "gaussian";
    case InitKind::kCustomPerNode: return "custom-per-node";
  }
  return "unknown";
}

InitKind ParseInitKind(const std::string& name) {
  if (name == "zero") return InitKind::kZero;
  if (name == "signed-gaussian") return InitKind::kSignedGaussian;
  if (name == "gaussian") return InitKind::kGaussian;
  if (name == "custom-per-node") return InitKind::kCustomPerNode;
  throw Error(ErrorCode::kInvalidSpec, "unknown init kind '" + name + "'");
}

std::string InitDirectionName(InitDirection d) {
  switch (d) {
    case InitDirection::kAuto: return "auto";
    case InitDirection::kFromAbove: return "above";
    case InitDirection::kFromBelow: return "below";
  }
  return "unknown";
}

InitDirection ParseInitDirection(const std::string& name) {
  if (name == "auto") return InitDirection::kAuto;
  if (name == "above") return InitDirection::kFromAbove;
  if (name == "below") return InitDirection::kFromBelow;
  throw Error(ErrorCode::kInvalidSpec, "unknown init direction '" + name + "'");
}

void InitSpec::Validate(std::size_t n) const {
  if (!(sigma_z >= 0.0) || !std::isfinite(sigma_z)) {
    throw Error(ErrorCode::kInvalidSpec, "sigma_z must be >= 0");
  }
  if (!std::isfinite(mu_z)) throw Error(ErrorCode::kInvalidSpec, "mu_z must be finite");
  if (kind == InitKind::kCustomPerNode && per_node_mu.size() != n) {
    throw Error(ErrorCode::kInvalidSpec, "custom-per-node init needs one mean per node");
  }
}

DualState InitDuals(const Graph& graph, const InitSpec& spec) {
  spec.Validate(graph.n());
  DualState out;
  out.z.assign(graph.num_slots(), 0.0);
  if (spec.kind == InitKind::kZero) return out;

  // Unresolved auto behaves as from-above (the max-consensus convention).
  const double orient = spec.direction == InitDirection::kFromBelow ? 1.0 : -1.0;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t sl = 0; sl < out.z.size(); ++sl) {
    double mean = 0.0;
    switch (spec.kind) {
      case InitKind::kSignedGaussian:
        mean = orient * graph.slot_sign(sl) * spec.mu_z;
        break;
      case InitKind::kGaussian:
        mean = spec.mu_z;
        break;
      case InitKind::kCustomPerNode:
        mean = orient * graph.slot_sign(sl) * spec.per_node_mu[graph.slot_source(sl)];
        break;
      case InitKind::kZero:
        break;
    }
    out.z[sl] = mean + spec.sigma_z * noise(rng);
  }
  return out;
}

std::span<const double> Transcript::z_at(std::size_t t) const {
  if (config.record_dual_history) return {z_hist.data() + t * num_slots, num_slots};
  if (t == 0) return {z_hist.data(), num_slots};
  if (t == rounds) return {z_hist.data() + num_slots, num_slots};
  throw Error(ErrorCode::kMissingObservation, "dual history was not recorded");
}

DualState Transcript::final_duals() const {
  auto last = z_at(rounds);
  return DualState{std::vector<double>(last.begin(), last.end())};
}

double Transcript::consensus_value() const {
  if (rounds == 0) throw Error(ErrorCode::kDivergence, "transcript has no rounds");
  auto last = x_at(rounds - 1);
  return std::accumulate(last.begin(), last.end(), 0.0) / static_cast<double>(n);
}

Transcript Run(const Graph& graph, std::span<const double> s, const LocalRule& rule,
               const InitSpec& init, const EngineConfig& config) {
  return RunWithRule(graph, s, rule, InitDuals(graph, init), config);
}

void WriteTranscriptCsv(const Transcript& tr, std::ostream& out) {
  out << "t,i,x\n";
  for (std::size_t t = 0; t < tr.rounds; ++t) {
    for (std::size_t i = 0; i < tr.n; ++i) {
      out << t << ',' << i << ',' << FormatDouble(tr.x(t, static_cast<NodeId>(i))) << '\n';
    }
  }
}

void WriteInitialDualsCsv(const Graph& graph, const DualState& z0, std::ostream& out) {
  out << "i,j,z0\n";
  for (std::size_t sl = 0; sl < graph.num_slots(); ++sl) {
    out << graph.slot_source(sl) << ',' << graph.slot_target(sl) << ','
        << FormatDouble(z0.z[sl]) << '\n';
  }
}

}  // namespace privagg
