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

#include "privagg/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "privagg/error.hpp"
#include "privagg/format.hpp"

namespace privagg {

void CorruptionSpec::Validate(std::size_t n) const {
  for (NodeId i : corrupted) {
    if (i >= n) {
      throw Error(ErrorCode::kOutOfRange, "corrupted node " + std::to_string(i) + " out of range");
    }
  }
  if (!std::is_sorted(corrupted.begin(), corrupted.end()) ||
      std::adjacent_find(corrupted.begin(), corrupted.end()) != corrupted.end()) {
    throw Error(ErrorCode::kInvalidSpec, "corrupted set must be sorted and unique");
  }
  if (corrupted.size() >= n) {
    throw Error(ErrorCode::kInvalidSpec, "at least one node must stay honest");
  }
}

bool CorruptionSpec::IsCorrupted(NodeId i) const {
  return std::binary_search(corrupted.begin(), corrupted.end(), i);
}

Observation CollectObservation(const Transcript& tr, const Graph& graph,
                               const CorruptionSpec& corruption) {
  corruption.Validate(graph.n());
  if (tr.n != graph.n()) throw Error(ErrorCode::kInvalidSpec, "transcript/graph mismatch");
  Observation obs;
  obs.n = tr.n;
  obs.rounds = tr.rounds;
  obs.c = tr.config.c;
  obs.theta = tr.config.theta;
  obs.eavesdrop = corruption.eavesdrop;

  std::vector<bool> visible(tr.n, corruption.eavesdrop);
  for (NodeId j : corruption.corrupted) {
    obs.corrupted_inputs.emplace(j, tr.s[j]);
    visible[j] = true;
    for (NodeId k : graph.neighbors(j)) visible[k] = true;
  }

  if (!corruption.corrupted.empty() && !tr.has_dual_history()) {
    throw Error(ErrorCode::kMissingObservation,
                "corrupted nodes need the dual history; enable record_dual_history");
  }
  std::vector<bool> taken(graph.num_slots(), false);
  for (NodeId j : corruption.corrupted) {
    for (std::size_t sl = graph.slot_begin(j); sl < graph.slot_end(j); ++sl) {
      for (std::size_t use : {sl, graph.reverse(sl)}) {
        if (taken[use]) continue;
        taken[use] = true;
        DualHistory h{graph.slot_source(use), graph.slot_target(use), {}};
        h.values.reserve(tr.rounds + 1);
        for (std::size_t t = 0; t <= tr.rounds; ++t) h.values.push_back(tr.z_at(t)[use]);
        obs.corrupted_duals.push_back(std::move(h));
      }
    }
  }

  for (NodeId i = 0; i < tr.n; ++i) {
    if (!visible[i]) continue;
    std::vector<double> xs(tr.rounds);
    for (std::size_t t = 0; t < tr.rounds; ++t) xs[t] = tr.x(t, i);
    obs.broadcasts.emplace(i, std::move(xs));
  }
  if (corruption.eavesdrop) obs.init_msgs = tr.z0;
  return obs;
}

std::vector<std::optional<std::size_t>> DetectMatchingEvents(const Transcript& tr,
                                                             std::span<const double> s,
                                                             double tol) {
  if (!(tol >= 0.0)) throw Error(ErrorCode::kInvalidSpec, "tolerance must be >= 0");
  if (s.size() != tr.n) throw Error(ErrorCode::kInvalidSpec, "value count mismatch");
  std::vector<std::optional<std::size_t>> out(tr.n);
  for (std::size_t t = 0; t < tr.rounds; ++t) {
    auto x = tr.x_at(t);
    for (std::size_t i = 0; i < tr.n; ++i) {
      if (!out[i] && std::abs(x[i] - s[i]) <= tol) out[i] = t;
    }
  }
  return out;
}

namespace {

enum class BranchFamily { kUpper, kLower, kWindow };

BranchFamily FamilyOf(const OperatorSpec& op) {
  switch (op.kind) {
    case OperatorKind::kMax: return BranchFamily::kUpper;
    case OperatorKind::kMin: return BranchFamily::kLower;
    case OperatorKind::kMedian:
    case OperatorKind::kQuantile: return BranchFamily::kWindow;
    default: break;
  }
  throw Error(ErrorCode::kInvalidSpec,
              "branch indicators are defined for max, min, median and quantile only");
}

// The two linear branches available to node i for the given dual sum.
Window Branches(const OperatorSpec& op, std::size_t d, double sum, double c) {
  const double cd = c * static_cast<double>(d);
  switch (op.kind) {
    case OperatorKind::kMax: return {(-1.0 - sum) / cd, (-1.0 - sum) / cd};
    case OperatorKind::kMin: return {(1.0 - sum) / cd, (1.0 - sum) / cd};
    case OperatorKind::kMedian: return MedianWindow(d, sum, c);
    default: return QuantileWindow(d, sum, c, op.q);
  }
}

IndicatorSet MakeIndicatorSet(std::size_t n, bool window) {
  IndicatorSet out;
  out.y.assign(n, 1);
  out.has_y_prime = window;
  out.y_prime.assign(n, window ? 1 : 0);
  out.matched_at.assign(n, std::nullopt);
  return out;
}

}  // namespace

IndicatorSet InferIndicators(const Observation& obs, const Graph& graph, const OperatorSpec& op,
                             double recon_tol) {
  const BranchFamily family = FamilyOf(op);
  if (!obs.eavesdrop || !obs.init_msgs) {
    throw Error(ErrorCode::kMissingObservation, "indicator inference needs intercepted z^(0)");
  }
  if (obs.broadcasts.size() != graph.n()) {
    throw Error(ErrorCode::kMissingObservation, "indicator inference needs every broadcast");
  }
  const std::size_t n = graph.n();
  const std::size_t slots = graph.num_slots();
  std::vector<const std::vector<double>*> xs(n);
  for (const auto& [i, hist] : obs.broadcasts) xs[i] = &hist;

  IndicatorSet out = MakeIndicatorSet(n, family == BranchFamily::kWindow);
  std::vector<double> z = obs.init_msgs->z;
  std::vector<double> z_next(slots);
  std::vector<double> x(n);
  for (std::size_t t = 0; t < obs.rounds; ++t) {
    for (NodeId i = 0; i < n; ++i) {
      x[i] = (*xs[i])[t];
      const Window w = Branches(op, graph.degree(i), DualSum(graph, z, i), obs.c);
      const bool on_first = std::abs(x[i] - w.lo) <= recon_tol;
      const bool on_second = std::abs(x[i] - w.hi) <= recon_tol;
      switch (family) {
        case BranchFamily::kUpper:
        case BranchFamily::kLower:
          if (!on_first) out.y[i] = 0;
          break;
        case BranchFamily::kWindow:
          if (!on_first) out.y[i] = 0;
          if (!on_second) out.y_prime[i] = 0;
          break;
      }
      if (!on_first && !on_second && !out.matched_at[i]) out.matched_at[i] = t;
    }
    for (std::size_t sl = 0; sl < slots; ++sl) {
      const std::size_t rev = graph.reverse(sl);
      z_next[sl] = ZUpdate(z[sl], z[rev], x[graph.slot_target(sl)], graph.slot_sign(rev), obs.c,
                           obs.theta);
    }
    z.swap(z_next);
  }
  return out;
}

IndicatorSet EvaluateConditionP(const Transcript& tr, const Graph& graph,
                                const OperatorSpec& op) {
  const BranchFamily family = FamilyOf(op);
  if (tr.n != graph.n()) throw Error(ErrorCode::kInvalidSpec, "transcript/graph mismatch");
  IndicatorSet out = MakeIndicatorSet(tr.n, family == BranchFamily::kWindow);
  for (std::size_t t = 0; t < tr.rounds; ++t) {
    for (NodeId i = 0; i < tr.n; ++i) {
      const Window w = Branches(op, graph.degree(i), tr.dual_sum(t, i), tr.config.c);
      const double s = tr.s[i];
      switch (family) {
        case BranchFamily::kUpper:
          if (!(w.lo > s)) out.y[i] = 0;
          break;
        case BranchFamily::kLower:
          if (!(w.hi < s)) out.y[i] = 0;
          break;
        case BranchFamily::kWindow:
          if (!(w.lo > s)) out.y[i] = 0;
          if (!(w.hi < s)) out.y_prime[i] = 0;
          break;
      }
    }
  }
  out.matched_at = DetectMatchingEvents(tr, tr.s, tr.config.match_tol);
  return out;
}

IdealSideInfo ComputeIdealSideInfo(std::span<const double> s, const Graph& graph,
                                   const CorruptionSpec& corruption, const OperatorSpec& op) {
  const std::size_t n = graph.n();
  if (s.size() != n) throw Error(ErrorCode::kInvalidSpec, "value count mismatch");
  corruption.Validate(n);
  op.Validate(n);
  IdealSideInfo info;
  info.max_membership.assign(n, 0);
  info.med_leq.assign(n, 0);
  info.med_geq.assign(n, 0);
  info.topk_membership.assign(n, 0);
  info.bottomk_membership.assign(n, 0);

  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  switch (op.kind) {
    case OperatorKind::kMax:
    case OperatorKind::kMin: {
      const double ext = op.kind == OperatorKind::kMax ? sorted.front() : sorted.back();
      info.aggregate = {ext};
      for (std::size_t j = 0; j < n; ++j) info.max_membership[j] = s[j] == ext;
      break;
    }
    case OperatorKind::kMedian:
    case OperatorKind::kQuantile: {
      const double x = ReferenceAggregate(op, s).front();
      info.aggregate = {x};
      for (std::size_t j = 0; j < n; ++j) {
        info.med_leq[j] = s[j] <= x;
        info.med_geq[j] = s[j] >= x;
      }
      break;
    }
    case OperatorKind::kTopK: {
      info.aggregate.assign(sorted.begin(), sorted.begin() + op.k);
      const double kth = sorted[op.k - 1];
      for (std::size_t j = 0; j < n; ++j) info.topk_membership[j] = s[j] >= kth;
      break;
    }
    case OperatorKind::kTrimmedMean: {
      info.aggregate = ReferenceAggregate(op, s);
      info.aggregate.insert(info.aggregate.end(), sorted.begin(), sorted.begin() + op.k);
      info.aggregate.insert(info.aggregate.end(), sorted.rbegin(), sorted.rbegin() + op.k);
      if (op.k > 0) {
        const double hi = sorted[op.k - 1];
        const double lo = sorted[n - op.k];
        for (std::size_t j = 0; j < n; ++j) {
          info.topk_membership[j] = s[j] >= hi;
          info.bottomk_membership[j] = s[j] <= lo;
        }
      }
      break;
    }
    case OperatorKind::kAverage:
      info.aggregate = ReferenceAggregate(op, s);
      break;
  }

  std::vector<bool> keep(n, true);
  for (NodeId j : corruption.corrupted) {
    keep[j] = false;
    info.corrupted_inputs.emplace(j, s[j]);
  }
  info.honest_components = graph.components(keep);
  for (const auto& comp : info.honest_components) {
    double sum = 0.0;
    for (NodeId j : comp) sum += s[j];
    info.honest_component_sums.push_back(sum);
  }
  return info;
}

void WriteIndicatorCsvHeader(std::ostream& out) {
  out << "trial,node,y,y_prime,matched_at\n";
}

void WriteIndicatorCsvRows(std::ostream& out, std::size_t trial, const IndicatorSet& ind) {
  for (std::size_t i = 0; i < ind.y.size(); ++i) {
    out << trial << ',' << i << ',' << int(ind.y[i]) << ',';
    if (ind.has_y_prime) out << int(ind.y_prime[i]);
    out << ',';
    if (ind.matched_at[i]) out << *ind.matched_at[i];
    out << '\n';
  }
}

void WriteIdealSideInfoCsvHeader(std::ostream& out) {
  out << "trial,node,aggregate,max_member,med_leq,med_geq,topk_member,bottomk_member,"
         "component,component_sum,corrupted_input\n";
}

void WriteIdealSideInfoCsvRows(std::ostream& out, std::size_t trial, const IdealSideInfo& info,
                               std::size_t n) {
  std::vector<long> comp_of(n, -1);
  for (std::size_t c = 0; c < info.honest_components.size(); ++c) {
    for (NodeId j : info.honest_components[c]) comp_of[j] = static_cast<long>(c);
  }
  std::string agg;
  for (std::size_t a = 0; a < info.aggregate.size(); ++a) {
    if (a) agg += ';';
    agg += FormatDouble(info.aggregate[a]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    out << trial << ',' << i << ',' << agg << ',' << int(info.max_membership[i]) << ','
        << int(info.med_leq[i]) << ',' << int(info.med_geq[i]) << ','
        << int(info.topk_membership[i]) << ',' << int(info.bottomk_membership[i]) << ',';
    if (comp_of[i] >= 0) {
      out << comp_of[i] << ',' << FormatDouble(info.honest_component_sums[comp_of[i]]) << ',';
    } else {
      out << ",," << FormatDouble(info.corrupted_inputs.at(static_cast<NodeId>(i)));
    }
    out << '\n';
  }
}

}  // namespace privagg
