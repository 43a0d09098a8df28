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

#ifndef PRIVAGG_OPERATORS_HPP_
#define PRIVAGG_OPERATORS_HPP_

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "privagg/pdmm.hpp"
#include "privagg/topology.hpp"

namespace privagg {

enum class OperatorKind { kMax, kMin, kTopK, kMedian, kQuantile, kTrimmedMean, kAverage };

struct OperatorSpec {
  OperatorKind kind = OperatorKind::kMax;
  // Top-K size, or number of values trimmed from each side.
  std::size_t k = 1;
  // Pool tolerance for top-K rounds.
  double eps = 1e-3;
  double q = 0.5;

  void Validate(std::size_t n) const;
  // "max", "topk", ... as used in config files.
  std::string Name() const;
};

OperatorKind ParseOperatorKind(const std::string& name);

// Maps kAuto onto the operator's natural start side: below for min, above
// for everything else.
InitSpec ResolveInit(InitSpec init, OperatorKind kind);

// Primal updates. All take the signed dual sum sum_j a_ij z_{i|j}.

inline double XUpdateMax(double s, std::size_t d, double sum, double c) {
  return std::max((-1.0 - sum) / (c * static_cast<double>(d)), s);
}

inline double XUpdateMin(double s, std::size_t d, double sum, double c) {
  return std::min((1.0 - sum) / (c * static_cast<double>(d)), s);
}

// Values already identified by earlier top-K rounds.
struct TopKRoundState {
  std::vector<double> pool;  // descending
  double eps = 1e-3;
  std::size_t round = 0;

  // s lies within eps of some pooled value.
  bool Contains(double s) const;
};

inline double XUpdateTopK(double s, std::size_t d, double sum, double c,
                          const TopKRoundState& state) {
  if (state.Contains(s)) return (-1.0 - sum) / (c * static_cast<double>(d));
  return XUpdateMax(s, d, sum, c);
}

// The hold window [lo, hi] of the piecewise-linear rules; s_i is emitted
// verbatim while it lies inside.
struct Window {
  double lo;
  double hi;
};

inline Window MedianWindow(std::size_t d, double sum, double c) {
  const double cd = c * static_cast<double>(d);
  return {(-1.0 - sum) / cd, (1.0 - sum) / cd};
}

inline Window QuantileWindow(std::size_t d, double sum, double c, double q) {
  const double cd = c * static_cast<double>(d);
  return {(-q - sum) / cd, (1.0 - q - sum) / cd};
}

inline double ClampToWindow(double s, Window w) {
  if (w.lo > s) return w.lo;
  if (w.hi < s) return w.hi;
  return s;
}

inline double XUpdateMedian(double s, std::size_t d, double sum, double c) {
  return ClampToWindow(s, MedianWindow(d, sum, c));
}

inline double XUpdateQuantile(double s, std::size_t d, double sum, double c, double q) {
  return ClampToWindow(s, QuantileWindow(d, sum, c, q));
}

// argmin of (x - s)^2 / 2 plus the augmented edge terms.
inline double XUpdateAverage(double s, std::size_t d, double sum, double c) {
  return (s - sum) / (1.0 + c * static_cast<double>(d));
}

// Local rule for the single-consensus operators (max, min, median,
// quantile, average).
LocalRule MakeRule(const OperatorSpec& spec);

struct ConsensusRun {
  Transcript transcript;
  double estimate = 0.0;
};

ConsensusRun RunConsensus(const Graph& graph, std::span<const double> s,
                          const OperatorSpec& spec, const InitSpec& init,
                          const EngineConfig& config);

struct TopKResult {
  // First K identified values, descending.
  std::vector<double> values;
  // Everything the rounds identified: the initial maximum plus one value per
  // top-K round, i.e. K + 1 entries.
  std::vector<double> pool;
  std::vector<Transcript> rounds;
  // Pairs of distinct private values closer than eps.
  std::vector<std::pair<NodeId, NodeId>> collisions;
  bool diverged = false;
};

TopKResult RunTopK(const Graph& graph, std::span<const double> s, std::size_t k, double eps,
                   const InitSpec& init, const EngineConfig& config);

// (n * mean - sum_k (s_(k) + s_(n+1-k))) / (n - 2K); extrema holds the K
// (largest, smallest) pairs.
double TrimmedMeanCombine(double mean, std::size_t n,
                          std::span<const std::pair<double, double>> extrema);

struct TrimmedMeanResult {
  double estimate = 0.0;
  double mean = 0.0;
  TopKResult upper;
  // Top-K of the negated values; values are reported negated back.
  TopKResult lower;
  Transcript average;
  bool diverged = false;
};

TrimmedMeanResult RunTrimmedMean(const Graph& graph, std::span<const double> s, std::size_t k,
                                 double eps, const InitSpec& init, const EngineConfig& config);

// Centralised ground truth. Scalar operators give one value; top-K gives K
// values in descending order. Even-length medians take the lower median and
// quantiles the smallest pinball-loss minimiser.
std::vector<double> ReferenceAggregate(const OperatorSpec& spec, std::span<const double> s);

// Interval of pinball-loss minimisers; a single point when q * n is not an
// integer.
std::pair<double, double> QuantileMinimizerInterval(std::span<const double> s, double q);

}  // namespace privagg

#endif  // PRIVAGG_OPERATORS_HPP_
