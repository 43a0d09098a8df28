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

#include "privagg/operators.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "privagg/error.hpp"

namespace privagg {

void OperatorSpec::Validate(std::size_t n) const {
  switch (kind) {
    case OperatorKind::kTopK:
      if (k < 1 || k > n) throw Error(ErrorCode::kInvalidSpec, "top-K needs 1 <= K <= n");
      if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidSpec, "top-K needs eps > 0");
      break;
    case OperatorKind::kQuantile:
      if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::kInvalidSpec, "q must lie in (0, 1)");
      break;
    case OperatorKind::kTrimmedMean:
      if (2 * k + 1 > n) throw Error(ErrorCode::kDegenerate, "trimmed mean needs n - 2K >= 1");
      if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidSpec, "trimmed mean needs eps > 0");
      break;
    default:
      break;
  }
}

std::string OperatorSpec::Name() const {
  switch (kind) {
    case OperatorKind::kMax: return "max";
    case OperatorKind::kMin: return "min";
    case OperatorKind::kTopK: return "topk";
    case OperatorKind::kMedian: return "median";
    case OperatorKind::kQuantile: return "quantile";
    case OperatorKind::kTrimmedMean: return "trimmed_mean";
    case OperatorKind::kAverage: return "average";
  }
  return "unknown";
}

OperatorKind ParseOperatorKind(const std::string& name) {
  if (name == "max") return OperatorKind::kMax;
  if (name == "min") return OperatorKind::kMin;
  if (name == "topk") return OperatorKind::kTopK;
  if (name == "median") return OperatorKind::kMedian;
  if (name == "quantile") return OperatorKind::kQuantile;
  if (name == "trimmed_mean") return OperatorKind::kTrimmedMean;
  if (name == "average") return OperatorKind::kAverage;
  throw Error(ErrorCode::kInvalidSpec, "unknown operator '" + name + "'");
}

InitSpec ResolveInit(InitSpec init, OperatorKind kind) {
  if (init.direction == InitDirection::kAuto) {
    init.direction =
        kind == OperatorKind::kMin ? InitDirection::kFromBelow : InitDirection::kFromAbove;
  }
  return init;
}

bool TopKRoundState::Contains(double s) const {
  return std::any_of(pool.begin(), pool.end(),
                     [&](double v) { return std::abs(s - v) <= eps; });
}

LocalRule MakeRule(const OperatorSpec& spec) {
  switch (spec.kind) {
    case OperatorKind::kMax:
      return [](const RoundContext& r) { return XUpdateMax(r.s, r.degree, r.dual_sum, r.c); };
    case OperatorKind::kMin:
      return [](const RoundContext& r) { return XUpdateMin(r.s, r.degree, r.dual_sum, r.c); };
    case OperatorKind::kMedian:
      return [](const RoundContext& r) {
        return XUpdateMedian(r.s, r.degree, r.dual_sum, r.c);
      };
    case OperatorKind::kQuantile:
      return [q = spec.q](const RoundContext& r) {
        return XUpdateQuantile(r.s, r.degree, r.dual_sum, r.c, q);
      };
    case OperatorKind::kAverage:
      return [](const RoundContext& r) {
        return XUpdateAverage(r.s, r.degree, r.dual_sum, r.c);
      };
    case OperatorKind::kTopK:
    case OperatorKind::kTrimmedMean:
      break;
  }
  throw Error(ErrorCode::kInvalidSpec, spec.Name() + " is not a single-consensus operator");
}

namespace {

// Concrete rule dispatch so the engine loop inlines the update.
Transcript RunSingle(const Graph& graph, std::span<const double> s, const OperatorSpec& spec,
                     DualState z0, const EngineConfig& config) {
  switch (spec.kind) {
    case OperatorKind::kMax:
      return RunWithRule(graph, s, [](const RoundContext& r) {
        return XUpdateMax(r.s, r.degree, r.dual_sum, r.c);
      }, std::move(z0), config);
    case OperatorKind::kMin:
      return RunWithRule(graph, s, [](const RoundContext& r) {
        return XUpdateMin(r.s, r.degree, r.dual_sum, r.c);
      }, std::move(z0), config);
    case OperatorKind::kMedian:
      return RunWithRule(graph, s, [](const RoundContext& r) {
        return XUpdateMedian(r.s, r.degree, r.dual_sum, r.c);
      }, std::move(z0), config);
    case OperatorKind::kQuantile:
      return RunWithRule(graph, s, [q = spec.q](const RoundContext& r) {
        return XUpdateQuantile(r.s, r.degree, r.dual_sum, r.c, q);
      }, std::move(z0), config);
    case OperatorKind::kAverage:
      return RunWithRule(graph, s, [](const RoundContext& r) {
        return XUpdateAverage(r.s, r.degree, r.dual_sum, r.c);
      }, std::move(z0), config);
    default:
      break;
  }
  throw Error(ErrorCode::kInvalidSpec, spec.Name() + " is not a single-consensus operator");
}

std::vector<std::pair<NodeId, NodeId>> FindCollisions(std::span<const double> s, double eps) {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (NodeId i = 0; i < s.size(); ++i) {
    for (NodeId j = i + 1; j < s.size(); ++j) {
      if (s[i] != s[j] && std::abs(s[i] - s[j]) <= eps) out.emplace_back(i, j);
    }
  }
  return out;
}

}  // namespace

ConsensusRun RunConsensus(const Graph& graph, std::span<const double> s,
                          const OperatorSpec& spec, const InitSpec& init,
                          const EngineConfig& config) {
  spec.Validate(graph.n());
  ConsensusRun run;
  run.transcript = RunSingle(graph, s, spec, InitDuals(graph, ResolveInit(init, spec.kind)),
                             config);
  if (!run.transcript.diverged) run.estimate = run.transcript.consensus_value();
  return run;
}

TopKResult RunTopK(const Graph& graph, std::span<const double> s, std::size_t k, double eps,
                   const InitSpec& init, const EngineConfig& config) {
  OperatorSpec spec{OperatorKind::kTopK, k, eps, 0.5};
  spec.Validate(graph.n());
  TopKResult result;
  result.collisions = FindCollisions(s, eps);

  OperatorSpec max_spec{OperatorKind::kMax};
  result.rounds.push_back(RunSingle(graph, s, max_spec,
                                    InitDuals(graph, ResolveInit(init, OperatorKind::kMax)),
                                    config));
  if (result.rounds.back().diverged) {
    result.diverged = true;
    return result;
  }
  TopKRoundState state{{result.rounds.back().consensus_value()}, eps, 0};
  for (std::size_t round = 1; round <= k; ++round) {
    state.round = round;
    DualState warm = result.rounds.back().final_duals();
    result.rounds.push_back(RunWithRule(graph, s, [&state](const RoundContext& r) {
      return XUpdateTopK(r.s, r.degree, r.dual_sum, r.c, state);
    }, std::move(warm), config));
    if (result.rounds.back().diverged) {
      result.diverged = true;
      break;
    }
    state.pool.push_back(result.rounds.back().consensus_value());
  }
  result.pool = state.pool;
  result.values.assign(result.pool.begin(),
                       result.pool.begin() + std::min(k, result.pool.size()));
  return result;
}

double TrimmedMeanCombine(double mean, std::size_t n,
                          std::span<const std::pair<double, double>> extrema) {
  if (n < 2 * extrema.size() + 1) {
    throw Error(ErrorCode::kDegenerate, "trimmed mean needs n - 2K >= 1");
  }
  double removed = 0.0;
  for (const auto& [hi, lo] : extrema) removed += hi + lo;
  return (static_cast<double>(n) * mean - removed) /
         static_cast<double>(n - 2 * extrema.size());
}

TrimmedMeanResult RunTrimmedMean(const Graph& graph, std::span<const double> s, std::size_t k,
                                 double eps, const InitSpec& init, const EngineConfig& config) {
  OperatorSpec spec{OperatorKind::kTrimmedMean, k, eps, 0.5};
  spec.Validate(graph.n());
  TrimmedMeanResult result;
  std::vector<std::pair<double, double>> extrema;
  if (k > 0) {
    InitSpec upper_init = init;
    upper_init.direction = InitDirection::kFromAbove;
    result.upper = RunTopK(graph, s, k, eps, upper_init, config);

    std::vector<double> negated(s.begin(), s.end());
    for (double& v : negated) v = -v;
    InitSpec lower_init = upper_init;
    lower_init.seed = init.seed + 1;
    result.lower = RunTopK(graph, negated, k, eps, lower_init, config);
    for (double& v : result.lower.values) v = -v;
    for (double& v : result.lower.pool) v = -v;
    if (result.upper.diverged || result.lower.diverged) {
      result.diverged = true;
      return result;
    }
    for (std::size_t i = 0; i < k; ++i) {
      extrema.emplace_back(result.upper.values[i], result.lower.values[i]);
    }
  }
  InitSpec avg_init = init;
  avg_init.seed = init.seed + 2;
  OperatorSpec avg{OperatorKind::kAverage};
  result.average =
      RunSingle(graph, s, avg, InitDuals(graph, ResolveInit(avg_init, avg.kind)), config);
  if (result.average.diverged) {
    result.diverged = true;
    return result;
  }
  result.mean = result.average.consensus_value();
  result.estimate = TrimmedMeanCombine(result.mean, graph.n(), extrema);
  return result;
}

std::pair<double, double> QuantileMinimizerInterval(std::span<const double> s, double q) {
  if (s.empty()) throw Error(ErrorCode::kInvalidSpec, "empty input");
  std::vector<double> a(s.begin(), s.end());
  std::sort(a.begin(), a.end());
  const std::size_t n = a.size();
  for (std::size_t k = 0; k < n; ++k) {
    // Count ties so the right derivative is taken at the value, not the index.
    std::size_t upto = k;
    while (upto + 1 < n && a[upto + 1] == a[k]) ++upto;
    const double at_or_below = static_cast<double>(upto + 1);
    const double above = static_cast<double>(n - upto - 1);
    const double right = q * at_or_below - (1.0 - q) * above;
    if (right >= 0.0) {
      const double hi = (right == 0.0 && upto + 1 < n) ? a[upto + 1] : a[k];
      return {a[k], hi};
    }
    k = upto;
  }
  return {a.back(), a.back()};
}

std::vector<double> ReferenceAggregate(const OperatorSpec& spec, std::span<const double> s) {
  spec.Validate(s.size());
  if (s.empty()) throw Error(ErrorCode::kInvalidSpec, "empty input");
  std::vector<double> desc(s.begin(), s.end());
  std::sort(desc.begin(), desc.end(), std::greater<>());
  const double n = static_cast<double>(s.size());
  switch (spec.kind) {
    case OperatorKind::kMax: return {desc.front()};
    case OperatorKind::kMin: return {desc.back()};
    case OperatorKind::kTopK: return {desc.begin(), desc.begin() + spec.k};
    case OperatorKind::kMedian: return {QuantileMinimizerInterval(s, 0.5).first};
    case OperatorKind::kQuantile: return {QuantileMinimizerInterval(s, spec.q).first};
    case OperatorKind::kAverage:
      return {std::accumulate(desc.begin(), desc.end(), 0.0) / n};
    case OperatorKind::kTrimmedMean: {
      double kept = 0.0;
      for (std::size_t i = spec.k; i + spec.k < desc.size(); ++i) kept += desc[i];
      return {kept / static_cast<double>(desc.size() - 2 * spec.k)};
    }
  }
  throw Error(ErrorCode::kInvalidSpec, "unknown operator");
}

}  // namespace privagg
