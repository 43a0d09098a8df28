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

#include "privagg/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "json.hpp"
#include "privagg/error.hpp"
#include "privagg/format.hpp"

namespace privagg {

namespace {

constexpr std::uint64_t kStreamInputs = 0;
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamNoise = 2;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool HasBranchIndicators(OperatorKind kind) {
  return kind == OperatorKind::kMax || kind == OperatorKind::kMin ||
         kind == OperatorKind::kMedian || kind == OperatorKind::kQuantile;
}

// One consensus run inside the protocol timeline. sign undoes the negation
// of the lower trimmed-mean side.
struct Segment {
  const Transcript* tr;
  double sign;
  double target;
};

class Timeline {
 public:
  explicit Timeline(std::vector<Segment> segments) : segments_(std::move(segments)) {
    for (const Segment& s : segments_) {
      offsets_.push_back(rounds_);
      rounds_ += s.tr->rounds;
    }
  }

  std::size_t rounds() const { return rounds_; }

  // Segment index and local round of global round t.
  std::pair<std::size_t, std::size_t> Locate(std::size_t t) const {
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), t);
    const std::size_t seg = static_cast<std::size_t>(it - offsets_.begin()) - 1;
    return {seg, t - offsets_[seg]};
  }

  double x(std::size_t t, NodeId i) const {
    const auto [seg, local] = Locate(t);
    return segments_[seg].sign * segments_[seg].tr->x(local, i);
  }

  double Mse(std::size_t t, std::size_t n) const {
    const auto [seg, local] = Locate(t);
    const Segment& s = segments_[seg];
    double acc = 0.0;
    for (NodeId i = 0; i < n; ++i) {
      const double e = s.sign * s.tr->x(local, i) - s.target;
      acc += e * e;
    }
    return acc / static_cast<double>(n);
  }

  std::vector<std::optional<std::size_t>> Matches(std::span<const double> s, double tol) const {
    std::vector<std::optional<std::size_t>> out(s.size());
    std::size_t open = s.size();
    for (std::size_t seg = 0; seg < segments_.size() && open > 0; ++seg) {
      const Segment& sg = segments_[seg];
      for (std::size_t t = 0; t < sg.tr->rounds && open > 0; ++t) {
        for (NodeId i = 0; i < s.size(); ++i) {
          if (!out[i] && std::abs(sg.sign * sg.tr->x(t, i) - s[i]) <= tol) {
            out[i] = offsets_[seg] + t;
            --open;
          }
        }
      }
    }
    return out;
  }

 private:
  std::vector<Segment> segments_;
  std::vector<std::size_t> offsets_;
  std::size_t rounds_ = 0;
};

template <typename F>
void ParallelFor(std::size_t count, std::size_t threads, F body) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<double> SortedDescending(std::span<const double> s) {
  std::vector<double> v(s.begin(), s.end());
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

double Mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

Relabeling RelabelByOrderStats(std::span<const double> raw) {
  Relabeling out;
  out.permutation.resize(raw.size());
  std::iota(out.permutation.begin(), out.permutation.end(), std::size_t{0});
  std::stable_sort(out.permutation.begin(), out.permutation.end(),
                   [&](std::size_t a, std::size_t b) { return raw[a] > raw[b]; });
  out.s.reserve(raw.size());
  for (std::size_t p : out.permutation) out.s.push_back(raw[p]);
  return out;
}

std::vector<double> MseSeries(std::span<const double> x_hist, std::size_t n, double x_star) {
  if (n == 0 || x_hist.size() % n != 0) throw Error(ErrorCode::kInvalidSpec, "history shape");
  std::vector<double> out(x_hist.size() / n);
  for (std::size_t t = 0; t < out.size(); ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = x_hist[t * n + i] - x_star;
      acc += e * e;
    }
    out[t] = acc / static_cast<double>(n);
  }
  return out;
}

std::vector<double> DpPerturb(std::span<const double> s, NoiseKind noise, double sigma_s,
                              std::uint64_t seed) {
  if (!(sigma_s >= 0.0)) throw Error(ErrorCode::kInvalidSpec, "sigma_s must be >= 0");
  std::vector<double> out(s.begin(), s.end());
  if (sigma_s == 0.0) return out;
  std::mt19937_64 rng(seed);
  if (noise == NoiseKind::kGaussian) {
    std::normal_distribution<double> g(0.0, sigma_s);
    for (double& v : out) v += g(rng);
  } else {
    // The difference of two Exp(1/b) draws is Laplace(0, b).
    std::exponential_distribution<double> e(std::sqrt(2.0) / sigma_s);
    for (double& v : out) {
      const double a = e(rng);
      v += a - e(rng);
    }
  }
  return out;
}

std::uint64_t TrialSeed(std::uint64_t master_seed, std::size_t trial, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return static_cast<std::uint64_t>(words[0]) << 32 | words[1];
}

std::vector<double> SampleInputs(const ExperimentConfig& config, std::uint64_t seed) {
  const std::size_t n = config.topology.n;
  std::mt19937_64 rng(seed);
  std::vector<double> s(n);
  if (config.s_distribution == SDistribution::kStandardNormal) {
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : s) v = g(rng);
    return s;
  }
  const BimodalSpec& b = config.bimodal;
  std::normal_distribution<double> low(-b.mu, b.sigma), high(b.mu, b.sigma), mid(0.0, b.sigma);
  const std::size_t half = n / 2;
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = i < half ? low(rng) : i < 2 * half ? high(rng) : mid(rng);
  }
  return s;
}

Graph BuildGraph(const ExperimentConfig& config) {
  if (!config.edges_file) return Generate(config.topology).graph;
  std::ifstream in(*config.edges_file);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open " + config.edges_file->string());
  Graph g = ReadEdgeList(in);
  if (g.n() != config.topology.n) {
    throw Error(ErrorCode::kConfig, "edges_file has " + std::to_string(g.n()) +
                                        " nodes but topology.n is " +
                                        std::to_string(config.topology.n));
  }
  return g;
}

std::size_t TotalRounds(const ExperimentConfig& config) {
  const std::size_t t = config.engine.t_max;
  switch (config.op.kind) {
    case OperatorKind::kTopK: return (config.op.k + 1) * t;
    case OperatorKind::kTrimmedMean: return (config.op.k == 0 ? 0 : 2 * (config.op.k + 1) * t) + t;
    default: return t;
  }
}

std::vector<std::size_t> SamplingGrid(std::size_t total_rounds, std::size_t points) {
  std::vector<std::size_t> grid;
  if (total_rounds == 0) return grid;
  points = std::max<std::size_t>(2, std::min(points, total_rounds));
  for (std::size_t p = 0; p < points; ++p) {
    grid.push_back(static_cast<std::size_t>(
        std::llround(static_cast<double>(p) * static_cast<double>(total_rounds - 1) /
                     static_cast<double>(points - 1))));
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

TrialResult RunTrial(const ExperimentConfig& config, const Graph& graph,
                     std::span<const std::size_t> grid, std::size_t trial) {
  const std::size_t n = graph.n();
  const OperatorSpec& op = config.op;
  TrialResult r;
  r.trial = trial;
  r.relabeled = RelabelByOrderStats(SampleInputs(config, TrialSeed(config.master_seed, trial, kStreamInputs)));
  const std::vector<double>& s = r.relabeled.s;
  r.s_used = config.dp ? DpPerturb(s, config.dp->noise, config.dp->sigma_s,
                                   TrialSeed(config.master_seed, trial, kStreamNoise))
                       : s;
  r.reference = ReferenceAggregate(op, s);
  r.ideal = ComputeIdealSideInfo(s, graph, config.corruption, op);

  InitSpec init = config.init;
  init.seed = TrialSeed(config.master_seed, trial, kStreamInit);
  EngineConfig engine = config.engine;
  engine.record_dual_history = !config.corruption.corrupted.empty();

  const std::vector<double> desc = SortedDescending(s);
  std::vector<Segment> segments;
  ConsensusRun single;
  TopKResult topk;
  TrimmedMeanResult trimmed;
  switch (op.kind) {
    case OperatorKind::kTopK: {
      topk = RunTopK(graph, r.s_used, op.k, op.eps, init, engine);
      r.diverged = topk.diverged;
      for (std::size_t k = 0; k < topk.rounds.size(); ++k) {
        segments.push_back({&topk.rounds[k], 1.0, desc[k]});
      }
      r.estimate = topk.values;
      break;
    }
    case OperatorKind::kTrimmedMean: {
      trimmed = RunTrimmedMean(graph, r.s_used, op.k, op.eps, init, engine);
      r.diverged = trimmed.diverged;
      for (std::size_t k = 0; k < trimmed.upper.rounds.size(); ++k) {
        segments.push_back({&trimmed.upper.rounds[k], 1.0, desc[k]});
      }
      for (std::size_t k = 0; k < trimmed.lower.rounds.size(); ++k) {
        segments.push_back({&trimmed.lower.rounds[k], -1.0, desc[n - 1 - k]});
      }
      if (trimmed.average.rounds > 0) segments.push_back({&trimmed.average, 1.0, Mean(s)});
      r.estimate = {trimmed.estimate};
      break;
    }
    default: {
      single = RunConsensus(graph, r.s_used, op, init, engine);
      r.diverged = single.transcript.diverged;
      segments.push_back({&single.transcript, 1.0, r.reference.front()});
      r.estimate = {single.estimate};
      break;
    }
  }
  const Timeline timeline(std::move(segments));
  r.matched_at = timeline.Matches(s, config.engine.match_tol);

  r.mse_series.reserve(grid.size());
  r.x_grid.reserve(grid.size() * n);
  for (std::size_t t : grid) {
    const bool have = t < timeline.rounds();
    r.mse_series.push_back(have ? timeline.Mse(t, n) : kNaN);
    for (NodeId i = 0; i < n; ++i) r.x_grid.push_back(have ? timeline.x(t, i) : kNaN);
  }
  if (timeline.rounds() > 0) {
    for (NodeId i = 0; i < n; ++i) r.final_x.push_back(timeline.x(timeline.rounds() - 1, i));
  }

  if (r.diverged) {
    r.final_mse = kNaN;
  } else if (op.kind == OperatorKind::kTopK || op.kind == OperatorKind::kTrimmedMean) {
    double acc = 0.0;
    for (std::size_t k = 0; k < r.reference.size(); ++k) {
      acc += (r.estimate[k] - r.reference[k]) * (r.estimate[k] - r.reference[k]);
    }
    r.final_mse = acc / static_cast<double>(r.reference.size());
  } else {
    r.final_mse = timeline.Mse(timeline.rounds() - 1, n);
  }

  if (HasBranchIndicators(op.kind) && config.corruption.eavesdrop && !r.diverged) {
    const Transcript& tr = single.transcript;
    const Observation obs = CollectObservation(tr, graph, config.corruption);
    r.indicators = InferIndicators(obs, graph, op);
    const IndicatorSet oracle = EvaluateConditionP(tr, graph, op);
    r.indicators_agree = r.indicators->y == oracle.y && r.indicators->y_prime == oracle.y_prime;
  }
  return r;
}

bool ExperimentResult::divergence_exceeded() const {
  return static_cast<double>(diverged) >
         config.divergence_threshold * static_cast<double>(trials.size());
}

std::string ExperimentResult::trial_set() const {
  return config.dp ? "dp-" + NoiseKindName(config.dp->noise) : "proposed";
}

ExperimentResult RunMonteCarlo(const ExperimentConfig& config) {
  config.Validate();
  ExperimentResult res;
  res.config = config;
  res.graph = BuildGraph(config);
  if (!res.graph.connected()) throw Error(ErrorCode::kConfig, "graph is not connected");
  const std::size_t n = res.graph.n();
  res.total_rounds = TotalRounds(config);
  res.grid = SamplingGrid(res.total_rounds, config.metrics.grid_points);

  res.trials.resize(config.trials);
  ParallelFor(config.trials, config.threads, [&](std::size_t t) {
    res.trials[t] = RunTrial(config, res.graph, res.grid, t);
  });

  std::vector<const TrialResult*> kept;
  for (const TrialResult& t : res.trials) {
    if (t.diverged) {
      ++res.diverged;
    } else {
      kept.push_back(&t);
    }
  }
  const double m = static_cast<double>(kept.size());

  res.mean_mse.assign(res.grid.size(), kNaN);
  res.mean_final_mse = kNaN;
  res.nodes.resize(n);
  if (kept.empty()) return res;

  for (std::size_t g = 0; g < res.grid.size(); ++g) {
    double acc = 0.0;
    for (const TrialResult* t : kept) acc += t->mse_series[g];
    res.mean_mse[g] = acc / m;
  }
  double acc = 0.0;
  for (const TrialResult* t : kept) acc += t->final_mse;
  res.mean_final_mse = acc / m;

  std::size_t with_ind = 0, agree = 0;
  for (const TrialResult* t : kept) {
    if (!t->indicators) continue;
    ++with_ind;
    agree += t->indicators_agree;
  }
  if (with_ind > 0) res.indicator_agreement = static_cast<double>(agree) / static_cast<double>(with_ind);

  for (NodeId i = 0; i < n; ++i) {
    NodeMetrics& nm = res.nodes[i];
    std::vector<std::optional<std::size_t>> matched;
    for (const TrialResult* t : kept) matched.push_back(t->matched_at[i]);
    nm.leakage_probability = LeakageProbability(matched);
    if (with_ind > 0) {
      double y = 0.0, yp = 0.0;
      bool has_prime = false;
      for (const TrialResult* t : kept) {
        y += t->indicators->y[i];
        yp += t->indicators->y_prime[i];
        has_prime = t->indicators->has_y_prime;
      }
      nm.y_rate = y / static_cast<double>(with_ind);
      if (has_prime) nm.y_prime_rate = yp / static_cast<double>(with_ind);
    }
  }

  const MetricsSpec& ms = config.metrics;
  if (kept.size() > ms.knn_k + 1 && (ms.nmi || ms.ideal_bound)) {
    NmiOptions opts;
    opts.knn.k = ms.knn_k;
    opts.knn.match_tol = config.engine.match_tol;
    opts.mode = ms.self_mi;
    opts.fixed_self_mi = ms.fixed_self_mi;
    ParallelFor(n, config.threads, [&](std::size_t i) {
      std::vector<double> s_col;
      for (const TrialResult* t : kept) s_col.push_back(t->relabeled.s[i]);
      if (ms.nmi) {
        std::vector<std::vector<double>> x_by_round(res.grid.size());
        for (std::size_t g = 0; g < res.grid.size(); ++g) {
          for (const TrialResult* t : kept) x_by_round[g].push_back(t->x_grid[g * n + i]);
        }
        res.nodes[i].nmi = NmiCurve(s_col, x_by_round, res.grid, opts);
      }
      if (ms.ideal_bound && !config.corruption.IsCorrupted(static_cast<NodeId>(i))) {
        std::vector<IdealSideInfo> infos;
        for (const TrialResult* t : kept) infos.push_back(t->ideal);
        const MIEstimate est = IdealBoundEstimate(s_col, infos, static_cast<NodeId>(i),
                                                  config.corruption, config.op, opts.knn);
        res.nodes[i].ideal_bound_nmi =
            est.deterministic ? 1.0 : std::clamp(est.raw / SelfMi(s_col, opts), 0.0, 1.0);
      }
    });
  }
  return res;
}

std::vector<SweepPoint> RunSweep(const ExperimentConfig& base, const SweepSpec& sweep) {
  if (sweep.values.empty()) throw Error(ErrorCode::kConfig, "sweep has no values");
  std::vector<SweepPoint> out;
  for (const std::string& v : sweep.values) {
    out.push_back({v, RunMonteCarlo(ApplyAxis(base, sweep, v))});
  }
  return out;
}

void WriteMetricsHeader(std::ostream& out) {
  out << "experiment,axis_value,trial_set,node,t,metric,value\n";
}

void WriteMetrics(std::ostream& out, const ExperimentResult& res, const std::string& axis_value) {
  const std::string prefix = res.config.name + ',' + axis_value + ',' + res.trial_set() + ',';
  auto row = [&](const std::string& node, const std::string& t, const char* metric, double v) {
    out << prefix << node << ',' << t << ',' << metric << ',' << FormatDouble(v) << '\n';
  };
  const std::string last = res.total_rounds ? std::to_string(res.total_rounds - 1) : "";
  row("all", "", "trials", static_cast<double>(res.trials.size()));
  row("all", "", "diverged_trials", static_cast<double>(res.diverged));
  for (std::size_t g = 0; g < res.grid.size(); ++g) {
    row("all", std::to_string(res.grid[g]), "mse", res.mean_mse[g]);
  }
  row("all", last, "final_mse", res.mean_final_mse);
  if (HasBranchIndicators(res.config.op.kind) && res.config.corruption.eavesdrop) {
    row("all", "", "indicator_agreement", res.indicator_agreement);
  }
  for (std::size_t i = 0; i < res.nodes.size(); ++i) {
    const NodeMetrics& nm = res.nodes[i];
    const std::string node = std::to_string(i);
    row(node, "", "leakage_probability", nm.leakage_probability);
    if (nm.y_rate) row(node, "", "y_rate", *nm.y_rate);
    if (nm.y_prime_rate) row(node, "", "y_prime_rate", *nm.y_prime_rate);
    for (const NmiPoint& p : nm.nmi) {
      row(node, std::to_string(p.t), "nmi", p.nmi);
      row(node, std::to_string(p.t), "mi_nats", p.mi_nats);
    }
    if (nm.ideal_bound_nmi) row(node, last, "ideal_bound_nmi", *nm.ideal_bound_nmi);
  }
}

void WriteTrialsJsonl(std::ostream& out, const ExperimentResult& res,
                      const std::string& axis_value) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  auto arr = [&](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
  };
  auto bits = [](const std::vector<std::uint8_t>& v) {
    json a = json::array();
    for (auto b : v) a.push_back(static_cast<int>(b));
    return a;
  };
  json grid = res.grid;
  for (const TrialResult& t : res.trials) {
    json j;
    j["experiment"] = res.config.name;
    j["axis_value"] = axis_value;
    j["trial_set"] = res.trial_set();
    j["trial"] = t.trial;
    j["diverged"] = t.diverged;
    j["s"] = arr(t.relabeled.s);
    j["permutation"] = t.relabeled.permutation;
    if (res.config.dp) j["s_used"] = arr(t.s_used);
    j["reference"] = arr(t.reference);
    j["estimate"] = arr(t.estimate);
    j["final_x"] = arr(t.final_x);
    j["mse_t"] = grid;
    j["mse"] = arr(t.mse_series);
    j["final_mse"] = num(t.final_mse);
    json matched = json::array();
    for (const auto& m : t.matched_at) matched.push_back(m ? json(*m) : json(nullptr));
    j["matched_at"] = matched;
    if (t.indicators) {
      j["y"] = bits(t.indicators->y);
      if (t.indicators->has_y_prime) j["y_prime"] = bits(t.indicators->y_prime);
      j["indicators_agree"] = t.indicators_agree;
    }
    json ideal;
    ideal["aggregate"] = arr(t.ideal.aggregate);
    ideal["max_membership"] = bits(t.ideal.max_membership);
    ideal["med_leq"] = bits(t.ideal.med_leq);
    ideal["med_geq"] = bits(t.ideal.med_geq);
    ideal["topk_membership"] = bits(t.ideal.topk_membership);
    ideal["bottomk_membership"] = bits(t.ideal.bottomk_membership);
    ideal["honest_component_sums"] = arr(t.ideal.honest_component_sums);
    j["ideal"] = ideal;
    out << j.dump() << '\n';
  }
}

namespace {

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  return out;
}

}  // namespace

void WriteRunOutputs(const std::filesystem::path& dir, const ConfigFile& config,
                     const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  auto metrics = OpenOut(dir / "metrics.csv");
  WriteMetricsHeader(metrics);
  WriteMetrics(metrics, result, "");
  auto trials = OpenOut(dir / "trials.jsonl");
  WriteTrialsJsonl(trials, result, "");
  auto echo = OpenOut(dir / "config.echo");
  WriteConfig(echo, config);
}

void WriteSweepOutputs(const std::filesystem::path& dir, const ConfigFile& config,
                       const std::vector<SweepPoint>& points) {
  std::filesystem::create_directories(dir);
  auto metrics = OpenOut(dir / "metrics.csv");
  WriteMetricsHeader(metrics);
  auto trials = OpenOut(dir / "trials.jsonl");
  for (const SweepPoint& p : points) {
    WriteMetrics(metrics, p.result, p.value);
    WriteTrialsJsonl(trials, p.result, p.value);
  }
  auto echo = OpenOut(dir / "config.echo");
  WriteConfig(echo, config);
}

}  // namespace privagg
