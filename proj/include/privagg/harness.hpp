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

#ifndef PRIVAGG_HARNESS_HPP_
#define PRIVAGG_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "privagg/adversary.hpp"
#include "privagg/operators.hpp"
#include "privagg/pdmm.hpp"
#include "privagg/privacy_metrics.hpp"
#include "privagg/topology.hpp"

namespace privagg {

enum class SDistribution { kStandardNormal, kBimodal };
enum class NoiseKind { kGaussian, kLaplacian };

std::string SDistributionName(SDistribution d);
SDistribution ParseSDistribution(const std::string& name);
std::string NoiseKindName(NoiseKind k);
NoiseKind ParseNoiseKind(const std::string& name);

// floor(n/2) nodes from N(-mu, sigma^2), floor(n/2) from N(mu, sigma^2) and,
// for odd n, one centre node from N(0, sigma^2).
struct BimodalSpec {
  double mu = 5.0;
  double sigma = 1.0;
};

struct DpBaseline {
  NoiseKind noise = NoiseKind::kGaussian;
  double sigma_s = 0.1;
};

struct MetricsSpec {
  bool nmi = true;
  // Rounds on which NMI and MSE are sampled; the last round is always kept.
  std::size_t grid_points = 60;
  SelfMiMode self_mi = SelfMiMode::kKsgSelf;
  double fixed_self_mi = 1.0;
  std::size_t knn_k = 3;
  bool ideal_bound = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  TopologySpec topology;
  // Overrides the generated topology when set.
  std::optional<std::filesystem::path> edges_file;
  OperatorSpec op;
  EngineConfig engine;
  // seed is ignored; each trial derives its own.
  InitSpec init{InitKind::kSignedGaussian, 100.0, 1.0, 0, InitDirection::kAuto, {}};
  CorruptionSpec corruption;
  std::size_t trials = 1000;
  SDistribution s_distribution = SDistribution::kStandardNormal;
  BimodalSpec bimodal;
  std::optional<DpBaseline> dp;
  std::uint64_t master_seed = 1;
  std::size_t threads = 1;
  // Largest tolerated fraction of diverged trials.
  double divergence_threshold = 0.05;
  MetricsSpec metrics;

  // Throws Error(kConfig) describing the first violation.
  void Validate() const;
};

// Sweep axes accepted by RunSweep.
struct SweepSpec {
  std::string axis;
  std::vector<std::string> values;
  // When sweeping c: mu_z = mu_z_scale * c and t_max = t_max_scale * c.
  std::optional<double> mu_z_scale;
  std::optional<double> t_max_scale;
};

// Reads the sectioned key/value format; unknown sections or keys throw
// Error(kConfig).
struct ConfigFile {
  ExperimentConfig experiment;
  std::optional<SweepSpec> sweep;
};
ConfigFile ParseConfig(std::istream& in);
ConfigFile LoadConfig(const std::filesystem::path& path);
void WriteConfig(std::ostream& out, const ConfigFile& config);

// Applies one sweep value. Throws Error(kConfig) for unknown axes.
ExperimentConfig ApplyAxis(ExperimentConfig config, const SweepSpec& sweep,
                           const std::string& value);

struct Relabeling {
  std::vector<double> s;  // descending
  // s[i] came from raw position permutation[i]; ties keep raw order.
  std::vector<std::size_t> permutation;
};
Relabeling RelabelByOrderStats(std::span<const double> raw);

// (1/n) sum_i (x_i - x_star)^2 for each round of a rounds-by-n history.
std::vector<double> MseSeries(std::span<const double> x_hist, std::size_t n, double x_star);

// Additive noise with standard deviation sigma_s; Laplace uses b = sigma_s/sqrt(2).
std::vector<double> DpPerturb(std::span<const double> s, NoiseKind noise, double sigma_s,
                              std::uint64_t seed);

// Deterministic per-trial seed for a given stream.
std::uint64_t TrialSeed(std::uint64_t master_seed, std::size_t trial, std::uint64_t stream);

std::vector<double> SampleInputs(const ExperimentConfig& config, std::uint64_t seed);

struct TrialResult {
  std::size_t trial = 0;
  Relabeling relabeled;
  // Inputs fed to the protocol (noisy under the DP baseline).
  std::vector<double> s_used;
  std::vector<double> reference;
  std::vector<double> estimate;
  std::vector<double> final_x;
  // MSE on the sampling grid. Composite operators report each segment
  // against its own target.
  std::vector<double> mse_series;
  double final_mse = 0.0;
  std::vector<std::optional<std::size_t>> matched_at;
  std::optional<IndicatorSet> indicators;
  // Inferred and internal indicators agree on every node.
  bool indicators_agree = true;
  IdealSideInfo ideal;
  // x_i on the sampling grid, grid-major.
  std::vector<double> x_grid;
  bool diverged = false;
};

struct NodeMetrics {
  double leakage_probability = 0.0;
  std::optional<double> y_rate;
  std::optional<double> y_prime_rate;
  std::vector<NmiPoint> nmi;
  std::optional<double> ideal_bound_nmi;
};

struct ExperimentResult {
  ExperimentConfig config;
  Graph graph;
  std::size_t total_rounds = 0;
  std::vector<std::size_t> grid;
  std::vector<TrialResult> trials;
  std::size_t diverged = 0;
  std::vector<double> mean_mse;  // over included trials, on the grid
  double mean_final_mse = 0.0;
  std::vector<NodeMetrics> nodes;
  double indicator_agreement = 1.0;

  bool divergence_exceeded() const;
  std::string trial_set() const;
};

Graph BuildGraph(const ExperimentConfig& config);

// Rounds in the full protocol timeline (segments of composite operators
// concatenated).
std::size_t TotalRounds(const ExperimentConfig& config);
std::vector<std::size_t> SamplingGrid(std::size_t total_rounds, std::size_t points);

TrialResult RunTrial(const ExperimentConfig& config, const Graph& graph,
                     std::span<const std::size_t> grid, std::size_t trial);

ExperimentResult RunMonteCarlo(const ExperimentConfig& config);

struct SweepPoint {
  std::string value;
  ExperimentResult result;
};
std::vector<SweepPoint> RunSweep(const ExperimentConfig& base, const SweepSpec& sweep);

// Output files. axis_value is empty for a plain run.
void WriteMetricsHeader(std::ostream& out);
void WriteMetrics(std::ostream& out, const ExperimentResult& result,
                  const std::string& axis_value);
void WriteTrialsJsonl(std::ostream& out, const ExperimentResult& result,
                      const std::string& axis_value);

// Writes metrics.csv, trials.jsonl and config.echo into dir.
void WriteRunOutputs(const std::filesystem::path& dir, const ConfigFile& config,
                     const ExperimentResult& result);
void WriteSweepOutputs(const std::filesystem::path& dir, const ConfigFile& config,
                       const std::vector<SweepPoint>& points);

}  // namespace privagg

#endif  // PRIVAGG_HARNESS_HPP_
