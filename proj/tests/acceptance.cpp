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

// Acceptance suite. Prints one PASS/FAIL line per criterion; exits non-zero
// when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "privagg/format.hpp"
#include "privagg/harness.hpp"
#include "privagg/operators.hpp"
#include "privagg/privacy_metrics.hpp"

namespace privagg {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// n = 15 RGG, standard-normal inputs, no corruption, eavesdropping on.
ExperimentConfig Base(OperatorKind kind, std::size_t trials) {
  ExperimentConfig cfg;
  cfg.name = "acceptance";
  cfg.topology = {TopologyKind::kRgg, 15, 0.4, 7};
  cfg.op.kind = kind;
  cfg.engine.c = 5;
  cfg.engine.t_max = 5000;
  cfg.init.mu_z = 500;
  cfg.trials = trials;
  cfg.master_seed = 2026;
  cfg.metrics.nmi = false;
  cfg.metrics.grid_points = 10;
  return cfg;
}

std::size_t MedianIndex(std::size_t n) { return (n - 1) / 2; }

Verdict Exactness() {
  struct Case {
    std::string label;
    OperatorSpec op;
    std::size_t t_max;
  };
  const std::vector<Case> cases{{"max", {OperatorKind::kMax}, 5000},
                                {"min", {OperatorKind::kMin}, 5000},
                                {"median", {OperatorKind::kMedian}, 5000},
                                {"quantile", {OperatorKind::kQuantile, 1, 1e-3, 2.0 / 7.0}, 15000},
                                {"average", {OperatorKind::kAverage}, 5000}};
  Verdict v{true, ""};
  for (const Case& c : cases) {
    ExperimentConfig cfg = Base(c.op.kind, 1);
    cfg.op = c.op;
    cfg.engine.t_max = c.t_max;
    auto start = Clock::now();
    const ExperimentResult one = RunMonteCarlo(cfg);
    const double one_s = Seconds(start);
    cfg.trials = 1000;
    start = Clock::now();
    const ExperimentResult all = RunMonteCarlo(cfg);
    const double all_s = Seconds(start);
    double worst = one.trials[0].final_mse;
    for (const auto& t : all.trials) worst = std::max(worst, t.diverged ? INFINITY : t.final_mse);
    const bool ok = worst < 1e-6 && one_s < 5.0 && all_s < 120.0;
    v.pass = v.pass && ok;
    v.detail += c.label + ": worst_mse=" + FormatDouble(worst) + " t1=" + FormatDouble(one_s) +
                "s t1000=" + FormatDouble(all_s) + "s; ";
  }
  return v;
}

Verdict TopK() {
  ExperimentConfig cfg = Base(OperatorKind::kTopK, 1000);
  cfg.op.k = 3;
  cfg.op.eps = 1e-3;
  const ExperimentResult r = RunMonteCarlo(cfg);
  std::size_t good = 0;
  for (const auto& t : r.trials) {
    bool ok = !t.diverged && t.estimate.size() == 3 && t.reference.size() == 3;
    for (std::size_t k = 0; ok && k < 3; ++k) ok = std::abs(t.estimate[k] - t.reference[k]) <= 1e-3;
    good += ok;
  }
  const double rate = static_cast<double>(good) / static_cast<double>(r.trials.size());
  return {rate >= 0.99, "recovered " + std::to_string(good) + "/" + std::to_string(r.trials.size())};
}

double SortTrimMean(std::vector<double> s, std::size_t k) {
  std::sort(s.begin(), s.end());
  double sum = 0;
  for (std::size_t j = k; j + k < s.size(); ++j) sum += s[j];
  return sum / static_cast<double>(s.size() - 2 * k);
}

Verdict TrimmedMean() {
  ExperimentConfig cfg = Base(OperatorKind::kTrimmedMean, 100);
  cfg.op.k = 2;
  const ExperimentResult r = RunMonteCarlo(cfg);
  double worst_run = 0;
  for (const auto& t : r.trials) {
    const double oracle = SortTrimMean(t.relabeled.s, 2);
    worst_run = std::max(worst_run, t.diverged ? INFINITY : std::abs(t.estimate[0] - oracle));
  }
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 10.0);
  double worst_combine = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const std::size_t n = 3 + rng() % 40;
    const std::size_t k = 1 + rng() % ((n - 1) / 2);
    std::vector<double> s(n);
    for (double& x : s) x = g(rng);
    std::vector<double> sorted = s;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> extrema;
    for (std::size_t j = 0; j < k; ++j) extrema.emplace_back(sorted[n - 1 - j], sorted[j]);
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n);
    worst_combine = std::max(worst_combine, std::abs(TrimmedMeanCombine(mean, n, extrema) -
                                                     SortTrimMean(s, k)));
  }
  return {worst_run <= 5 * 1e-3 && worst_combine <= 1e-9,
          "run max_err=" + FormatDouble(worst_run) + " combine max_err=" + FormatDouble(worst_combine)};
}

Verdict IndicatorConsistency() {
  const ExperimentResult r = RunMonteCarlo(Base(OperatorKind::kMax, 1000));
  std::size_t pairs = 0, agree = 0, matched_iff = 0, y_ones = 0;
  for (const auto& t : r.trials) {
    if (!t.indicators) continue;
    for (std::size_t i = 0; i < t.matched_at.size(); ++i) {
      ++pairs;
      agree += t.indicators_agree;
      y_ones += t.indicators->y[i];
      matched_iff += t.matched_at[i].has_value() == (t.indicators->y[i] == 0);
    }
  }
  const std::size_t expected = r.trials.size() * 15;
  return {pairs == expected && agree == pairs && matched_iff == pairs,
          "pairs=" + std::to_string(pairs) + " agree=" + std::to_string(agree) +
              " matched_iff_not_y=" + std::to_string(matched_iff) + " y=1 pairs=" + std::to_string(y_ones)};
}

struct SweepStats {
  double c;
  double max_nonmax_leak;
  double mean_nonmax_leak;
  double max_leak;
  double max_nmi;
  double mse;
};

std::vector<SweepStats> CSweep() {
  std::vector<SweepStats> out;
  for (double c : {1.0, 5.0, 25.0, 125.0}) {
    ExperimentConfig cfg = Base(OperatorKind::kMax, 1000);
    cfg.engine.c = c;
    cfg.init.mu_z = 100 * c;
    cfg.init.sigma_z = 1;
    cfg.engine.t_max = static_cast<std::size_t>(1000 * c);
    cfg.metrics.nmi = true;
    cfg.metrics.grid_points = 4;
    const ExperimentResult r = RunMonteCarlo(cfg);
    SweepStats st{c, 0, 0, r.nodes[0].leakage_probability, r.nodes[0].nmi.back().nmi, r.mean_final_mse};
    for (std::size_t i = 1; i < r.nodes.size(); ++i) {
      st.max_nonmax_leak = std::max(st.max_nonmax_leak, r.nodes[i].leakage_probability);
      st.mean_nonmax_leak += r.nodes[i].leakage_probability / static_cast<double>(r.nodes.size() - 1);
    }
    out.push_back(st);
  }
  return out;
}

Verdict ZeroMatchingRegime() {
  Verdict v{false, ""};
  for (const SweepStats& st : CSweep()) {
    v.pass = v.pass || (st.max_nonmax_leak == 0.0 && st.max_leak == 1.0 && st.max_nmi >= 0.95);
    v.detail += "c=" + FormatDouble(st.c) + ": max_nonmax_leak=" + FormatDouble(st.max_nonmax_leak) +
                " maximizer_leak=" + FormatDouble(st.max_leak) + " maximizer_nmi=" +
                FormatDouble(st.max_nmi) + "; ";
  }
  return v;
}

Verdict MonotoneTrend() {
  const auto sweep = CSweep();
  std::size_t inversions = 0;
  double worst = 0;
  std::string detail = "mean_nonmax_leak:";
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    detail += " " + FormatDouble(sweep[k].mean_nonmax_leak);
    if (k > 0 && sweep[k].mean_nonmax_leak > sweep[k - 1].mean_nonmax_leak) {
      ++inversions;
      worst = std::max(worst, sweep[k].mean_nonmax_leak - sweep[k - 1].mean_nonmax_leak);
    }
  }
  return {inversions == 0 || (inversions == 1 && worst <= 0.01), detail};
}

double MeanLeakExcept(const ExperimentResult& r, std::size_t target) {
  double sum = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    if (i != target) sum += r.nodes[i].leakage_probability;
  }
  return sum / static_cast<double>(r.nodes.size() - 1);
}

Verdict TopologyEffect() {
  Verdict v{true, ""};
  for (OperatorKind kind : {OperatorKind::kMax, OperatorKind::kMedian}) {
    double leak[2];
    int slot = 0;
    for (TopologyKind topo : {TopologyKind::kComplete, TopologyKind::kRing}) {
      ExperimentConfig cfg = Base(kind, 1000);
      cfg.topology.kind = topo;
      cfg.init.mu_z = 50;
      cfg.engine.t_max = 6000;
      const ExperimentResult r = RunMonteCarlo(cfg);
      leak[slot++] = MeanLeakExcept(r, kind == OperatorKind::kMax ? 0 : MedianIndex(15));
    }
    v.pass = v.pass && leak[0] <= leak[1];
    v.detail += OperatorSpec{kind}.Name() + ": complete=" + FormatDouble(leak[0]) +
                " ring=" + FormatDouble(leak[1]) + "; ";
  }
  return v;
}

Verdict WindowWidths() {
  double worst = 0;
  std::size_t checked = 0;
  for (OperatorKind kind : {OperatorKind::kMedian, OperatorKind::kQuantile}) {
    ExperimentConfig cfg = Base(kind, 1000);
    cfg.op.q = 2.0 / 7.0;
    const Graph graph = BuildGraph(cfg);
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
      const auto s = RelabelByOrderStats(SampleInputs(cfg, TrialSeed(cfg.master_seed, trial, 0))).s;
      InitSpec init = cfg.init;
      init.seed = TrialSeed(cfg.master_seed, trial, 1);
      const ConsensusRun run = RunConsensus(graph, s, cfg.op, init, cfg.engine);
      const Transcript& tr = run.transcript;
      for (std::size_t t = 0; t < tr.rounds; ++t) {
        for (NodeId i = 0; i < 15; ++i) {
          const std::size_t d = graph.degree(i);
          const double sum = tr.sum_hist[t * 15 + i];
          const Window w = kind == OperatorKind::kMedian ? MedianWindow(d, sum, cfg.engine.c)
                                                        : QuantileWindow(d, sum, cfg.engine.c, cfg.op.q);
          const double want = (kind == OperatorKind::kMedian ? 2.0 : 1.0) / (cfg.engine.c * static_cast<double>(d));
          worst = std::max(worst, std::abs((w.hi - w.lo) - want));
          ++checked;
        }
      }
    }
  }
  return {worst <= 1e-12, "checked=" + std::to_string(checked) + " max_dev=" + FormatDouble(worst)};
}

Verdict MedianOneSided() {
  const std::size_t med = MedianIndex(15);
  ExperimentConfig above = Base(OperatorKind::kMedian, 1000);
  above.init.direction = InitDirection::kFromAbove;
  const ExperimentResult a = RunMonteCarlo(above);
  std::size_t in_vp1 = 0, below = 0, violations = 0;
  for (const auto& t : a.trials) {
    for (std::size_t i = med + 1; i < 15; ++i) {
      ++below;
      if (!t.indicators || !t.indicators->y[i]) continue;
      ++in_vp1;
      violations += t.matched_at[i].has_value();
    }
  }

  ExperimentConfig bimodal = Base(OperatorKind::kMedian, 1000);
  bimodal.s_distribution = SDistribution::kBimodal;
  bimodal.bimodal = {5.0, 1.0};
  bimodal.init = {InitKind::kZero, 0.0, 0.0, 0, InitDirection::kAuto, {}};
  bimodal.metrics.nmi = true;
  bimodal.metrics.grid_points = 4;
  const ExperimentResult b = RunMonteCarlo(bimodal);
  std::size_t clean = 0;
  for (const auto& t : b.trials) {
    bool ok = !t.diverged;
    for (std::size_t i = 0; i < 15; ++i) ok = ok && (i == med || !t.matched_at[i]);
    clean += ok;
  }
  const double clean_rate = static_cast<double>(clean) / static_cast<double>(b.trials.size());
  const double med_nmi = b.nodes[med].nmi.back().nmi;
  return {a.trials.size() == 1000 && violations == 0 && clean_rate >= 0.99 && med_nmi >= 0.95,
          "from-above: below-median node-trials=" + std::to_string(below) + " in_Vp1=" +
              std::to_string(in_vp1) + " matched_in_Vp1=" + std::to_string(violations) +
              "; bimodal: clean_trials=" + FormatDouble(clean_rate) + " median_nmi=" + FormatDouble(med_nmi)};
}

Verdict DpTradeoff() {
  Verdict v{true, ""};
  ExperimentConfig proposed = Base(OperatorKind::kMax, 1000);
  const double proposed_mse = RunMonteCarlo(proposed).mean_final_mse;
  v.pass = proposed_mse < 1e-6;
  v.detail = "proposed=" + FormatDouble(proposed_mse) + "; ";
  for (NoiseKind noise : {NoiseKind::kGaussian, NoiseKind::kLaplacian}) {
    std::vector<double> mse;
    for (double sigma : {0.05, 0.1, 0.2}) {
      ExperimentConfig cfg = Base(OperatorKind::kMax, 1000);
      cfg.init = {InitKind::kZero, 0.0, 0.0, 0, InitDirection::kAuto, {}};
      cfg.dp = DpBaseline{noise, sigma};
      mse.push_back(RunMonteCarlo(cfg).mean_final_mse);
    }
    v.pass = v.pass && mse[0] < mse[1] && mse[1] < mse[2] && mse[1] > 1e-4;
    v.detail += NoiseKindName(noise) + ":";
    for (double m : mse) v.detail += " " + FormatDouble(m);
    v.detail += "; ";
  }
  return v;
}

Verdict MiCalibration() {
  const auto start = Clock::now();
  const auto checks = RunMiSelfTest(20240601);
  const double elapsed = Seconds(start);
  Verdict v{elapsed < 30.0, ""};
  for (const auto& c : checks) {
    v.pass = v.pass && c.pass;
    v.detail += c.name + "=" + FormatDouble(c.value) + (c.pass ? " ok; " : " FAIL; ");
  }
  v.detail += "elapsed=" + FormatDouble(elapsed) + "s";
  return v;
}

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Verdict Determinism() {
  ConfigFile f;
  f.experiment = Base(OperatorKind::kMedian, 100);
  f.experiment.threads = 3;
  f.experiment.metrics.nmi = true;
  f.experiment.corruption = {{3}, true};
  ConfigFile sweep;
  sweep.experiment = Base(OperatorKind::kMax, 60);
  sweep.experiment.init = {InitKind::kZero, 0.0, 0.0, 0, InitDirection::kAuto, {}};
  sweep.experiment.dp = DpBaseline{NoiseKind::kLaplacian, 0.1};
  sweep.experiment.threads = 2;
  sweep.sweep = SweepSpec{"sigma_s", {"0.05", "0.2"}};

  const auto root = std::filesystem::temp_directory_path() / "privagg_acceptance_determinism";
  std::filesystem::remove_all(root);
  for (const char* rep : {"a", "b"}) {
    std::filesystem::create_directories(root / rep / "run");
    std::filesystem::create_directories(root / rep / "sweep");
    WriteRunOutputs(root / rep / "run", f, RunMonteCarlo(f.experiment));
    WriteSweepOutputs(root / rep / "sweep", sweep, RunSweep(sweep.experiment, *sweep.sweep));
  }
  Verdict v{true, ""};
  for (const char* kind : {"run", "sweep"}) {
    for (const char* file : {"metrics.csv", "trials.jsonl"}) {
      const std::string a = Slurp(root / "a" / kind / file);
      const bool same = !a.empty() && a == Slurp(root / "b" / kind / file);
      v.pass = v.pass && same;
      v.detail += std::string(kind) + "/" + file + (same ? " identical; " : " DIFFERS; ");
    }
  }
  std::filesystem::remove_all(root);
  return v;
}

struct Criterion {
  int id;
  std::string title;
  std::function<Verdict()> run;
};

}  // namespace
}  // namespace privagg

int main(int argc, char** argv) {
  using namespace privagg;
  const std::vector<Criterion> all{
      {1, "exactness of max/min/median/quantile/average", Exactness},
      {2, "top-K recovery within eps", TopK},
      {3, "trimmed mean and combine", TrimmedMean},
      {4, "inferred indicators match internal condition", IndicatorConsistency},
      {5, "zero matching events for non-maximizers", ZeroMatchingRegime},
      {6, "leakage non-increasing in c", MonotoneTrend},
      {7, "complete graph leaks no more than ring", TopologyEffect},
      {8, "median and quantile window widths", WindowWidths},
      {9, "median one-sided protection", MedianOneSided},
      {10, "DP baseline MSE trade-off", DpTradeoff},
      {11, "MI estimator calibration", MiCalibration},
      {12, "byte-identical outputs", Determinism},
  };

  CLI::App app{"privagg acceptance suite"};
  std::vector<int> selected;
  app.add_option("-c,--criterion", selected, "Criterion ids to run (default all)")
      ->check(CLI::Range(1, 12));
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    const auto start = Clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title
              << ") [" << FormatDouble(Seconds(start)) << "s]: " << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
