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

// Command-line driver: run, sweep, oracle, mi-selftest.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "privagg/error.hpp"
#include "privagg/format.hpp"
#include "privagg/harness.hpp"
#include "privagg/operators.hpp"
#include "privagg/privacy_metrics.hpp"
#include "privagg/simd/kernels.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

int ExitCodeFor(const privagg::Error& e) {
  switch (e.code()) {
    case privagg::ErrorCode::kConfig:
    case privagg::ErrorCode::kInvalidSpec:
    case privagg::ErrorCode::kOutOfRange:
    case privagg::ErrorCode::kRggUnconnectable:
      return kExitConfig;
    default:
      return kExitFailure;
  }
}

void Summarize(const privagg::ExperimentResult& r, const std::string& label) {
  std::cerr << label << ": " << r.trials.size() << " trials, " << r.diverged
            << " diverged, final mse " << privagg::FormatDouble(r.mean_final_mse) << '\n';
}

struct Overrides {
  std::size_t threads = 0;
  std::size_t trials = 0;
};

void Apply(privagg::ConfigFile& cfg, const Overrides& o) {
  if (o.threads) cfg.experiment.threads = o.threads;
  if (o.trials) cfg.experiment.trials = o.trials;
  cfg.experiment.Validate();
}

int Run(const std::string& path, const std::string& out_dir, const Overrides& o) {
  privagg::ConfigFile cfg = privagg::LoadConfig(path);
  Apply(cfg, o);
  const auto result = privagg::RunMonteCarlo(cfg.experiment);
  privagg::WriteRunOutputs(out_dir, cfg, result);
  Summarize(result, cfg.experiment.name);
  return result.divergence_exceeded() ? kExitDivergence : kExitOk;
}

int Sweep(const std::string& path, const std::string& out_dir, const std::string& axis,
          const std::vector<std::string>& values, const Overrides& o) {
  privagg::ConfigFile cfg = privagg::LoadConfig(path);
  Apply(cfg, o);
  if (!cfg.sweep) cfg.sweep = privagg::SweepSpec{};
  if (!axis.empty()) cfg.sweep->axis = axis;
  if (!values.empty()) cfg.sweep->values = values;
  if (cfg.sweep->axis.empty()) throw privagg::Error(privagg::ErrorCode::kConfig, "no sweep axis");
  const auto points = privagg::RunSweep(cfg.experiment, *cfg.sweep);
  privagg::WriteSweepOutputs(out_dir, cfg, points);
  bool exceeded = false;
  for (const auto& p : points) {
    Summarize(p.result, cfg.sweep->axis + "=" + p.value);
    exceeded = exceeded || p.result.divergence_exceeded();
  }
  return exceeded ? kExitDivergence : kExitOk;
}

int Oracle(const std::string& op_name, std::size_t k, double q, const std::vector<double>& values) {
  privagg::OperatorSpec spec;
  spec.kind = privagg::ParseOperatorKind(op_name);
  spec.k = k;
  spec.q = q;
  spec.Validate(values.size());
  const auto agg = privagg::ReferenceAggregate(spec, values);
  for (std::size_t i = 0; i < agg.size(); ++i) {
    std::cout << (i ? " " : "") << privagg::FormatDouble(agg[i]);
  }
  std::cout << '\n';
  return kExitOk;
}

int MiSelfTest(std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const auto checks = privagg::RunMiSelfTest(seed);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool ok = true;
  std::cout << "kernels: " << privagg::simd::IsaName(privagg::simd::ActiveKernels().isa) << '\n';
  for (const auto& c : checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value="
              << privagg::FormatDouble(c.value) << " target=" << privagg::FormatDouble(c.target)
              << " tol=" << privagg::FormatDouble(c.tolerance) << '\n';
    ok = ok && c.pass;
  }
  std::cout << "elapsed_s=" << secs << '\n';
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving distributed aggregation experiments"};
  app.require_subcommand(1);

  std::string config, out_dir = "out", axis, op_name = "max";
  std::vector<std::string> values;
  std::vector<double> numbers;
  Overrides over;
  std::size_t k = 1;
  double q = 0.5;
  std::uint64_t seed = 20240601;

  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", config, "Config file")->required();
  run->add_option("-o,--out", out_dir, "Output directory");
  run->add_option("--threads", over.threads, "Worker threads");
  run->add_option("--trials", over.trials, "Override the trial count");

  auto* sweep = app.add_subcommand("sweep", "Sweep one parameter");
  sweep->add_option("config", config, "Config file")->required();
  sweep->add_option("-o,--out", out_dir, "Output directory");
  sweep->add_option("--axis", axis, "c, mu_z, sigma_s, topology, q or K");
  sweep->add_option("--values", values, "Axis values")->delimiter(',');
  sweep->add_option("--threads", over.threads, "Worker threads");
  sweep->add_option("--trials", over.trials, "Override the trial count");

  auto* oracle = app.add_subcommand("oracle", "Print the reference aggregate of a vector");
  oracle->add_option("--op", op_name, "max, min, topk, median, quantile, trimmed_mean, average");
  oracle->add_option("-k", k, "K for topk and trimmed_mean");
  oracle->add_option("-q", q, "Quantile level");
  oracle->add_option("values", numbers, "Input values")->required();

  auto* selftest = app.add_subcommand("mi-selftest", "Calibrate the MI estimators");
  selftest->add_option("--seed", seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return Run(config, out_dir, over);
    if (*sweep) return Sweep(config, out_dir, axis, values, over);
    if (*oracle) return Oracle(op_name, k, q, numbers);
    if (*selftest) return MiSelfTest(seed);
  } catch (const privagg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ExitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
