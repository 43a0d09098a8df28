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

#ifndef PRIVAGG_PRIVACY_METRICS_HPP_
#define PRIVAGG_PRIVACY_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "privagg/adversary.hpp"
#include "privagg/operators.hpp"

namespace privagg {

// Named Monte Carlo columns, one entry per trial.
class SampleBatch {
 public:
  using Column = std::variant<std::vector<double>, std::vector<std::int64_t>>;

  void Add(std::string name, std::vector<double> values);
  void Add(std::string name, std::vector<std::int64_t> values);

  std::size_t trials() const { return trials_; }
  bool has(std::string_view name) const;
  std::span<const double> continuous(std::string_view name) const;
  std::span<const std::int64_t> discrete(std::string_view name) const;

 private:
  void Check(const std::string& name, std::size_t size, bool finite);
  std::map<std::string, Column, std::less<>> columns_;
  std::size_t trials_ = 0;
};

struct MIEstimate {
  double value = 0.0;  // clamped at zero
  double raw = 0.0;
  std::size_t k = 0;
  std::size_t n_samples = 0;
  // Set when one column copies the other; value is then the self-MI.
  bool deterministic = false;
};

struct KnnOptions {
  std::size_t k = 3;
  // Relative jitter added to every column to break ties.
  double jitter = 1e-10;
  // Columns equal within this tolerance count as copies.
  double match_tol = 1e-9;
  std::uint64_t seed = 0x5eed;
};

// Sample-major matrix: rows are trials, dims columns each.
struct Samples {
  std::vector<double> values;
  std::size_t dims = 1;

  static Samples FromColumn(std::span<const double> col);
  std::size_t size() const { return dims == 0 ? 0 : values.size() / dims; }
};

// Kraskov type-1 estimate with max-norm neighbourhoods, in nats.
MIEstimate EstimateMiKnn(std::span<const double> x, std::span<const double> y,
                         const KnnOptions& opts = {});
MIEstimate EstimateMiKnn(const Samples& x, const Samples& y, const KnnOptions& opts = {});

// Plug-in estimate from the empirical joint distribution.
MIEstimate EstimateMiDiscrete(std::span<const std::int64_t> x, std::span<const std::int64_t> y);
double EntropyDiscrete(std::span<const std::int64_t> x);

// Kozachenko-Leonenko differential entropy (max-norm), in nats.
double EntropyKnn(const Samples& x, const KnnOptions& opts = {});

// I(X; D) for continuous X and discrete D: H(X) - sum_d p(d) H(X | D=d).
// Classes with at most k samples contribute H(X).
MIEstimate EstimateMiMixed(const Samples& x, std::span<const std::int64_t> d,
                           const KnnOptions& opts = {});

enum class SelfMiMode { kKsgSelf, kFixed };

std::string_view SelfMiModeName(SelfMiMode mode);
SelfMiMode ParseSelfMiMode(std::string_view text);

struct NmiOptions {
  KnnOptions knn;
  SelfMiMode mode = SelfMiMode::kKsgSelf;
  // Denominator in nats for SelfMiMode::kFixed.
  double fixed_self_mi = 1.0;
};

// The NMI denominator I(S; S) under the chosen mode. ksg-self estimates
// I(S; S + zeta), zeta uniform of magnitude match_tol.
double SelfMi(std::span<const double> s, const NmiOptions& opts);

struct NmiPoint {
  std::size_t t = 0;
  double nmi = 0.0;  // clipped to [0, 1]
  double mi_nats = 0.0;
  std::size_t k = 0;
  std::size_t n_samples = 0;
};

// NMI of S against X^(t) for every listed round. x_by_round[r] holds X^(t_r)
// over the same trials as s.
std::vector<NmiPoint> NmiCurve(std::span<const double> s,
                               const std::vector<std::vector<double>>& x_by_round,
                               std::span<const std::size_t> rounds, const NmiOptions& opts);

// Fraction of trials with a matching event.
double LeakageProbability(std::span<const std::optional<std::size_t>> matched_at);

// Monte Carlo estimate of I(S_i; ideal-world side information): the discrete
// membership pattern D plus the continuous part C (aggregate, corrupted
// inputs and, for sums, honest component sums), as
// I(S_i; D) + sum_d p(d) I(S_i; C | D=d).
MIEstimate IdealBoundEstimate(std::span<const double> s_i, std::span<const IdealSideInfo> infos,
                              NodeId i, const CorruptionSpec& corruption, const OperatorSpec& op,
                              const KnnOptions& opts = {});

// Estimator calibration against closed-form MI values.
struct CalibrationCheck {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};
std::vector<CalibrationCheck> RunMiSelfTest(std::uint64_t seed);

void WriteNmiCsvHeader(std::ostream& out);
void WriteNmiCsvRows(std::ostream& out, std::string_view trial_set, NodeId node,
                     std::span<const NmiPoint> points, SelfMiMode mode);

}  // namespace privagg

#endif  // PRIVAGG_PRIVACY_METRICS_HPP_
