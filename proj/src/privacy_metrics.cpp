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

#include "privagg/privacy_metrics.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "privagg/error.hpp"
#include "privagg/format.hpp"
#include "privagg/simd/kernels.hpp"

namespace privagg {

void SampleBatch::Check(const std::string& name, std::size_t size, bool finite) {
  if (columns_.count(name)) throw Error(ErrorCode::kInvalidSpec, "duplicate column " + name);
  if (size < 2) throw Error(ErrorCode::kInsufficientTrials, "columns need at least 2 samples");
  if (!columns_.empty() && size != trials_) {
    throw Error(ErrorCode::kInvalidSpec, "column " + name + " has a different length");
  }
  if (!finite) throw Error(ErrorCode::kInvalidSpec, "column " + name + " is not finite");
  trials_ = size;
}

void SampleBatch::Add(std::string name, std::vector<double> values) {
  const bool finite =
      std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  Check(name, values.size(), finite);
  columns_.emplace(std::move(name), std::move(values));
}

void SampleBatch::Add(std::string name, std::vector<std::int64_t> values) {
  Check(name, values.size(), true);
  columns_.emplace(std::move(name), std::move(values));
}

bool SampleBatch::has(std::string_view name) const { return columns_.find(name) != columns_.end(); }

std::span<const double> SampleBatch::continuous(std::string_view name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw Error(ErrorCode::kInvalidSpec, "no column " + std::string(name));
  const auto* col = std::get_if<std::vector<double>>(&it->second);
  if (!col) throw Error(ErrorCode::kInvalidSpec, std::string(name) + " is discrete");
  return *col;
}

std::span<const std::int64_t> SampleBatch::discrete(std::string_view name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw Error(ErrorCode::kInvalidSpec, "no column " + std::string(name));
  const auto* col = std::get_if<std::vector<std::int64_t>>(&it->second);
  if (!col) throw Error(ErrorCode::kInvalidSpec, std::string(name) + " is continuous");
  return *col;
}

Samples Samples::FromColumn(std::span<const double> col) {
  return Samples{std::vector<double>(col.begin(), col.end()), 1};
}

namespace {

using Columns = std::vector<std::vector<double>>;

Columns ToColumns(const Samples& s) {
  const std::size_t n = s.size();
  Columns cols(s.dims, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t d = 0; d < s.dims; ++d) cols[d][r] = s.values[r * s.dims + d];
  }
  return cols;
}

double Spread(const std::vector<double>& col) {
  const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
  return *hi - *lo;
}

double StdDev(const std::vector<double>& col) {
  const double n = static_cast<double>(col.size());
  const double mean = std::accumulate(col.begin(), col.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : col) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

// Uniform noise of size jitter * stddev, one stream per column.
void AddJitter(Columns& cols, double jitter, std::uint64_t seed, std::uint64_t stream) {
  for (std::size_t d = 0; d < cols.size(); ++d) {
    const double scale = jitter * StdDev(cols[d]);
    if (scale == 0.0) continue;
    std::seed_seq seq{seed, stream, static_cast<std::uint64_t>(d)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : cols[d]) v += scale * u(rng);
  }
}

bool AllConstant(const Columns& cols) {
  return std::all_of(cols.begin(), cols.end(),
                     [](const std::vector<double>& c) { return Spread(c) == 0.0; });
}

bool Copies(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (!(std::abs(a[r] - b[r]) <= tol)) return false;
  }
  return true;
}

class DigammaTable {
 public:
  explicit DigammaTable(std::size_t n) : psi_(n + 2) {
    for (std::size_t m = 1; m < psi_.size(); ++m) {
      psi_[m] = boost::math::digamma(static_cast<double>(m));
    }
  }
  double operator()(std::size_t m) const { return psi_[m]; }

 private:
  std::vector<double> psi_;
};

// Max-norm distances from sample i to every sample over all columns.
void Distances(const simd::Kernels& kern, const Columns& cols, std::size_t i, double* out) {
  const std::size_t n = cols.front().size();
  kern.abs_diff(cols[0].data(), cols[0][i], out, n);
  for (std::size_t d = 1; d < cols.size(); ++d) kern.abs_diff_max(cols[d].data(), cols[d][i], out, n);
}

// Distance to the k-th nearest other sample; clobbers dist.
double KthDistance(std::vector<double>& dist, std::size_t i, std::size_t k) {
  dist[i] = std::numeric_limits<double>::infinity();
  std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
  return dist[k - 1];
}

// Kraskov type 1 on jittered columns.
double KsgCore(const Columns& xs, const Columns& ys, std::size_t k) {
  const simd::Kernels& kern = simd::ActiveKernels();
  const std::size_t n = xs.front().size();
  const DigammaTable psi(n);
  std::vector<double> ax(n), ay(n), joint(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Distances(kern, xs, i, ax.data());
    Distances(kern, ys, i, ay.data());
    kern.elementwise_max(ax.data(), ay.data(), joint.data(), n);
    const double eps = KthDistance(joint, i, k);
    // Both counts include i itself when eps > 0.
    const std::size_t cx = kern.count_below(ax.data(), n, eps);
    const std::size_t cy = kern.count_below(ay.data(), n, eps);
    const std::size_t nx = cx > 0 ? cx - 1 : 0;
    const std::size_t ny = cy > 0 ? cy - 1 : 0;
    acc += psi(nx + 1) + psi(ny + 1);
  }
  return psi(k) + psi(n) - acc / static_cast<double>(n);
}

double EntropyCore(const Columns& xs, std::size_t k) {
  const simd::Kernels& kern = simd::ActiveKernels();
  const std::size_t n = xs.front().size();
  std::vector<double> dist(n);
  double log_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Distances(kern, xs, i, dist.data());
    log_sum += std::log(KthDistance(dist, i, k));
  }
  const double d = static_cast<double>(xs.size());
  return boost::math::digamma(static_cast<double>(n)) - boost::math::digamma(static_cast<double>(k)) +
         d * std::log(2.0) + d * log_sum / static_cast<double>(n);
}

void CheckSamples(std::size_t n, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::kInvalidSpec, "k must be >= 1");
  if (n <= k) {
    throw Error(ErrorCode::kInsufficientTrials,
                "need more than k=" + std::to_string(k) + " samples, got " + std::to_string(n));
  }
}

MIEstimate Finish(double raw, std::size_t k, std::size_t n, bool deterministic = false) {
  return MIEstimate{std::max(raw, 0.0), raw, k, n, deterministic};
}

// I(S; S + zeta) on the jittered column.
double KsgSelf(std::vector<double> s, const KnnOptions& opts) {
  Columns xs{std::move(s)};
  AddJitter(xs, opts.jitter, opts.seed, 1);
  Columns ys = xs;
  std::seed_seq seq{opts.seed, std::uint64_t{2}};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(-opts.match_tol, opts.match_tol);
  for (double& v : ys[0]) v += u(rng);
  return KsgCore(xs, ys, opts.k);
}

std::vector<double> Subset(std::span<const double> col, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(col[r]);
  return out;
}

}  // namespace

MIEstimate EstimateMiKnn(std::span<const double> x, std::span<const double> y,
                         const KnnOptions& opts) {
  return EstimateMiKnn(Samples::FromColumn(x), Samples::FromColumn(y), opts);
}

MIEstimate EstimateMiKnn(const Samples& x, const Samples& y, const KnnOptions& opts) {
  const std::size_t n = x.size();
  if (x.dims == 0 || y.dims == 0 || x.values.size() != n * x.dims ||
      y.values.size() != y.size() * y.dims || y.size() != n) {
    throw Error(ErrorCode::kInvalidSpec, "sample matrices disagree in length");
  }
  CheckSamples(n, opts.k);
  Columns xs = ToColumns(x);
  Columns ys = ToColumns(y);
  for (const Columns* cols : {&xs, &ys}) {
    for (const auto& c : *cols) {
      if (!std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); })) {
        throw Error(ErrorCode::kInvalidSpec, "non-finite sample");
      }
    }
  }
  if (AllConstant(xs) || AllConstant(ys)) return Finish(0.0, opts.k, n);
  // One side copying the other (a scalar column inside the other side).
  for (const auto& [a, b] : {std::pair{&xs, &ys}, std::pair{&ys, &xs}}) {
    if (a->size() != 1) continue;
    for (const auto& col : *b) {
      if (Copies((*a)[0], col, opts.match_tol)) {
        return Finish(KsgSelf((*a)[0], opts), opts.k, n, true);
      }
    }
  }
  AddJitter(xs, opts.jitter, opts.seed, 3);
  AddJitter(ys, opts.jitter, opts.seed, 4);
  return Finish(KsgCore(xs, ys, opts.k), opts.k, n);
}

double EntropyDiscrete(std::span<const std::int64_t> x) {
  std::map<std::int64_t, std::size_t> counts;
  for (auto v : x) ++counts[v];
  const double n = static_cast<double>(x.size());
  double h = 0.0;
  for (const auto& [v, c] : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

MIEstimate EstimateMiDiscrete(std::span<const std::int64_t> x, std::span<const std::int64_t> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidSpec, "columns disagree in length");
  if (x.empty()) throw Error(ErrorCode::kInsufficientTrials, "empty columns");
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> joint;
  std::map<std::int64_t, std::size_t> px, py;
  for (std::size_t r = 0; r < x.size(); ++r) {
    ++joint[{x[r], y[r]}];
    ++px[x[r]];
    ++py[y[r]];
  }
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const double pxy = static_cast<double>(c) / n;
    mi += pxy * std::log(pxy * n * n / (static_cast<double>(px[key.first]) *
                                        static_cast<double>(py[key.second])));
  }
  return Finish(mi, 0, x.size());
}

double EntropyKnn(const Samples& x, const KnnOptions& opts) {
  CheckSamples(x.size(), opts.k);
  Columns xs = ToColumns(x);
  AddJitter(xs, opts.jitter, opts.seed, 5);
  return EntropyCore(xs, opts.k);
}

MIEstimate EstimateMiMixed(const Samples& x, std::span<const std::int64_t> d,
                           const KnnOptions& opts) {
  const std::size_t n = x.size();
  if (d.size() != n) throw Error(ErrorCode::kInvalidSpec, "columns disagree in length");
  CheckSamples(n, opts.k);
  std::map<std::int64_t, std::vector<std::size_t>> classes;
  for (std::size_t r = 0; r < n; ++r) classes[d[r]].push_back(r);
  if (classes.size() == 1) return Finish(0.0, opts.k, n);
  const double h_x = EntropyKnn(x, opts);
  double h_cond = 0.0;
  for (const auto& [label, rows] : classes) {
    const double p = static_cast<double>(rows.size()) / static_cast<double>(n);
    if (rows.size() <= opts.k) {
      h_cond += p * h_x;
      continue;
    }
    Samples sub;
    sub.dims = x.dims;
    for (std::size_t r : rows) {
      sub.values.insert(sub.values.end(), x.values.begin() + r * x.dims,
                        x.values.begin() + (r + 1) * x.dims);
    }
    h_cond += p * EntropyKnn(sub, opts);
  }
  return Finish(h_x - h_cond, opts.k, n);
}

std::string_view SelfMiModeName(SelfMiMode mode) {
  return mode == SelfMiMode::kKsgSelf ? "ksg-self" : "fixed";
}

SelfMiMode ParseSelfMiMode(std::string_view text) {
  if (text == "ksg-self") return SelfMiMode::kKsgSelf;
  if (text == "fixed") return SelfMiMode::kFixed;
  throw Error(ErrorCode::kInvalidSpec, "unknown self-MI mode '" + std::string(text) + "'");
}

double SelfMi(std::span<const double> s, const NmiOptions& opts) {
  if (opts.mode == SelfMiMode::kFixed) {
    if (!(opts.fixed_self_mi > 0.0)) throw Error(ErrorCode::kInvalidSpec, "fixed self-MI must be > 0");
    return opts.fixed_self_mi;
  }
  CheckSamples(s.size(), opts.knn.k);
  std::vector<double> col(s.begin(), s.end());
  if (Spread(col) == 0.0) throw Error(ErrorCode::kDegenerate, "constant private values");
  return KsgSelf(std::move(col), opts.knn);
}

std::vector<NmiPoint> NmiCurve(std::span<const double> s,
                               const std::vector<std::vector<double>>& x_by_round,
                               std::span<const std::size_t> rounds, const NmiOptions& opts) {
  if (x_by_round.size() != rounds.size()) {
    throw Error(ErrorCode::kInvalidSpec, "round list and sample list disagree");
  }
  const double denom = SelfMi(s, opts);
  std::vector<NmiPoint> out;
  out.reserve(rounds.size());
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    const MIEstimate est = EstimateMiKnn(s, x_by_round[r], opts.knn);
    NmiPoint p{rounds[r], 0.0, est.value, est.k, est.n_samples};
    if (est.deterministic) {
      p.nmi = 1.0;
      p.mi_nats = denom;
    } else {
      p.nmi = std::clamp(est.raw / denom, 0.0, 1.0);
    }
    out.push_back(p);
  }
  return out;
}

double LeakageProbability(std::span<const std::optional<std::size_t>> matched_at) {
  if (matched_at.empty()) throw Error(ErrorCode::kInsufficientTrials, "no trials");
  const auto hits = std::count_if(matched_at.begin(), matched_at.end(),
                                  [](const auto& m) { return m.has_value(); });
  return static_cast<double>(hits) / static_cast<double>(matched_at.size());
}

MIEstimate IdealBoundEstimate(std::span<const double> s_i, std::span<const IdealSideInfo> infos,
                              NodeId i, const CorruptionSpec& corruption, const OperatorSpec& op,
                              const KnnOptions& opts) {
  if (corruption.IsCorrupted(i)) {
    throw Error(ErrorCode::kInvalidSpec, "node " + std::to_string(i) + " is corrupted");
  }
  if (s_i.size() != infos.size()) throw Error(ErrorCode::kInvalidSpec, "batch length mismatch");
  const std::size_t n = s_i.size();
  CheckSamples(n, opts.k);
  const bool sums = op.kind == OperatorKind::kAverage || op.kind == OperatorKind::kTrimmedMean;

  // Membership pattern as a discrete label, numbered by first appearance.
  std::map<std::vector<std::uint8_t>, std::int64_t> labels;
  std::vector<std::int64_t> d(n);
  Samples c;
  c.dims = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const IdealSideInfo& info = infos[r];
    std::vector<std::uint8_t> key;
    for (const auto* v : {&info.max_membership, &info.med_leq, &info.med_geq,
                          &info.topk_membership, &info.bottomk_membership}) {
      key.insert(key.end(), v->begin(), v->end());
    }
    d[r] = labels.emplace(std::move(key), static_cast<std::int64_t>(labels.size())).first->second;
    std::vector<double> feat = info.aggregate;
    for (const auto& [j, v] : info.corrupted_inputs) feat.push_back(v);
    if (sums) feat.insert(feat.end(), info.honest_component_sums.begin(), info.honest_component_sums.end());
    if (r == 0) c.dims = feat.size();
    if (feat.size() != c.dims) throw Error(ErrorCode::kInvalidSpec, "side info shape varies");
    c.values.insert(c.values.end(), feat.begin(), feat.end());
  }

  const Samples s = Samples::FromColumn(s_i);
  MIEstimate total = EstimateMiMixed(s, d, opts);
  double raw = total.raw;
  bool deterministic = false;
  std::map<std::int64_t, std::vector<std::size_t>> classes;
  for (std::size_t r = 0; r < n; ++r) classes[d[r]].push_back(r);
  for (const auto& [label, rows] : classes) {
    if (rows.size() <= opts.k + 1 || c.dims == 0) continue;
    Samples cs;
    cs.dims = c.dims;
    for (std::size_t r : rows) {
      cs.values.insert(cs.values.end(), c.values.begin() + r * c.dims,
                       c.values.begin() + (r + 1) * c.dims);
    }
    const MIEstimate part = EstimateMiKnn(Samples::FromColumn(Subset(s_i, rows)), cs, opts);
    deterministic = deterministic || part.deterministic;
    raw += static_cast<double>(rows.size()) / static_cast<double>(n) * part.raw;
  }
  return Finish(raw, opts.k, n, deterministic);
}

std::vector<CalibrationCheck> RunMiSelfTest(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<CalibrationCheck> out;
  auto check = [&](std::string name, double value, double target, double tol) {
    out.push_back({std::move(name), value, target, tol, std::abs(value - target) <= tol});
  };

  constexpr std::size_t kN = 2000;
  std::vector<double> a(kN), b(kN);
  for (std::size_t r = 0; r < kN; ++r) {
    a[r] = g(rng);
    b[r] = g(rng);
  }
  check("independent-gaussian", EstimateMiKnn(a, b).raw, 0.0, 0.05);

  const double rho = 0.9;
  for (std::size_t r = 0; r < kN; ++r) {
    a[r] = g(rng);
    b[r] = rho * a[r] + std::sqrt(1.0 - rho * rho) * g(rng);
  }
  check("gaussian-rho-0.9", EstimateMiKnn(a, b).raw, -0.5 * std::log(1.0 - rho * rho), 0.1);

  constexpr std::size_t kBits = 10000;
  std::bernoulli_distribution coin(0.5);
  std::vector<std::int64_t> x(kBits), y(kBits);
  for (std::size_t r = 0; r < kBits; ++r) x[r] = coin(rng);
  check("discrete-identity-bit", EstimateMiDiscrete(x, x).raw, std::log(2.0), 0.02);
  for (std::size_t r = 0; r < kBits; ++r) y[r] = coin(rng);
  check("discrete-independent-bits", EstimateMiDiscrete(x, y).raw, 0.0, 0.02);
  return out;
}

void WriteNmiCsvHeader(std::ostream& out) {
  out << "trial_set,node,t,nmi,mi_nats,k,n_samples,mode\n";
}

void WriteNmiCsvRows(std::ostream& out, std::string_view trial_set, NodeId node,
                     std::span<const NmiPoint> points, SelfMiMode mode) {
  for (const NmiPoint& p : points) {
    out << trial_set << ',' << node << ',' << p.t << ',' << FormatDouble(p.nmi) << ','
        << FormatDouble(p.mi_nats) << ',' << p.k << ',' << p.n_samples << ','
        << SelfMiModeName(mode) << '\n';
  }
}

}  // namespace privagg
