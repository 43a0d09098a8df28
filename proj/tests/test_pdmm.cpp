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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "privagg/error.hpp"
#include "privagg/operators.hpp"
#include "privagg/pdmm.hpp"

namespace privagg {
namespace {

LocalRule MaxRule() {
  return [](const RoundContext& r) { return XUpdateMax(r.s, r.degree, r.dual_sum, r.c); };
}

TEST(ZUpdate, Examples) {
  EXPECT_DOUBLE_EQ(ZUpdate(0, 0, 1, +1, 1, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(ZUpdate(4, 2, 0, -1, 3, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(ZUpdate(9, 2, 1, +1, 1, 1.0), 4.0);
}

TEST(ZUpdate, HalfAveragingMatchesDirectFormula) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int k = 0; k < 1000; ++k) {
    const double zji = u(rng), zij = u(rng), x = u(rng), c = std::abs(u(rng)) + 0.1;
    const double a = k % 2 ? 1.0 : -1.0;
    EXPECT_NEAR(ZUpdate(zji, zij, x, a, c, 0.5), 0.5 * zji + 0.5 * (zij + 2 * c * a * x), 1e-10);
  }
}

TEST(DualSum, Examples) {
  const Graph tri = Generate({TopologyKind::kComplete, 3}).graph;
  DualState z{std::vector<double>(tri.num_slots(), 0.0)};
  EXPECT_EQ(DualSum(tri, z, 0), 0.0);
  z.z[tri.slot(0, 1)] = 5;
  z.z[tri.slot(0, 2)] = 5;
  EXPECT_EQ(DualSum(tri, z, 0), 10.0);
  z.z[tri.slot(1, 0)] = 2;
  z.z[tri.slot(1, 2)] = 3;
  EXPECT_EQ(DualSum(tri, z, 1), 1.0);
}

TEST(InitDuals, ZeroOnRing) {
  const Graph ring = Generate({TopologyKind::kRing, 3}).graph;
  const DualState z = InitDuals(ring, {InitKind::kZero});
  ASSERT_EQ(z.z.size(), 6u);
  for (double v : z.z) EXPECT_EQ(v, 0.0);
}

TEST(InitDuals, SignedGaussianWithinSixSigma) {
  const Graph g = Generate({TopologyKind::kRgg, 15, 0.4, 7}).graph;
  InitSpec spec{InitKind::kSignedGaussian, 1000.0, 1.0, 1};
  spec.direction = InitDirection::kFromAbove;
  const DualState z = InitDuals(g, spec);
  for (std::size_t sl = 0; sl < g.num_slots(); ++sl) {
    EXPECT_NEAR(z.z[sl], -g.slot_sign(sl) * 1000.0, 6.0);
  }
  // The max start point sits near mu / c.
  for (NodeId i = 0; i < g.n(); ++i) {
    EXPECT_GT((-1.0 - DualSum(g, z, i)) / static_cast<double>(g.degree(i)), 990.0);
  }
  EXPECT_EQ(InitDuals(g, spec), z);
  spec.direction = InitDirection::kFromBelow;
  const DualState below = InitDuals(g, spec);
  for (std::size_t sl = 0; sl < g.num_slots(); ++sl) {
    EXPECT_NEAR(below.z[sl], g.slot_sign(sl) * 1000.0, 6.0);
  }
}

TEST(InitDuals, InvalidSpec) {
  const Graph g = Generate({TopologyKind::kRing, 4}).graph;
  EXPECT_THROW(InitDuals(g, {InitKind::kGaussian, 0.0, -1.0}), Error);
  InitSpec custom{InitKind::kCustomPerNode, 0.0, 1.0};
  custom.per_node_mu = {1.0, 2.0};
  EXPECT_THROW(InitDuals(g, custom), Error);
}

TEST(Engine, RejectsSingleNode) {
  const Graph one(1, {});
  const std::vector<double> s{1.0};
  try {
    privagg::Run(one, s, MaxRule(), {InitKind::kZero}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidSpec);
  }
}

TEST(Engine, TwoNodeMaxConverges) {
  const Graph path(2, {{0, 1}});
  const std::vector<double> s{0.0, 1.0};
  EngineConfig cfg;
  cfg.t_max = 400;
  const Transcript tr = privagg::Run(path, s, MaxRule(), {InitKind::kZero}, cfg);
  EXPECT_NEAR(tr.x(tr.rounds - 1, 0), 1.0, 1e-9);
  EXPECT_NEAR(tr.x(tr.rounds - 1, 1), 1.0, 1e-9);
}

Transcript SampleRun(bool record = true) {
  const Graph g = Generate({TopologyKind::kRgg, 15, 0.4, 7}).graph;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  std::vector<double> s(15);
  for (double& v : s) v = n01(rng);
  EngineConfig cfg;
  cfg.c = 2.0;
  cfg.t_max = 300;
  cfg.record_dual_history = record;
  return privagg::Run(g, s, MaxRule(), {InitKind::kSignedGaussian, 50.0, 1.0, 9}, cfg);
}

TEST(Engine, Deterministic) {
  const Transcript a = SampleRun();
  const Transcript b = SampleRun();
  EXPECT_EQ(a.x_hist, b.x_hist);
  EXPECT_EQ(a.z_hist, b.z_hist);
}

// Recomputes every round from the recorded duals and replays the dual
// recursion from the recorded broadcasts.
TEST(Engine, SynchronyAndReplay) {
  const Graph g = Generate({TopologyKind::kRgg, 15, 0.4, 7}).graph;
  const Transcript tr = SampleRun();
  ASSERT_EQ(tr.rounds, 300u);
  ASSERT_EQ(tr.z_hist.size(), 301 * g.num_slots());
  std::vector<double> z = tr.z0.z;
  for (std::size_t t = 0; t < tr.rounds; ++t) {
    const auto zt = tr.z_at(t);
    ASSERT_TRUE(std::equal(z.begin(), z.end(), zt.begin()));
    for (NodeId i = 0; i < g.n(); ++i) {
      EXPECT_EQ(tr.x(t, i), XUpdateMax(tr.s[i], g.degree(i), DualSum(g, z, i), tr.config.c));
    }
    std::vector<double> next(z.size());
    for (const auto& [i, j] : g.edges()) {
      const double a = EdgeSign(g, i, j);
      // z_{j|i} from x_i, z_{i|j} from x_j.
      next[g.slot(j, i)] = ZUpdate(z[g.slot(j, i)], z[g.slot(i, j)], tr.x(t, i), a,
                                   tr.config.c, tr.config.theta);
      next[g.slot(i, j)] = ZUpdate(z[g.slot(i, j)], z[g.slot(j, i)], tr.x(t, j), -a,
                                   tr.config.c, tr.config.theta);
    }
    z = next;
  }
  const auto last = tr.z_at(tr.rounds);
  EXPECT_TRUE(std::equal(z.begin(), z.end(), last.begin()));
}

TEST(Engine, RollingBufferKeepsEndpoints) {
  const Transcript full = SampleRun(true);
  const Transcript lean = SampleRun(false);
  EXPECT_EQ(full.x_hist, lean.x_hist);
  EXPECT_EQ(full.sum_hist, lean.sum_hist);
  EXPECT_EQ(full.final_duals(), lean.final_duals());
  EXPECT_THROW(lean.z_at(10), Error);
}

TEST(Engine, DivergenceIsFlagged) {
  const Graph ring = Generate({TopologyKind::kRing, 4}).graph;
  const std::vector<double> s(4, 0.0);
  EngineConfig cfg;
  cfg.t_max = 10;
  const Transcript tr =
      privagg::Run(ring, s, [](const RoundContext& r) { return r.t == 3 ? 1e13 : 0.0; }, {}, cfg);
  EXPECT_TRUE(tr.diverged);
  EXPECT_EQ(tr.rounds, 3u);
}

TEST(Engine, ConfigValidation) {
  EngineConfig cfg;
  cfg.c = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.theta = 1.5;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.t_max = 0;
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = {};
  cfg.match_tol = -1;
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(Transcript, CsvFormats) {
  const Graph path(2, {{0, 1}});
  const std::vector<double> s{0.5, 1.0};
  EngineConfig cfg;
  cfg.t_max = 2;
  const Transcript tr = privagg::Run(path, s, MaxRule(), {InitKind::kZero}, cfg);
  std::ostringstream x, z;
  WriteTranscriptCsv(tr, x);
  WriteInitialDualsCsv(path, tr.z0, z);
  const std::string rows = x.str();
  EXPECT_EQ(rows.substr(0, 6), "t,i,x\n");
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 5);
  EXPECT_EQ(z.str(), "i,j,z0\n0,1,0\n1,0,0\n");
}

}  // namespace
}  // namespace privagg
