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

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "privagg/error.hpp"
#include "privagg/format.hpp"
#include "privagg/harness.hpp"

namespace privagg {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& Schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"experiment",
       {"name", "trials", "master_seed", "threads", "divergence_threshold", "s_distribution",
        "edges_file"}},
      {"bimodal", {"mu", "sigma"}},
      {"topology", {"kind", "n", "radius", "seed", "max_retries"}},
      {"operator", {"kind", "k", "eps", "q"}},
      {"engine", {"c", "theta", "t_max", "match_tol"}},
      {"init", {"kind", "mu_z", "sigma_z", "direction", "per_node_mu"}},
      {"corruption", {"nodes", "eavesdrop"}},
      {"dp", {"noise", "sigma_s"}},
      {"metrics", {"nmi", "grid_points", "self_mi", "fixed_self_mi", "k", "ideal_bound"}},
      {"sweep", {"axis", "values", "mu_z_scale", "t_max_scale"}},
  };
  return schema;
}

[[noreturn]] void Bad(const std::string& key, const std::string& text, const char* what) {
  throw Error(ErrorCode::kConfig, key + ": '" + text + "' is not " + what);
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

double ToDouble(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || !std::isfinite(v)) {
    Bad(key, text, "a finite number");
  }
  return v;
}

std::uint64_t ToUnsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) Bad(key, text, "a non-negative integer");
  return v;
}

bool ToBool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  Bad(key, text, "true or false");
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Re-raises parse errors of the enum helpers as config errors.
template <typename F>
auto Named(const std::string& key, const std::string& text, F parse) {
  try {
    return parse(text);
  } catch (const Error&) {
    Bad(key, text, "a recognised name");
  }
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  template <typename F>
  void Get(const std::string& section, const std::string& key, F apply) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return;
    const auto value = sec->get_optional<std::string>(key);
    if (!value) return;
    const std::string full = section + "." + key;
    const std::string text = Trim(*value);
    apply(full, text);
  }

  bool Has(const std::string& section) const {
    return static_cast<bool>(tree_.get_child_optional(section));
  }

 private:
  const pt::ptree& tree_;
};

std::string List(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + FormatDouble(v[i]);
  return out;
}

}  // namespace

std::string SDistributionName(SDistribution d) {
  return d == SDistribution::kBimodal ? "bimodal" : "standard-normal";
}

SDistribution ParseSDistribution(const std::string& name) {
  if (name == "standard-normal") return SDistribution::kStandardNormal;
  if (name == "bimodal") return SDistribution::kBimodal;
  throw Error(ErrorCode::kConfig, "unknown s_distribution '" + name + "'");
}

std::string NoiseKindName(NoiseKind k) { return k == NoiseKind::kGaussian ? "gaussian" : "laplacian"; }

NoiseKind ParseNoiseKind(const std::string& name) {
  if (name == "gaussian") return NoiseKind::kGaussian;
  if (name == "laplacian") return NoiseKind::kLaplacian;
  throw Error(ErrorCode::kConfig, "unknown noise '" + name + "'");
}

ConfigFile ParseConfig(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = Schema().find(section);
    if (it == Schema().end()) {
      throw Error(ErrorCode::kConfig, body.empty() && !body.data().empty()
                                          ? "key '" + section + "' outside any section"
                                          : "unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) {
        throw Error(ErrorCode::kConfig, "unknown key '" + key + "' in [" + section + "]");
      }
    }
  }

  ConfigFile out;
  ExperimentConfig& c = out.experiment;
  const Reader r(tree);
  r.Get("experiment", "name", [&](auto&, auto& v) { c.name = v; });
  r.Get("experiment", "trials", [&](auto& k, auto& v) { c.trials = ToUnsigned(k, v); });
  r.Get("experiment", "master_seed", [&](auto& k, auto& v) { c.master_seed = ToUnsigned(k, v); });
  r.Get("experiment", "threads", [&](auto& k, auto& v) { c.threads = ToUnsigned(k, v); });
  r.Get("experiment", "divergence_threshold",
        [&](auto& k, auto& v) { c.divergence_threshold = ToDouble(k, v); });
  r.Get("experiment", "s_distribution",
        [&](auto& k, auto& v) { c.s_distribution = Named(k, v, ParseSDistribution); });
  r.Get("experiment", "edges_file", [&](auto&, auto& v) { c.edges_file = v; });
  r.Get("bimodal", "mu", [&](auto& k, auto& v) { c.bimodal.mu = ToDouble(k, v); });
  r.Get("bimodal", "sigma", [&](auto& k, auto& v) { c.bimodal.sigma = ToDouble(k, v); });

  r.Get("topology", "kind", [&](auto& k, auto& v) { c.topology.kind = Named(k, v, ParseTopologyKind); });
  r.Get("topology", "n", [&](auto& k, auto& v) { c.topology.n = ToUnsigned(k, v); });
  r.Get("topology", "radius", [&](auto& k, auto& v) { c.topology.radius = ToDouble(k, v); });
  r.Get("topology", "seed", [&](auto& k, auto& v) { c.topology.seed = ToUnsigned(k, v); });
  r.Get("topology", "max_retries", [&](auto& k, auto& v) { c.topology.max_retries = ToUnsigned(k, v); });

  r.Get("operator", "kind", [&](auto& k, auto& v) { c.op.kind = Named(k, v, ParseOperatorKind); });
  r.Get("operator", "k", [&](auto& k, auto& v) { c.op.k = ToUnsigned(k, v); });
  r.Get("operator", "eps", [&](auto& k, auto& v) { c.op.eps = ToDouble(k, v); });
  r.Get("operator", "q", [&](auto& k, auto& v) { c.op.q = ToDouble(k, v); });

  r.Get("engine", "c", [&](auto& k, auto& v) { c.engine.c = ToDouble(k, v); });
  r.Get("engine", "theta", [&](auto& k, auto& v) { c.engine.theta = ToDouble(k, v); });
  r.Get("engine", "t_max", [&](auto& k, auto& v) { c.engine.t_max = ToUnsigned(k, v); });
  r.Get("engine", "match_tol", [&](auto& k, auto& v) { c.engine.match_tol = ToDouble(k, v); });

  r.Get("init", "kind", [&](auto& k, auto& v) { c.init.kind = Named(k, v, ParseInitKind); });
  r.Get("init", "mu_z", [&](auto& k, auto& v) { c.init.mu_z = ToDouble(k, v); });
  r.Get("init", "sigma_z", [&](auto& k, auto& v) { c.init.sigma_z = ToDouble(k, v); });
  r.Get("init", "direction",
        [&](auto& k, auto& v) { c.init.direction = Named(k, v, ParseInitDirection); });
  r.Get("init", "per_node_mu", [&](auto& k, auto& v) {
    c.init.per_node_mu.clear();
    for (const auto& item : SplitList(v)) c.init.per_node_mu.push_back(ToDouble(k, item));
  });

  r.Get("corruption", "nodes", [&](auto& k, auto& v) {
    c.corruption.corrupted.clear();
    for (const auto& item : SplitList(v)) {
      c.corruption.corrupted.push_back(static_cast<NodeId>(ToUnsigned(k, item)));
    }
    std::sort(c.corruption.corrupted.begin(), c.corruption.corrupted.end());
  });
  r.Get("corruption", "eavesdrop", [&](auto& k, auto& v) { c.corruption.eavesdrop = ToBool(k, v); });

  if (r.Has("dp")) {
    c.dp = DpBaseline{};
    r.Get("dp", "noise", [&](auto& k, auto& v) { c.dp->noise = Named(k, v, ParseNoiseKind); });
    r.Get("dp", "sigma_s", [&](auto& k, auto& v) { c.dp->sigma_s = ToDouble(k, v); });
  }

  r.Get("metrics", "nmi", [&](auto& k, auto& v) { c.metrics.nmi = ToBool(k, v); });
  r.Get("metrics", "grid_points", [&](auto& k, auto& v) { c.metrics.grid_points = ToUnsigned(k, v); });
  r.Get("metrics", "self_mi",
        [&](auto& k, auto& v) { c.metrics.self_mi = Named(k, v, [](const std::string& s) {
          return ParseSelfMiMode(s);
        }); });
  r.Get("metrics", "fixed_self_mi", [&](auto& k, auto& v) { c.metrics.fixed_self_mi = ToDouble(k, v); });
  r.Get("metrics", "k", [&](auto& k, auto& v) { c.metrics.knn_k = ToUnsigned(k, v); });
  r.Get("metrics", "ideal_bound", [&](auto& k, auto& v) { c.metrics.ideal_bound = ToBool(k, v); });

  if (r.Has("sweep")) {
    SweepSpec s;
    r.Get("sweep", "axis", [&](auto&, auto& v) { s.axis = v; });
    r.Get("sweep", "values", [&](auto&, auto& v) { s.values = SplitList(v); });
    r.Get("sweep", "mu_z_scale", [&](auto& k, auto& v) { s.mu_z_scale = ToDouble(k, v); });
    r.Get("sweep", "t_max_scale", [&](auto& k, auto& v) { s.t_max_scale = ToDouble(k, v); });
    out.sweep = std::move(s);
  }
  c.Validate();
  return out;
}

ConfigFile LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + path.string());
  return ParseConfig(in);
}

void WriteConfig(std::ostream& out, const ConfigFile& file) {
  const ExperimentConfig& c = file.experiment;
  out << "[experiment]\n"
      << "name = " << c.name << '\n'
      << "trials = " << c.trials << '\n'
      << "master_seed = " << c.master_seed << '\n'
      << "threads = " << c.threads << '\n'
      << "divergence_threshold = " << FormatDouble(c.divergence_threshold) << '\n'
      << "s_distribution = " << SDistributionName(c.s_distribution) << '\n';
  if (c.edges_file) out << "edges_file = " << c.edges_file->string() << '\n';
  out << "\n[bimodal]\n"
      << "mu = " << FormatDouble(c.bimodal.mu) << '\n'
      << "sigma = " << FormatDouble(c.bimodal.sigma) << '\n';
  out << "\n[topology]\n"
      << "kind = " << TopologyKindName(c.topology.kind) << '\n'
      << "n = " << c.topology.n << '\n'
      << "radius = " << FormatDouble(c.topology.radius) << '\n'
      << "seed = " << c.topology.seed << '\n'
      << "max_retries = " << c.topology.max_retries << '\n';
  out << "\n[operator]\n"
      << "kind = " << c.op.Name() << '\n'
      << "k = " << c.op.k << '\n'
      << "eps = " << FormatDouble(c.op.eps) << '\n'
      << "q = " << FormatDouble(c.op.q) << '\n';
  out << "\n[engine]\n"
      << "c = " << FormatDouble(c.engine.c) << '\n'
      << "theta = " << FormatDouble(c.engine.theta) << '\n'
      << "t_max = " << c.engine.t_max << '\n'
      << "match_tol = " << FormatDouble(c.engine.match_tol) << '\n';
  out << "\n[init]\n"
      << "kind = " << InitKindName(c.init.kind) << '\n'
      << "mu_z = " << FormatDouble(c.init.mu_z) << '\n'
      << "sigma_z = " << FormatDouble(c.init.sigma_z) << '\n'
      << "direction = " << InitDirectionName(c.init.direction) << '\n';
  if (!c.init.per_node_mu.empty()) out << "per_node_mu = " << List(c.init.per_node_mu) << '\n';
  out << "\n[corruption]\n"
      << "nodes = ";
  for (std::size_t i = 0; i < c.corruption.corrupted.size(); ++i) {
    out << (i ? "," : "") << c.corruption.corrupted[i];
  }
  out << '\n' << "eavesdrop = " << (c.corruption.eavesdrop ? "true" : "false") << '\n';
  if (c.dp) {
    out << "\n[dp]\n"
        << "noise = " << NoiseKindName(c.dp->noise) << '\n'
        << "sigma_s = " << FormatDouble(c.dp->sigma_s) << '\n';
  }
  out << "\n[metrics]\n"
      << "nmi = " << (c.metrics.nmi ? "true" : "false") << '\n'
      << "grid_points = " << c.metrics.grid_points << '\n'
      << "self_mi = " << SelfMiModeName(c.metrics.self_mi) << '\n'
      << "fixed_self_mi = " << FormatDouble(c.metrics.fixed_self_mi) << '\n'
      << "k = " << c.metrics.knn_k << '\n'
      << "ideal_bound = " << (c.metrics.ideal_bound ? "true" : "false") << '\n';
  if (file.sweep) {
    const SweepSpec& s = *file.sweep;
    out << "\n[sweep]\n"
        << "axis = " << s.axis << '\n'
        << "values = ";
    for (std::size_t i = 0; i < s.values.size(); ++i) out << (i ? "," : "") << s.values[i];
    out << '\n';
    if (s.mu_z_scale) out << "mu_z_scale = " << FormatDouble(*s.mu_z_scale) << '\n';
    if (s.t_max_scale) out << "t_max_scale = " << FormatDouble(*s.t_max_scale) << '\n';
  }
}

void ExperimentConfig::Validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  try {
    topology.Validate();
    op.Validate(topology.n);
    engine.Validate();
    init.Validate(topology.n);
    corruption.Validate(topology.n);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    fail(e.what());
  }
  if (trials < 1) fail("trials must be >= 1");
  if (threads < 1) fail("threads must be >= 1");
  if (!(divergence_threshold >= 0.0 && divergence_threshold <= 1.0)) {
    fail("divergence_threshold must lie in [0, 1]");
  }
  if (s_distribution == SDistribution::kBimodal && !(bimodal.sigma > 0.0)) {
    fail("bimodal.sigma must be > 0");
  }
  if (dp) {
    if (!(dp->sigma_s >= 0.0)) fail("dp.sigma_s must be >= 0");
    if (init.kind != InitKind::kZero) fail("the dp baseline runs from init.kind = zero");
  }
  if (metrics.grid_points < 2) fail("metrics.grid_points must be >= 2");
  if (metrics.knn_k < 1) fail("metrics.k must be >= 1");
  if (metrics.self_mi == SelfMiMode::kFixed && !(metrics.fixed_self_mi > 0.0)) {
    fail("metrics.fixed_self_mi must be > 0");
  }
}

ExperimentConfig ApplyAxis(ExperimentConfig c, const SweepSpec& sweep, const std::string& value) {
  const std::string key = "sweep." + sweep.axis;
  if (sweep.axis == "c") {
    c.engine.c = ToDouble(key, value);
    if (sweep.mu_z_scale) c.init.mu_z = *sweep.mu_z_scale * c.engine.c;
    if (sweep.t_max_scale) {
      c.engine.t_max = static_cast<std::size_t>(std::llround(*sweep.t_max_scale * c.engine.c));
    }
  } else if (sweep.axis == "mu_z") {
    c.init.mu_z = ToDouble(key, value);
  } else if (sweep.axis == "sigma_s") {
    if (!c.dp) throw Error(ErrorCode::kConfig, "sweeping sigma_s needs a [dp] section");
    c.dp->sigma_s = ToDouble(key, value);
  } else if (sweep.axis == "topology") {
    c.topology.kind = Named(key, value, ParseTopologyKind);
  } else if (sweep.axis == "q") {
    c.op.q = ToDouble(key, value);
  } else if (sweep.axis == "K") {
    c.op.k = ToUnsigned(key, value);
  } else {
    throw Error(ErrorCode::kConfig, "unknown sweep axis '" + sweep.axis + "'");
  }
  c.Validate();
  return c;
}

}  // namespace privagg
