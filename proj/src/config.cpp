// Copyright 2026 The kaclab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kaclab/config.hpp"

#include <charconv>
#include <deque>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace kaclab {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::string norm = s;
  for (char& c : norm) {
    if (c == ',') c = ' ';
  }
  std::istringstream in(norm);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(out)) {
    throw InputError("config key '" + key + "': expected a finite real number, got '" + v + "'");
  }
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw InputError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw InputError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string fmt_real(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string fmt_list(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (k) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt_real(xs[k]);
    } else {
      out += std::to_string(xs[k]);
    }
  }
  return out;
}

const char* kind_name(InitialKind k) {
  switch (k) {
    case InitialKind::kUniformBall: return "uniform_ball";
    case InitialKind::kTwoBallMixture: return "two_ball_mixture";
    case InitialKind::kPointCloudFile: return "point_cloud_file";
  }
  return "uniform_ball";
}

InitialKind parse_kind(const std::string& key, const std::string& v) {
  if (v == "uniform_ball") return InitialKind::kUniformBall;
  if (v == "two_ball_mixture") return InitialKind::kTwoBallMixture;
  if (v == "point_cloud_file") return InitialKind::kPointCloudFile;
  throw InputError("config key '" + key + "': allowed values are uniform_ball, two_ball_mixture, point_cloud_file");
}

const char* chaos_name(ChaosStatistic s) {
  switch (s) {
    case ChaosStatistic::kNone: return "none";
    case ChaosStatistic::kSpeedSquared: return "speed_sq";
    case ChaosStatistic::kComponentX: return "component_x";
  }
  return "none";
}

Vector3d parse_vec3(const std::string& key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 3) throw InputError("config key '" + key + "': expected three components");
  return {to_real(key, parts[0]), to_real(key, parts[1]), to_real(key, parts[2])};
}

std::string fmt_vec3(const Vector3d& v) {
  return fmt_real(v.x()) + "," + fmt_real(v.y()) + "," + fmt_real(v.z());
}

struct Field {
  const char* key;
  std::function<void(SimConfig&, const std::string&)> set;
  std::function<std::string(const SimConfig&)> get;
};

void add_initial_fields(std::vector<Field>& fields, const std::string& prefix, InitialSpec SimConfig::*member) {
  // Keys need static storage because Field stores a C string.
  static std::deque<std::string> names;
  auto name = [&](const char* suffix) {
    names.push_back(prefix + suffix);
    return names.back().c_str();
  };
  const char* k_kind = name("initial_kind");
  const char* k_r0 = name("r0_velocity");
  const char* k_off = name("offset_velocity");
  const char* k_w = name("mixture_weight");
  const char* k_path = name("point_cloud_path");
  fields.push_back({k_kind, [=](SimConfig& c, const std::string& v) { (c.*member).kind = parse_kind(k_kind, v); },
                    [=](const SimConfig& c) { return std::string(kind_name((c.*member).kind)); }});
  fields.push_back({k_r0, [=](SimConfig& c, const std::string& v) { (c.*member).r0 = to_real(k_r0, v); },
                    [=](const SimConfig& c) { return fmt_real((c.*member).r0); }});
  fields.push_back({k_off, [=](SimConfig& c, const std::string& v) { (c.*member).offset = parse_vec3(k_off, v); },
                    [=](const SimConfig& c) { return fmt_vec3((c.*member).offset); }});
  fields.push_back({k_w, [=](SimConfig& c, const std::string& v) { (c.*member).mixture_weight = to_real(k_w, v); },
                    [=](const SimConfig& c) { return fmt_real((c.*member).mixture_weight); }});
  fields.push_back({k_path, [=](SimConfig& c, const std::string& v) { (c.*member).point_cloud_path = v; },
                    [=](const SimConfig& c) { return (c.*member).point_cloud_path; }});
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"gamma", [](SimConfig& c, const std::string& v) { c.gamma = to_real("gamma", v); },
                 [](const SimConfig& c) { return fmt_real(c.gamma); }});
    f.push_back({"n_particles",
                 [](SimConfig& c, const std::string& v) { c.n_particles = to_integer("n_particles", v); },
                 [](const SimConfig& c) { return std::to_string(c.n_particles); }});
    add_initial_fields(f, "", &SimConfig::initial);
    f.push_back({"dt_time", [](SimConfig& c, const std::string& v) { c.dt = to_real("dt_time", v); },
                 [](const SimConfig& c) { return fmt_real(c.dt); }});
    f.push_back({"horizon_time", [](SimConfig& c, const std::string& v) { c.horizon = to_real("horizon_time", v); },
                 [](const SimConfig& c) { return fmt_real(c.horizon); }});
    f.push_back({"replicas", [](SimConfig& c, const std::string& v) { c.replicas = int(to_integer("replicas", v)); },
                 [](const SimConfig& c) { return std::to_string(c.replicas); }});
    f.push_back({"seed",
                 [](SimConfig& c, const std::string& v) {
                   const long long s = to_integer("seed", v);
                   if (s < 0) throw InputError("config key 'seed': must be >= 0");
                   c.seed = std::uint64_t(s);
                 },
                 [](const SimConfig& c) { return std::to_string(c.seed); }});
    f.push_back({"log_stride_steps",
                 [](SimConfig& c, const std::string& v) { c.log_stride = int(to_integer("log_stride_steps", v)); },
                 [](const SimConfig& c) { return std::to_string(c.log_stride); }});
    f.push_back({"snapshot_stride_steps",
                 [](SimConfig& c, const std::string& v) {
                   c.snapshot_stride = int(to_integer("snapshot_stride_steps", v));
                 },
                 [](const SimConfig& c) { return std::to_string(c.snapshot_stride); }});
    f.push_back({"energy_projection",
                 [](SimConfig& c, const std::string& v) { c.energy_projection = to_bool("energy_projection", v); },
                 [](const SimConfig& c) { return std::string(c.energy_projection ? "true" : "false"); }});
    f.push_back({"dt_adaptive_cap_velocity",
                 [](SimConfig& c, const std::string& v) {
                   c.dt_adaptive_cap = to_real("dt_adaptive_cap_velocity", v);
                 },
                 [](const SimConfig& c) { return fmt_real(c.dt_adaptive_cap); }});
    f.push_back({"moment_p",
                 [](SimConfig& c, const std::string& v) {
                   c.moment_p.clear();
                   for (const auto& t : split_list(v)) c.moment_p.push_back(to_real("moment_p", t));
                 },
                 [](const SimConfig& c) { return fmt_list(c.moment_p); }});
    f.push_back({"exp_moment_xi",
                 [](SimConfig& c, const std::string& v) {
                   c.exp_moment_xi.clear();
                   for (const auto& t : split_list(v)) c.exp_moment_xi.push_back(to_real("exp_moment_xi", t));
                 },
                 [](const SimConfig& c) { return fmt_list(c.exp_moment_xi); }});
    f.push_back({"entropy_neighbors",
                 [](SimConfig& c, const std::string& v) {
                   c.entropy_neighbors = int(to_integer("entropy_neighbors", v));
                 },
                 [](const SimConfig& c) { return std::to_string(c.entropy_neighbors); }});
    f.push_back({"chaos_statistic",
                 [](SimConfig& c, const std::string& v) {
                   if (v == "none") c.chaos_statistic = ChaosStatistic::kNone;
                   else if (v == "speed_sq") c.chaos_statistic = ChaosStatistic::kSpeedSquared;
                   else if (v == "component_x") c.chaos_statistic = ChaosStatistic::kComponentX;
                   else throw InputError("config key 'chaos_statistic': allowed values are none, speed_sq, component_x");
                 },
                 [](const SimConfig& c) { return std::string(chaos_name(c.chaos_statistic)); }});
    add_initial_fields(f, "b_", &SimConfig::initial_b);
    f.push_back({"m_list",
                 [](SimConfig& c, const std::string& v) {
                   c.m_list.clear();
                   for (const auto& t : split_list(v)) c.m_list.push_back(int(to_integer("m_list", t)));
                 },
                 [](const SimConfig& c) { return fmt_list(c.m_list); }});
    f.push_back({"n_list",
                 [](SimConfig& c, const std::string& v) {
                   c.n_list.clear();
                   for (const auto& t : split_list(v)) c.n_list.push_back(Eigen::Index(to_integer("n_list", t)));
                 },
                 [](const SimConfig& c) { return fmt_list(c.n_list); }});
    f.push_back({"t_probe_time", [](SimConfig& c, const std::string& v) { c.t_probe = to_real("t_probe_time", v); },
                 [](const SimConfig& c) { return fmt_real(c.t_probe); }});
    f.push_back({"output_dir", [](SimConfig& c, const std::string& v) { c.output_dir = v; },
                 [](const SimConfig& c) { return c.output_dir; }});
    f.push_back({"run_name", [](SimConfig& c, const std::string& v) { c.run_name = v; },
                 [](const SimConfig& c) { return c.run_name; }});
    return f;
  }();
  return table;
}

void require(bool ok, const std::string& key, const std::string& domain) {
  if (!ok) throw InputError("config key '" + key + "' out of range: allowed " + domain);
}

void validate_initial(const InitialSpec& s, const std::string& prefix) {
  require(s.r0 > 0.0, prefix + "r0_velocity", "> 0");
  require(s.mixture_weight >= 0.0 && s.mixture_weight <= 1.0, prefix + "mixture_weight", "[0, 1]");
  require(s.kind != InitialKind::kPointCloudFile || !s.point_cloud_path.empty(), prefix + "point_cloud_path",
          "non-empty when initial_kind = point_cloud_file");
}

}  // namespace

void SimConfig::validate() const {
  require(gamma >= 0.0 && gamma <= 1.0, "gamma", "[0, 1]");
  require(n_particles >= 2, "n_particles", ">= 2");
  require(dt > 0.0, "dt_time", "> 0");
  require(horizon > 0.0, "horizon_time", "> 0");
  require(replicas >= 1, "replicas", ">= 1");
  require(log_stride >= 1, "log_stride_steps", ">= 1");
  require(snapshot_stride >= 0, "snapshot_stride_steps", ">= 0");
  require(dt_adaptive_cap > 0.0, "dt_adaptive_cap_velocity", "> 0");
  for (double p : moment_p) require(p >= 0.0, "moment_p", "entries >= 0");
  for (double xi : exp_moment_xi) require(xi > 0.0, "exp_moment_xi", "entries > 0");
  require(entropy_neighbors >= 0 && entropy_neighbors < n_particles * replicas, "entropy_neighbors",
          "0 (off) or 1 .. pooled sample count - 1");
  validate_initial(initial, "");
  validate_initial(initial_b, "b_");
  for (int m : m_list) require(m >= 1 && m <= n_particles, "m_list", "entries in 1 .. n_particles");
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    require(n_list[k] >= 2, "n_list", "entries >= 2");
    require(k == 0 || n_list[k] > n_list[k - 1], "n_list", "strictly increasing");
  }
  require(t_probe >= 0.0, "t_probe_time", ">= 0");
  require(!run_name.empty(), "run_name", "non-empty");
}

std::uint64_t SimConfig::total_steps() const {
  // Guard against horizon/dt landing a rounding error above an integer.
  const double ratio = horizon / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest)) return std::uint64_t(nearest);
  return std::uint64_t(std::ceil(ratio));
}

SimConfig parse_config_text(const std::string& text) {
  SimConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const auto& f : fields()) {
      if (key == f.key) {
        f.set(cfg, value);
        found = true;
        break;
      }
    }
    if (!found) throw InputError("unknown config key '" + key + "' (line " + std::to_string(lineno) + ")");
  }
  cfg.validate();
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::map<std::string, std::string> config_entries(const SimConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& f : fields()) out[f.key] = f.get(cfg);
  return out;
}

std::string config_to_text(const SimConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  return out;
}

nlohmann::json config_to_json(const SimConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : config_entries(cfg)) j[k] = v;
  return j;
}

}  // namespace kaclab
