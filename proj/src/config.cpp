#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "antsel/errors.hpp"
#include "antsel/experiment.hpp"

namespace antsel {
namespace {

using nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where.empty() ? "<root>" : where, "expected an object");
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(join(where, key), "unknown key");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join(where, key), "missing required key");
  return *it;
}

double as_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

std::size_t as_count(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError(field, "expected a nonnegative integer");
  }
  return j.get<std::size_t>();
}

std::uint64_t as_u64(const json& j, const std::string& field) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<long long>() >= 0) return j.get<std::uint64_t>();
  throw ConfigError(field, "expected an unsigned 64-bit integer");
}

bool as_bool(const json& j, const std::string& field) {
  if (!j.is_boolean()) throw ConfigError(field, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& field) {
  if (!j.is_string()) throw ConfigError(field, "expected a string");
  return j.get<std::string>();
}

template <typename T, typename F>
void optional_field(const json& obj, const std::string& key, const std::string& where,
                    T& target, F convert) {
  auto it = obj.find(key);
  if (it != obj.end()) target = convert(*it, join(where, key));
}

UserLayout parse_layout(const json& j, const std::string& where) {
  expect_object(j, where);
  const auto kind = as_string(require(j, "kind", where), join(where, "kind"));
  if (kind == "co_located") {
    reject_unknown(j, {"kind", "spacing_m"}, where);
    CoLocated c;
    optional_field(j, "spacing_m", where, c.spacing_m, as_number);
    return c;
  }
  if (kind == "well_separated") {
    reject_unknown(j, {"kind", "min_spacing_m"}, where);
    WellSeparated w;
    optional_field(j, "min_spacing_m", where, w.min_spacing_m, as_number);
    return w;
  }
  throw ConfigError(join(where, "kind"), "expected \"co_located\" or \"well_separated\"");
}

SyntheticSceneConfig parse_scene(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown(j,
                 {"cluster_count", "cluster_azimuth_spread_deg",
                  "visibility_region_fraction", "cluster_power_sigma_db", "los",
                  "ricean_k_db", "user_layout", "subpaths_per_cluster",
                  "fixed_cluster_azimuths_deg"},
                 where);
  SyntheticSceneConfig s;
  optional_field(j, "cluster_count", where, s.cluster_count, as_count);
  optional_field(j, "cluster_azimuth_spread_deg", where, s.cluster_azimuth_spread_deg,
                 as_number);
  optional_field(j, "visibility_region_fraction", where, s.visibility_region_fraction,
                 as_number);
  optional_field(j, "cluster_power_sigma_db", where, s.cluster_power_sigma_db, as_number);
  optional_field(j, "los", where, s.los, as_bool);
  optional_field(j, "ricean_k_db", where, s.ricean_k_db, as_number);
  optional_field(j, "subpaths_per_cluster", where, s.subpaths_per_cluster, as_count);
  if (auto it = j.find("user_layout"); it != j.end()) {
    s.user_layout = parse_layout(*it, join(where, "user_layout"));
  }
  if (auto it = j.find("fixed_cluster_azimuths_deg"); it != j.end()) {
    const auto field = join(where, "fixed_cluster_azimuths_deg");
    if (!it->is_array()) throw ConfigError(field, "expected an array of numbers");
    for (const auto& v : *it) s.fixed_cluster_azimuths_deg.push_back(as_number(v, field));
  }
  return s;
}

SyntheticModelParams parse_model(const json& j, const std::string& where) {
  expect_object(j, where);
  reject_unknown(j,
                 {"carrier_wavelength_m", "backlobe_floor_db", "visibility_floor_db",
                  "polarization_ratio_mean_db", "polarization_ratio_std_db",
                  "dual_polarized", "min_user_distance_m", "max_user_distance_m",
                  "user_sector_half_width_deg"},
                 where);
  SyntheticModelParams p;
  optional_field(j, "carrier_wavelength_m", where, p.carrier_wavelength_m, as_number);
  optional_field(j, "backlobe_floor_db", where, p.backlobe_floor_db, as_number);
  optional_field(j, "visibility_floor_db", where, p.visibility_floor_db, as_number);
  optional_field(j, "polarization_ratio_mean_db", where, p.polarization_ratio_mean_db,
                 as_number);
  optional_field(j, "polarization_ratio_std_db", where, p.polarization_ratio_std_db,
                 as_number);
  optional_field(j, "dual_polarized", where, p.dual_polarized, as_bool);
  optional_field(j, "min_user_distance_m", where, p.min_user_distance_m, as_number);
  optional_field(j, "max_user_distance_m", where, p.max_user_distance_m, as_number);
  optional_field(j, "user_sector_half_width_deg", where, p.user_sector_half_width_deg,
                 as_number);
  if (!(p.carrier_wavelength_m > 0.0)) {
    throw ConfigError(join(where, "carrier_wavelength_m"), "must be positive");
  }
  if (!(p.min_user_distance_m > 0.0 && p.max_user_distance_m > p.min_user_distance_m)) {
    throw ConfigError(join(where, "max_user_distance_m"),
                      "user distance range must be positive and nonempty");
  }
  return p;
}

ChannelSource parse_source(const json& j, std::size_t M,
                           const std::filesystem::path& base_dir) {
  const std::string where = "channel_source";
  expect_object(j, where);
  const auto type = as_string(require(j, "type", where), join(where, "type"));
  if (type == "iid_rayleigh") {
    reject_unknown(j, {"type"}, where);
    return IidRayleighSource{};
  }
  if (type == "file") {
    reject_unknown(j, {"type", "path"}, where);
    std::filesystem::path p = as_string(require(j, "path", where), join(where, "path"));
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return FileSource{p};
  }
  if (type == "synthetic") {
    reject_unknown(j, {"type", "geometry", "scene", "model"}, where);
    SyntheticSource s;
    const auto gwhere = join(where, "geometry");
    const auto& g = require(j, "geometry", where);
    expect_object(g, gwhere);
    reject_unknown(g, {"kind", "directivity_exponent"}, gwhere);
    const auto kind = as_string(require(g, "kind", gwhere), join(gwhere, "kind"));
    double q = 2.0;
    optional_field(g, "directivity_exponent", gwhere, q, as_number);
    if (kind == "linear") {
      s.geometry = ArrayGeometry::linear(M);
    } else if (kind == "cylindrical") {
      s.geometry = ArrayGeometry::cylindrical(M, q);
    } else {
      throw ConfigError(join(gwhere, "kind"), "expected \"linear\" or \"cylindrical\"");
    }
    if (auto it = j.find("scene"); it != j.end()) s.scene = parse_scene(*it, join(where, "scene"));
    if (auto it = j.find("model"); it != j.end()) s.model = parse_model(*it, join(where, "model"));
    return s;
  }
  throw ConfigError(join(where, "type"),
                    "expected \"iid_rayleigh\", \"synthetic\" or \"file\"");
}

}  // namespace

double ScenarioConfig::rho_linear() const { return std::pow(10.0, rho_db / 10.0); }

std::vector<std::size_t> default_n_grid(std::size_t K, std::size_t M) {
  std::vector<std::size_t> grid;
  if (M <= 32 || M - K + 1 <= 16) {
    for (std::size_t n = K; n <= M; ++n) grid.push_back(n);
    return grid;
  }
  for (int i = 0; i < 16; ++i) {
    const double t = static_cast<double>(i) / 15.0;
    grid.push_back(K + static_cast<std::size_t>(
                           std::llround(t * static_cast<double>(M - K))));
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

std::vector<std::size_t> ScenarioConfig::effective_sweep() const {
  std::vector<std::size_t> sweep = n_sweep.empty() ? default_n_grid(K, M) : n_sweep;
  sweep.push_back(M);
  std::sort(sweep.begin(), sweep.end());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());
  return sweep;
}

void ScenarioConfig::validate() const {
  if (name.empty() || name.find_first_of(",\"\n\r") != std::string::npos) {
    throw ConfigError("name", "must be nonempty and free of commas, quotes and newlines");
  }
  if (K < 1) throw ConfigError("K", "must be >= 1");
  if (M < 1) throw ConfigError("M", "must be >= 1");
  if (L < 1) throw ConfigError("L", "must be >= 1");
  if (K > M) throw ConfigError("K", "must not exceed M");
  if (!std::isfinite(rho_db)) throw ConfigError("rho_db", "must be finite");
  if (!std::isfinite(rho_linear()) || !(rho_linear() > 0.0)) {
    throw ConfigError("rho_db", "does not convert to a finite positive SNR");
  }
  for (std::size_t n : n_sweep) {
    if (n < K || n > M) {
      throw ConfigError("n_sweep", "N=" + std::to_string(n) + " outside [K, M] = [" +
                                       std::to_string(K) + ", " + std::to_string(M) + "]");
    }
  }
  if (strategies.empty()) throw ConfigError("strategies", "must name at least one strategy");
  for (std::size_t i = 0; i < strategies.size(); ++i)
    for (std::size_t j = i + 1; j < strategies.size(); ++j)
      if (strategies[i] == strategies[j]) throw ConfigError("strategies", "duplicate entry");
  if (random_draws < 1) throw ConfigError("random_draws", "must be >= 1");
  if (std::find(strategies.begin(), strategies.end(), Strategy::Exhaustive) !=
      strategies.end()) {
    for (std::size_t n : effective_sweep()) {
      if (binomial(M, n) > kExhaustiveLimit) {
        throw ConfigError("strategies",
                          "exhaustive search infeasible at N=" + std::to_string(n) +
                              " (" + std::to_string(binomial(M, n)) + " subsets)");
      }
    }
  }
  if (dpc.max_iters < 1) throw ConfigError("dpc_max_iters", "must be >= 1");
  if (!(dpc.tol > 0.0)) throw ConfigError("dpc_tol", "must be positive");
  if (const auto* s = std::get_if<SyntheticSource>(&channel_source)) {
    if (s->geometry.size() != M) {
      throw ConfigError("channel_source.geometry", "element count differs from M");
    }
    auto scene = s->scene;
    scene.bandwidth_subcarriers = L;
    scene.validate();
    s->geometry.validate();
  }
}

ScenarioConfig parse_scenario_config(const json& doc, const std::filesystem::path& base_dir) {
  expect_object(doc, "");
  reject_unknown(doc,
                 {"name", "channel_source", "K", "M", "L", "rho_db", "n_sweep",
                  "strategies", "random_draws", "seed", "normalization", "dpc_max_iters",
                  "dpc_tol"},
                 "");
  ScenarioConfig c;
  c.name = as_string(require(doc, "name", ""), "name");
  c.K = as_count(require(doc, "K", ""), "K");
  c.M = as_count(require(doc, "M", ""), "M");
  c.L = as_count(require(doc, "L", ""), "L");
  c.rho_db = as_number(require(doc, "rho_db", ""), "rho_db");
  optional_field(doc, "random_draws", "", c.random_draws, as_count);
  optional_field(doc, "seed", "", c.seed, as_u64);
  optional_field(doc, "dpc_max_iters", "", c.dpc.max_iters, as_count);
  optional_field(doc, "dpc_tol", "", c.dpc.tol, as_number);

  if (auto it = doc.find("n_sweep"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("n_sweep", "expected an array of integers");
    for (const auto& v : *it) c.n_sweep.push_back(as_count(v, "n_sweep"));
  }
  if (auto it = doc.find("strategies"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("strategies", "expected an array of names");
    c.strategies.clear();
    for (const auto& v : *it) {
      const auto name = as_string(v, "strategies");
      const auto s = parse_strategy(name);
      if (!s) throw ConfigError("strategies", "unknown strategy \"" + name + "\"");
      c.strategies.push_back(*s);
    }
  }
  if (auto it = doc.find("normalization"); it != doc.end()) {
    const auto mode = as_string(*it, "normalization");
    if (mode == "joint") {
      c.normalization = NormalizationMode::Joint;
    } else if (mode == "per_user") {
      c.normalization = NormalizationMode::PerUser;
    } else {
      throw ConfigError("normalization", "expected \"joint\" or \"per_user\"");
    }
  }
  if (c.M < 1) throw ConfigError("M", "must be >= 1");
  c.channel_source = parse_source(require(doc, "channel_source", ""), c.M, base_dir);
  c.validate();
  return c;
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario_config(doc, path.parent_path());
}

}  // namespace antsel
