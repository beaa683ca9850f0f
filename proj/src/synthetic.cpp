// Geometric cluster channel surrogate for large arrays.
//
// Each cluster is seen over a contiguous window of the array (raised-cosine
// edges), carries a lognormal power and a bundle of plane-wave subpaths with
// random delays. Co-located users share one scattering environment and differ
// only through their displacement from the site; well-separated users each get
// their own clusters. An optional spherical-wavefront LOS ray is added per user.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "antsel/channel.hpp"
#include "antsel/errors.hpp"
#include "antsel/random.hpp"

namespace antsel {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRollOff = 0.2;
constexpr double kMaxNormalizedDelay = 16.0;
constexpr double kClusterAzimuthHalfRange = kPi / 3.0;
// Clusters sit near the horizon; without some elevation the stacked rings of
// a cylinder would see identical channels.
constexpr double kClusterElevationHalfRange = kPi / 18.0;
constexpr int kPlacementAttempts = 10000;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

struct Subpath {
  double azimuth;
  double elevation;
  double delay;
  double phase;
  double user_side_azimuth;
  double amplitude;
  std::size_t cluster;
};

struct ScatterGroup {
  Point2 reference;
  std::vector<std::size_t> members;
  std::vector<std::vector<double>> windows;  // per cluster, per antenna
  std::vector<Subpath> subpaths;
};

std::vector<double> visibility_window(std::size_t antennas, double fraction,
                                      double floor_amp, std::mt19937_64& rng) {
  const double M = static_cast<double>(antennas);
  const double width = fraction * M;
  std::uniform_real_distribution<double> start_dist(0.0, M - width);
  const double start = fraction >= 1.0 ? 0.0 : start_dist(rng);
  const double stop = start + width;
  const double roll = kRollOff * width;
  std::vector<double> w(antennas);
  for (std::size_t m = 0; m < antennas; ++m) {
    const double x = static_cast<double>(m) + 0.5;
    const double outside = x < start ? start - x : (x > stop ? x - stop : 0.0);
    if (outside <= 0.0) {
      w[m] = 1.0;
    } else if (outside < roll) {
      w[m] = std::max(floor_amp, 0.5 * (1.0 + std::cos(kPi * outside / roll)));
    } else {
      w[m] = floor_amp;
    }
  }
  return w;
}

double azimuth_of(Point2 p) { return std::atan2(p.y, p.x); }

std::vector<Point2> place_users(const SyntheticSceneConfig& scene, std::size_t users,
                                const SyntheticModelParams& params,
                                std::mt19937_64& rng, Point2& site) {
  const double half_width = params.user_sector_half_width_deg * kPi / 180.0;
  std::uniform_real_distribution<double> dist_r(params.min_user_distance_m,
                                                params.max_user_distance_m);
  std::uniform_real_distribution<double> dist_phi(kPi / 2 - half_width,
                                                  kPi / 2 + half_width);
  auto draw = [&] {
    const double r = dist_r(rng);
    const double phi = dist_phi(rng);
    return Point2{r * std::cos(phi), r * std::sin(phi)};
  };

  std::vector<Point2> positions;
  if (const auto* co = std::get_if<CoLocated>(&scene.user_layout)) {
    const double extent = co->spacing_m * static_cast<double>(users - 1);
    if (extent > params.max_user_distance_m - params.min_user_distance_m) {
      throw ConfigError("user_layout",
                        "co-located users span " + std::to_string(extent) +
                            " m, more than the placement region allows");
    }
    site = draw();
    std::uniform_real_distribution<double> orient(0.0, 2 * kPi);
    const double gamma = orient(rng);
    for (std::size_t k = 0; k < users; ++k) {
      const double offset =
          (static_cast<double>(k) - 0.5 * static_cast<double>(users - 1)) *
          co->spacing_m;
      positions.push_back(
          {site.x + offset * std::cos(gamma), site.y + offset * std::sin(gamma)});
    }
    return positions;
  }

  const double min_spacing = std::get<WellSeparated>(scene.user_layout).min_spacing_m;
  for (std::size_t k = 0; k < users; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const Point2 candidate = draw();
      placed = std::all_of(positions.begin(), positions.end(), [&](Point2 p) {
        return std::hypot(p.x - candidate.x, p.y - candidate.y) >= min_spacing;
      });
      if (placed) positions.push_back(candidate);
    }
    if (!placed) {
      throw ConfigError("user_layout",
                        "cannot place " + std::to_string(users) +
                            " users with minimum spacing " +
                            std::to_string(min_spacing) + " m");
    }
  }
  site = positions.front();
  return positions;
}

}  // namespace

ArrayGeometry ArrayGeometry::linear(std::size_t antennas) {
  ArrayGeometry g;
  g.kind = ArrayKind::Linear;
  g.directivity_exponent = 0.0;
  for (std::size_t m = 0; m < antennas; ++m) {
    g.element_positions.push_back({0.5 * static_cast<double>(m), 0.0, 0.0});
    g.element_boresights.push_back(0.0);
  }
  return g;
}

ArrayGeometry ArrayGeometry::cylindrical(std::size_t antennas,
                                         double directivity_exponent) {
  if (antennas == 0 || antennas % 4 != 0) {
    throw ConfigError("geometry", "cylindrical array needs M divisible by 4, got " +
                                      std::to_string(antennas));
  }
  ArrayGeometry g;
  g.kind = ArrayKind::Cylindrical;
  g.directivity_exponent = directivity_exponent;
  const std::size_t per_ring = antennas / 4;
  const double radius = 0.5 * static_cast<double>(per_ring) / (2 * kPi);
  for (std::size_t ring = 0; ring < 4; ++ring) {
    for (std::size_t j = 0; j < per_ring; ++j) {
      const double psi = 2 * kPi * static_cast<double>(j) / static_cast<double>(per_ring);
      g.element_positions.push_back({radius * std::cos(psi), radius * std::sin(psi),
                                     0.5 * static_cast<double>(ring)});
      g.element_boresights.push_back(psi);
    }
  }
  g.validate();
  return g;
}

void ArrayGeometry::validate() const {
  const std::size_t M = element_positions.size();
  if (M == 0) throw ConfigError("geometry", "array has no elements");
  if (element_boresights.size() != M) {
    throw ConfigError("geometry", "boresight count differs from element count");
  }
  if (!(directivity_exponent >= 0.0) || !std::isfinite(directivity_exponent)) {
    throw ConfigError("geometry.directivity_exponent", "must be finite and >= 0");
  }
  if (kind == ArrayKind::Linear) {
    for (std::size_t m = 1; m < M; ++m) {
      const auto& a = element_positions[m - 1];
      const auto& b = element_positions[m];
      const double gap = std::sqrt((b.x - a.x) * (b.x - a.x) +
                                   (b.y - a.y) * (b.y - a.y) + (b.z - a.z) * (b.z - a.z));
      if (std::abs(gap - 0.5) > 1e-9) {
        throw ConfigError("geometry", "linear array spacing must be 0.5 wavelengths");
      }
    }
  } else if (M % 4 != 0) {
    throw ConfigError("geometry", "cylindrical array needs 4 rings of equal size");
  }
}

void SyntheticSceneConfig::validate() const {
  if (cluster_count == 0) throw ConfigError("scene.cluster_count", "must be >= 1");
  if (subpaths_per_cluster == 0) {
    throw ConfigError("scene.subpaths_per_cluster", "must be >= 1");
  }
  if (bandwidth_subcarriers == 0) {
    throw ConfigError("scene.bandwidth_subcarriers", "must be >= 1");
  }
  if (!(visibility_region_fraction > 0.0 && visibility_region_fraction <= 1.0)) {
    throw ConfigError("scene.visibility_region_fraction", "must lie in (0, 1]");
  }
  if (!(cluster_power_sigma_db >= 0.0) || !std::isfinite(cluster_power_sigma_db)) {
    throw ConfigError("scene.cluster_power_sigma_db", "must be finite and >= 0");
  }
  if (!(cluster_azimuth_spread_deg >= 0.0) ||
      !std::isfinite(cluster_azimuth_spread_deg)) {
    throw ConfigError("scene.cluster_azimuth_spread_deg", "must be finite and >= 0");
  }
  if (!std::isfinite(ricean_k_db)) {
    throw ConfigError("scene.ricean_k_db", "must be finite");
  }
  if (const auto* co = std::get_if<CoLocated>(&user_layout)) {
    if (!(co->spacing_m >= 0.0) || !std::isfinite(co->spacing_m)) {
      throw ConfigError("scene.user_layout.spacing_m", "must be finite and >= 0");
    }
  } else {
    const double s = std::get<WellSeparated>(user_layout).min_spacing_m;
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw ConfigError("scene.user_layout.min_spacing_m", "must be finite and >= 0");
    }
  }
  if (!fixed_cluster_azimuths_deg.empty() &&
      fixed_cluster_azimuths_deg.size() != cluster_count) {
    throw ConfigError("scene.fixed_cluster_azimuths_deg",
                      "must hold exactly cluster_count values");
  }
}

ChannelTensor gen_synthetic(const ArrayGeometry& geometry,
                            const SyntheticSceneConfig& scene, std::size_t users,
                            const SyntheticModelParams& params) {
  geometry.validate();
  scene.validate();
  const std::size_t M = geometry.size();
  const std::size_t L = scene.bandwidth_subcarriers;
  const std::size_t K = users;
  if (M < 2) throw PreconditionError("gen_synthetic requires at least 2 antennas");
  if (K == 0) throw DimensionError("gen_synthetic requires at least 1 user");

  auto rng = make_stream(scene.seed, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Element positions relative to the array centroid, in wavelengths.
  Vec3 centroid;
  for (const auto& p : geometry.element_positions) {
    centroid.x += p.x / static_cast<double>(M);
    centroid.y += p.y / static_cast<double>(M);
    centroid.z += p.z / static_cast<double>(M);
  }
  std::vector<Vec3> pos(M);
  for (std::size_t m = 0; m < M; ++m) {
    pos[m] = {geometry.element_positions[m].x - centroid.x,
              geometry.element_positions[m].y - centroid.y,
              geometry.element_positions[m].z - centroid.z};
  }

  const bool directive =
      geometry.kind == ArrayKind::Cylindrical && geometry.directivity_exponent > 0.0;
  const double floor_amp = std::pow(10.0, params.backlobe_floor_db / 20.0);
  auto pattern = [&](std::size_t m, double azimuth) {
    if (!directive) return 1.0;
    const double c = std::cos(azimuth - geometry.element_boresights[m]);
    const double amp = c > 0.0 ? std::pow(c, geometry.directivity_exponent) : 0.0;
    return std::max(amp, floor_amp);
  };

  std::vector<double> polarization(M, 1.0);
  if (geometry.kind == ArrayKind::Cylindrical && params.dual_polarized) {
    for (std::size_t m = 1; m < M; m += 2) {
      const double ratio_db = params.polarization_ratio_mean_db +
                              params.polarization_ratio_std_db * gauss(rng);
      polarization[m] = std::pow(10.0, -ratio_db / 20.0);
    }
  }

  Point2 site;
  const auto user_pos = place_users(scene, K, params, rng, site);

  const double ricean = db_to_linear(scene.ricean_k_db);
  const double los_share = scene.los ? ricean / (1.0 + ricean) : 0.0;
  const double scatter_share = 1.0 - los_share;

  std::vector<ScatterGroup> groups;
  if (std::holds_alternative<CoLocated>(scene.user_layout)) {
    ScatterGroup g;
    g.reference = site;
    for (std::size_t k = 0; k < K; ++k) g.members.push_back(k);
    groups.push_back(std::move(g));
  } else {
    for (std::size_t k = 0; k < K; ++k) {
      ScatterGroup g;
      g.reference = user_pos[k];
      g.members.push_back(k);
      groups.push_back(std::move(g));
    }
  }

  const double spread = scene.cluster_azimuth_spread_deg * kPi / 180.0;
  const double max_delay = kMaxNormalizedDelay / static_cast<double>(L);
  const std::size_t S = scene.subpaths_per_cluster;
  for (auto& g : groups) {
    const double ref_azimuth = azimuth_of(g.reference);
    std::vector<double> cluster_power(scene.cluster_count);
    for (auto& p : cluster_power) p = db_to_linear(scene.cluster_power_sigma_db * gauss(rng));
    double total = 0.0;
    for (double p : cluster_power) total += p;
    for (auto& p : cluster_power) p *= scatter_share / total;

    for (std::size_t c = 0; c < scene.cluster_count; ++c) {
      const double cluster_azimuth =
          scene.fixed_cluster_azimuths_deg.empty()
              ? ref_azimuth + kClusterAzimuthHalfRange * (2.0 * unit(rng) - 1.0)
              : scene.fixed_cluster_azimuths_deg[c] * kPi / 180.0;
      const double cluster_elevation = kClusterElevationHalfRange * (2.0 * unit(rng) - 1.0);
      g.windows.push_back(visibility_window(M, scene.visibility_region_fraction,
                                           std::pow(10.0, params.visibility_floor_db / 20.0),
                                           rng));
      const double amplitude = std::sqrt(cluster_power[c] / static_cast<double>(S));
      for (std::size_t s = 0; s < S; ++s) {
        Subpath sp;
        sp.azimuth = cluster_azimuth + spread * gauss(rng);
        sp.elevation = cluster_elevation + spread * gauss(rng);
        sp.delay = max_delay * unit(rng);
        sp.phase = 2 * kPi * unit(rng);
        sp.user_side_azimuth = 2 * kPi * unit(rng);
        sp.amplitude = amplitude;
        sp.cluster = c;
        g.subpaths.push_back(sp);
      }
    }
  }

  std::vector<cplx> entries(K * M * L, cplx(0.0, 0.0));
  auto at = [&](std::size_t l, std::size_t k, std::size_t m) -> cplx& {
    return entries[(l * K + k) * M + m];
  };

  const double wavelength = params.carrier_wavelength_m;
  std::vector<cplx> spatial(M);
  std::vector<cplx> spectral(L);
  for (const auto& g : groups) {
    for (const auto& sp : g.subpaths) {
      const double ce = std::cos(sp.elevation);
      const double ux = ce * std::cos(sp.azimuth), uy = ce * std::sin(sp.azimuth),
                   uz = std::sin(sp.elevation);
      const auto& window = g.windows[sp.cluster];
      for (std::size_t m = 0; m < M; ++m) {
        const double gain = window[m] * pattern(m, sp.azimuth) * polarization[m];
        spatial[m] = std::polar(gain, 2 * kPi * (ux * pos[m].x + uy * pos[m].y + uz * pos[m].z));
      }
      for (std::size_t l = 0; l < L; ++l) {
        spectral[l] = std::polar(1.0, -2 * kPi * sp.delay * static_cast<double>(l));
      }
      for (std::size_t k : g.members) {
        const double dx = user_pos[k].x - g.reference.x;
        const double dy = user_pos[k].y - g.reference.y;
        const double user_phase = 2 * kPi *
                                  (dx * std::cos(sp.user_side_azimuth) +
                                   dy * std::sin(sp.user_side_azimuth)) /
                                  wavelength;
        const cplx coeff = std::polar(sp.amplitude, sp.phase + user_phase);
        for (std::size_t l = 0; l < L; ++l) {
          const cplx cf = coeff * spectral[l];
          for (std::size_t m = 0; m < M; ++m) at(l, k, m) += cf * spatial[m];
        }
      }
    }
  }

  if (scene.los) {
    const double los_amp = std::sqrt(los_share);
    for (std::size_t k = 0; k < K; ++k) {
      const double azimuth = azimuth_of(user_pos[k]);
      for (std::size_t m = 0; m < M; ++m) {
        const double ex = pos[m].x * wavelength, ey = pos[m].y * wavelength,
                     ez = pos[m].z * wavelength;
        const double r = std::sqrt((user_pos[k].x - ex) * (user_pos[k].x - ex) +
                                   (user_pos[k].y - ey) * (user_pos[k].y - ey) + ez * ez);
        const cplx ray =
            std::polar(los_amp * pattern(m, azimuth) * polarization[m],
                       -2 * kPi * r / wavelength);
        for (std::size_t l = 0; l < L; ++l) at(l, k, m) += ray;
      }
    }
  }

  const char* kind = geometry.kind == ArrayKind::Linear ? "linear" : "cylindrical";
  return ChannelTensor(K, M, L, std::move(entries),
                       std::string("synthetic ") + kind +
                           " seed=" + std::to_string(scene.seed));
}

}  // namespace antsel
