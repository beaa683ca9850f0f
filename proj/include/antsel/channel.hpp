#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace antsel {

using cplx = std::complex<double>;
using RowMajorMatrixXcd =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstSubcarrierView = Eigen::Map<const RowMajorMatrixXcd>;

/// Complex channel coefficients for K users, M antennas and L subcarriers.
///
/// Storage is subcarrier-major, then user, with the antenna index innermost,
/// so each subcarrier is a contiguous row-major K x M matrix. The tensor is
/// immutable once constructed; every entry is finite.
class ChannelTensor {
 public:
  ChannelTensor(std::size_t users, std::size_t antennas, std::size_t subcarriers,
                std::vector<cplx> entries, std::string meta = {});

  std::size_t users() const noexcept { return users_; }
  std::size_t antennas() const noexcept { return antennas_; }
  std::size_t subcarriers() const noexcept { return subcarriers_; }
  const std::string& meta() const noexcept { return meta_; }

  const cplx& operator()(std::size_t k, std::size_t m, std::size_t l) const {
    return entries_[(l * users_ + k) * antennas_ + m];
  }

  /// K x M channel matrix of subcarrier `l`.
  ConstSubcarrierView subcarrier(std::size_t l) const {
    return ConstSubcarrierView(entries_.data() + l * users_ * antennas_,
                               static_cast<Eigen::Index>(users_),
                               static_cast<Eigen::Index>(antennas_));
  }

  std::span<const cplx> entries() const noexcept { return entries_; }

  /// Mean of |entry|^2 over all K*M*L entries.
  double mean_power() const;

  friend bool operator==(const ChannelTensor& a, const ChannelTensor& b);

 private:
  std::size_t users_;
  std::size_t antennas_;
  std::size_t subcarriers_;
  std::vector<cplx> entries_;
  std::string meta_;
};

bool operator==(const ChannelTensor& a, const ChannelTensor& b);

// ---------------------------------------------------------------------------
// Array geometry and synthetic scenes

enum class ArrayKind { Linear, Cylindrical };

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Base-station array. Positions are in carrier wavelengths, boresights are
/// azimuths in radians.
struct ArrayGeometry {
  ArrayKind kind = ArrayKind::Linear;
  std::vector<Vec3> element_positions;
  std::vector<double> element_boresights;
  double directivity_exponent = 0.0;

  std::size_t size() const noexcept { return element_positions.size(); }

  /// Collinear omnidirectional elements along x, half-wavelength spacing.
  static ArrayGeometry linear(std::size_t antennas);

  /// Four stacked rings of M/4 outward-facing elements each, half-wavelength
  /// spacing along each ring and between rings. Requires M divisible by 4.
  static ArrayGeometry cylindrical(std::size_t antennas,
                                   double directivity_exponent = 2.0);

  void validate() const;
};

struct CoLocated {
  double spacing_m = 2.0;
};

struct WellSeparated {
  double min_spacing_m = 10.0;
};

using UserLayout = std::variant<CoLocated, WellSeparated>;

struct SyntheticSceneConfig {
  std::size_t cluster_count = 8;
  double cluster_azimuth_spread_deg = 5.0;
  double visibility_region_fraction = 0.5;
  double cluster_power_sigma_db = 4.0;
  bool los = false;
  double ricean_k_db = 6.0;
  UserLayout user_layout = WellSeparated{};
  std::size_t subpaths_per_cluster = 20;
  std::size_t bandwidth_subcarriers = 16;
  std::uint64_t seed = 0;
  /// Absolute cluster azimuths in degrees. When non-empty it must hold
  /// cluster_count values and replaces the random draw around each user.
  std::vector<double> fixed_cluster_azimuths_deg;

  void validate() const;
};

/// Physical constants of the synthetic model that are not scene-specific.
struct SyntheticModelParams {
  double carrier_wavelength_m = 0.1153;  // 2.6 GHz
  double backlobe_floor_db = -30.0;
  /// Amplitude a cluster keeps outside its visibility window. Exact zeros
  /// would leave some antennas dark for a user and make ZF singular.
  double visibility_floor_db = -30.0;
  double polarization_ratio_mean_db = 2.2;
  double polarization_ratio_std_db = 8.0;
  /// Cylindrical arrays only: odd ports are the weaker polarization.
  bool dual_polarized = true;
  /// Users are dropped between these distances from the array centre.
  double min_user_distance_m = 20.0;
  double max_user_distance_m = 150.0;
  /// Half-width of the sector (around broadside) in which users are placed.
  double user_sector_half_width_deg = 60.0;
};

ChannelTensor gen_iid_rayleigh(std::size_t users, std::size_t antennas,
                               std::size_t subcarriers, std::uint64_t seed);

ChannelTensor gen_synthetic(const ArrayGeometry& geometry,
                            const SyntheticSceneConfig& scene, std::size_t users,
                            const SyntheticModelParams& params = {});

// ---------------------------------------------------------------------------
// Normalization and statistics

enum class NormalizationMode { Joint, PerUser };

ChannelTensor normalize(const ChannelTensor& tensor, NormalizationMode mode);

/// (1/K) sum_k (1/L) sum_l |g_{k,m}(l)|^2 for every antenna m.
std::vector<double> per_antenna_avg_power(const ChannelTensor& tensor);

/// Mean |entry|^2 of each user's M*L entries.
std::vector<double> per_user_mean_power(const ChannelTensor& tensor);

/// 10 log10(max/min) of a power profile; +inf when the minimum is zero.
double power_spread_db(std::span<const double> powers);

// ---------------------------------------------------------------------------
// CTF1 files

void save_channel(const ChannelTensor& tensor, const std::filesystem::path& path);
ChannelTensor load_channel(const std::filesystem::path& path);

/// In-memory variants of the CTF1 codec.
std::vector<unsigned char> encode_ctf1(const ChannelTensor& tensor);
ChannelTensor decode_ctf1(std::span<const unsigned char> bytes,
                          std::string meta = {});

}  // namespace antsel
