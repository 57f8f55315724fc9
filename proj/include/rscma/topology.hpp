#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rscma/layout.hpp"

namespace rscma {

enum class AccessScheme { kScma, kOfdma };
enum class UserPlacement { kUniform, kCellEdge };

// Scenario parameters. Physical quantities are SI: watts, meters, hertz; rates in bps/Hz.
struct NetworkConfig {
  int num_rrh = 4;
  int num_users = 10;
  int num_slices = 1;
  std::vector<int> slice_sizes{10};
  int num_subcarriers = 8;
  int num_codebooks = 8;
  int antennas = 3;
  int reuse_limit = 6;
  int codeword_degree = 2;

  std::vector<double> power_caps_w{40.0, 3.0, 3.0, 3.0};
  std::vector<double> fronthaul_caps{20.0, 5.0, 5.0, 5.0};
  std::vector<double> slice_min_rates{0.0};

  double noise_psd_dbm_per_hz = -174.0;
  std::optional<double> noise_power_w;  // overrides the PSD-derived value
  double error_bound = 0.05;            // kappa
  double pathloss_exponent = 3.0;
  double pathloss_reference_m = 1.0;
  double min_distance_m = 1.0;
  double macro_radius_m = 500.0;
  double small_radius_m = 20.0;
  double bandwidth_hz = 10e6;

  AccessScheme access = AccessScheme::kScma;
  UserPlacement placement = UserPlacement::kUniform;
  double edge_inner_fraction = 0.8;  // cell-edge users lie in [f R, R]
  bool one_codebook_per_user = false;

  // Per-subcarrier noise power in watts.
  double noise_power() const;
  Dims dims() const;
};

// Baseline: 1 macro + 3 small RRHs, M_T = 3, K_T = 6, U = 2, N = 8.
NetworkConfig baseline_config();

struct ConfigError {
  std::string field;
  std::string message;
};

std::vector<ConfigError> validate_config(const NetworkConfig& config);

// Throws std::invalid_argument listing every violation.
void require_valid(const NetworkConfig& config);

// OFDMA runs the same pipeline with an identity subcarrier map and reuse limit 1.
NetworkConfig effective_config(const NetworkConfig& config);

// Round-robin slice membership by user index, honoring slice_sizes.
std::vector<int> slice_assignment(const NetworkConfig& config);

// Slice sizes for K users split as evenly as possible over V slices.
std::vector<int> even_slice_sizes(int users, int slices);

NetworkConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NetworkConfig& config);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point& a, const Point& b);

struct Topology {
  std::vector<Point> rrh_positions;
  std::vector<Point> user_positions;
  std::vector<int> slice_of_user;

  double distance(int b, int k) const;
  int nearest_rrh(int k) const;
};

Topology generate_topology(const NetworkConfig& config, std::uint64_t seed);

}  // namespace rscma
