#include "rscma/topology.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rscma/random.hpp"

namespace rscma {

double NetworkConfig::noise_power() const {
  if (noise_power_w) return *noise_power_w;
  const double psd_w_per_hz = std::pow(10.0, (noise_psd_dbm_per_hz - 30.0) / 10.0);
  return psd_w_per_hz * bandwidth_hz / num_subcarriers;
}

Dims NetworkConfig::dims() const {
  return Dims{num_rrh, num_subcarriers, num_users, num_codebooks, antennas};
}

NetworkConfig baseline_config() {
  NetworkConfig c;
  c.num_rrh = 4;
  c.num_users = 10;
  c.num_slices = 1;
  c.slice_sizes = {10};
  c.num_subcarriers = 8;
  c.num_codebooks = 8;
  c.antennas = 3;
  c.reuse_limit = 6;
  c.codeword_degree = 2;
  c.power_caps_w = {40.0, 3.0, 3.0, 3.0};
  c.fronthaul_caps = {20.0, 5.0, 5.0, 5.0};
  c.slice_min_rates = {0.0};
  c.error_bound = 0.05;
  return c;
}

std::vector<ConfigError> validate_config(const NetworkConfig& c) {
  std::vector<ConfigError> errors;
  auto fail = [&](std::string field, std::string message) {
    errors.push_back({std::move(field), std::move(message)});
  };

  if (c.num_rrh < 1) fail("num_rrh", "B >= 1 violated");
  if (c.num_users < 0) fail("num_users", "K >= 0 violated");
  if (c.num_subcarriers < 1) fail("num_subcarriers", "N >= 1 violated");
  if (c.num_codebooks < 1) fail("num_codebooks", "C >= 1 violated");
  if (c.antennas < 1) fail("antennas", "M_T >= 1 violated");
  if (c.reuse_limit < 1) fail("reuse_limit", "K_T >= 1 violated");
  if (c.codeword_degree < 1) fail("codeword_degree", "U >= 1 violated");
  if (c.codeword_degree >= c.num_subcarriers) fail("codeword_degree", "U < N violated");

  if (c.num_slices < 1) fail("num_slices", "V >= 1 violated");
  if (static_cast<int>(c.slice_sizes.size()) != c.num_slices)
    fail("slice_sizes", "length of K_v differs from V");
  for (int s : c.slice_sizes)
    if (s < 0) fail("slice_sizes", "K_v >= 0 violated");
  if (std::accumulate(c.slice_sizes.begin(), c.slice_sizes.end(), 0) != c.num_users)
    fail("slice_sizes", "ΣK_v ≠ K");
  if (static_cast<int>(c.slice_min_rates.size()) != c.num_slices)
    fail("slice_min_rates", "length of R_min differs from V");
  for (double r : c.slice_min_rates)
    if (!(r >= 0.0)) fail("slice_min_rates", "R_min >= 0 violated");

  if (static_cast<int>(c.power_caps_w.size()) != c.num_rrh)
    fail("power_caps_w", "length of P_max differs from B");
  for (double p : c.power_caps_w)
    if (!(p > 0.0)) fail("power_caps_w", "P_max > 0 violated");
  if (static_cast<int>(c.fronthaul_caps.size()) != c.num_rrh)
    fail("fronthaul_caps", "length of R_B differs from B");
  for (double r : c.fronthaul_caps)
    if (!(r > 0.0)) fail("fronthaul_caps", "R_B > 0 violated");

  if (!(c.noise_power() > 0.0)) fail("noise_power_w", "sigma > 0 violated");
  if (!(c.error_bound >= 0.0)) fail("error_bound", "kappa >= 0 violated");
  if (!(c.pathloss_exponent > 0.0)) fail("pathloss_exponent", "exponent > 0 violated");
  if (!(c.pathloss_reference_m > 0.0)) fail("pathloss_reference_m", "reference > 0 violated");
  if (!(c.min_distance_m > 0.0)) fail("min_distance_m", "minimum distance > 0 violated");
  if (!(c.macro_radius_m > 0.0)) fail("macro_radius_m", "radius > 0 violated");
  if (!(c.small_radius_m > 0.0) || !(c.small_radius_m < c.macro_radius_m))
    fail("small_radius_m", "0 < small radius < macro radius violated");
  if (!(c.bandwidth_hz > 0.0)) fail("bandwidth_hz", "bandwidth > 0 violated");
  if (!(c.edge_inner_fraction >= 0.0 && c.edge_inner_fraction < 1.0))
    fail("edge_inner_fraction", "0 <= fraction < 1 violated");
  return errors;
}

void require_valid(const NetworkConfig& config) {
  const auto errors = validate_config(config);
  if (errors.empty()) return;
  std::ostringstream os;
  os << "invalid network config:";
  for (const auto& e : errors) os << ' ' << e.field << ": " << e.message << ';';
  throw std::invalid_argument(os.str());
}

NetworkConfig effective_config(const NetworkConfig& config) {
  NetworkConfig c = config;
  if (c.access == AccessScheme::kOfdma) {
    c.num_codebooks = c.num_subcarriers;
    c.codeword_degree = 1;
    c.reuse_limit = 1;
  }
  return c;
}

std::vector<int> slice_assignment(const NetworkConfig& config) {
  std::vector<int> slice(static_cast<std::size_t>(std::max(config.num_users, 0)), 0);
  std::vector<int> left = config.slice_sizes;
  const int v_count = static_cast<int>(left.size());
  int v = 0;
  for (int k = 0; k < config.num_users; ++k) {
    for (int tries = 0; tries < v_count && left[v] == 0; ++tries) v = (v + 1) % v_count;
    if (v_count == 0 || left[v] == 0) throw std::invalid_argument("slice sizes do not cover all users");
    slice[k] = v;
    --left[v];
    v = (v + 1) % v_count;
  }
  return slice;
}

std::vector<int> even_slice_sizes(int users, int slices) {
  std::vector<int> sizes(static_cast<std::size_t>(slices), users / slices);
  for (int v = 0; v < users % slices; ++v) ++sizes[v];
  return sizes;
}

namespace {

AccessScheme parse_access(const std::string& s) {
  if (s == "scma") return AccessScheme::kScma;
  if (s == "ofdma") return AccessScheme::kOfdma;
  throw std::invalid_argument("unknown access scheme: " + s);
}

UserPlacement parse_placement(const std::string& s) {
  if (s == "uniform") return UserPlacement::kUniform;
  if (s == "cell_edge") return UserPlacement::kCellEdge;
  throw std::invalid_argument("unknown user placement: " + s);
}

}  // namespace

NetworkConfig config_from_json(const nlohmann::json& j) {
  NetworkConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  get("num_rrh", c.num_rrh);
  get("num_users", c.num_users);
  get("num_slices", c.num_slices);
  get("slice_sizes", c.slice_sizes);
  get("num_subcarriers", c.num_subcarriers);
  get("num_codebooks", c.num_codebooks);
  get("antennas", c.antennas);
  get("reuse_limit", c.reuse_limit);
  get("codeword_degree", c.codeword_degree);
  get("power_caps_w", c.power_caps_w);
  get("fronthaul_caps_bps_per_hz", c.fronthaul_caps);
  get("slice_min_rates_bps_per_hz", c.slice_min_rates);
  get("noise_psd_dbm_per_hz", c.noise_psd_dbm_per_hz);
  if (j.contains("noise_power_w") && !j.at("noise_power_w").is_null())
    c.noise_power_w = j.at("noise_power_w").get<double>();
  get("error_bound", c.error_bound);
  get("pathloss_exponent", c.pathloss_exponent);
  get("pathloss_reference_m", c.pathloss_reference_m);
  get("min_distance_m", c.min_distance_m);
  get("macro_radius_m", c.macro_radius_m);
  get("small_radius_m", c.small_radius_m);
  get("bandwidth_hz", c.bandwidth_hz);
  get("edge_inner_fraction", c.edge_inner_fraction);
  get("one_codebook_per_user", c.one_codebook_per_user);
  if (j.contains("access")) c.access = parse_access(j.at("access").get<std::string>());
  if (j.contains("user_placement"))
    c.placement = parse_placement(j.at("user_placement").get<std::string>());

  // Slice shorthand: only num_slices given -> even split; scalar min rate -> broadcast.
  if (j.contains("num_slices") && !j.contains("slice_sizes"))
    c.slice_sizes = even_slice_sizes(c.num_users, c.num_slices);
  if (!j.contains("num_slices") && j.contains("slice_sizes"))
    c.num_slices = static_cast<int>(c.slice_sizes.size());
  if (j.contains("num_users") && !j.contains("slice_sizes") && !j.contains("num_slices"))
    c.slice_sizes = even_slice_sizes(c.num_users, c.num_slices);
  if (j.contains("slice_min_rate_bps_per_hz"))
    c.slice_min_rates.assign(static_cast<std::size_t>(c.num_slices),
                             j.at("slice_min_rate_bps_per_hz").get<double>());
  else if (!j.contains("slice_min_rates_bps_per_hz"))
    c.slice_min_rates.assign(static_cast<std::size_t>(c.num_slices), 0.0);
  return c;
}

nlohmann::json to_json(const NetworkConfig& c) {
  nlohmann::json j;
  j["num_rrh"] = c.num_rrh;
  j["num_users"] = c.num_users;
  j["num_slices"] = c.num_slices;
  j["slice_sizes"] = c.slice_sizes;
  j["num_subcarriers"] = c.num_subcarriers;
  j["num_codebooks"] = c.num_codebooks;
  j["antennas"] = c.antennas;
  j["reuse_limit"] = c.reuse_limit;
  j["codeword_degree"] = c.codeword_degree;
  j["power_caps_w"] = c.power_caps_w;
  j["fronthaul_caps_bps_per_hz"] = c.fronthaul_caps;
  j["slice_min_rates_bps_per_hz"] = c.slice_min_rates;
  j["noise_psd_dbm_per_hz"] = c.noise_psd_dbm_per_hz;
  j["noise_power_w"] = c.noise_power_w ? nlohmann::json(*c.noise_power_w) : nlohmann::json();
  j["error_bound"] = c.error_bound;
  j["pathloss_exponent"] = c.pathloss_exponent;
  j["pathloss_reference_m"] = c.pathloss_reference_m;
  j["min_distance_m"] = c.min_distance_m;
  j["macro_radius_m"] = c.macro_radius_m;
  j["small_radius_m"] = c.small_radius_m;
  j["bandwidth_hz"] = c.bandwidth_hz;
  j["edge_inner_fraction"] = c.edge_inner_fraction;
  j["one_codebook_per_user"] = c.one_codebook_per_user;
  j["access"] = c.access == AccessScheme::kScma ? "scma" : "ofdma";
  j["user_placement"] = c.placement == UserPlacement::kUniform ? "uniform" : "cell_edge";
  return j;
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double Topology::distance(int b, int k) const {
  return rscma::distance(rrh_positions.at(b), user_positions.at(k));
}

int Topology::nearest_rrh(int k) const {
  int best = 0;
  for (int b = 1; b < static_cast<int>(rrh_positions.size()); ++b)
    if (distance(b, k) < distance(best, k)) best = b;
  return best;
}

namespace {

Point polar_point(double radius, double angle) {
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

Topology generate_topology(const NetworkConfig& config, std::uint64_t seed) {
  require_valid(config);
  Topology topo;
  const double big_r = config.macro_radius_m;
  const double small_r = config.small_radius_m;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  topo.rrh_positions.push_back({0.0, 0.0});
  auto rrh_rng = make_stream(seed, StreamTag::kRrhPlacement);
  for (int b = 1; b < config.num_rrh; ++b) {
    bool placed = false;
    for (int attempt = 0; attempt < 100000 && !placed; ++attempt) {
      // Small cells stay fully inside the macro disk.
      const Point p = polar_point((big_r - small_r) * std::sqrt(unit(rrh_rng)),
                                  2.0 * std::numbers::pi * unit(rrh_rng));
      placed = true;
      for (const Point& q : topo.rrh_positions)
        if (rscma::distance(p, q) < 2.0 * small_r) placed = false;
      if (placed) topo.rrh_positions.push_back(p);
    }
    if (!placed) throw std::runtime_error("could not place low-power RRHs with required separation");
  }

  const double inner = config.placement == UserPlacement::kCellEdge ? config.edge_inner_fraction : 0.0;
  for (int k = 0; k < config.num_users; ++k) {
    auto rng = make_stream(seed, StreamTag::kUserPlacement, {static_cast<std::uint64_t>(k)});
    const double u = unit(rng);
    const double angle = 2.0 * std::numbers::pi * unit(rng);
    double radius = big_r * std::sqrt(inner * inner + (1.0 - inner * inner) * u);
    radius = std::min(radius, big_r);
    topo.user_positions.push_back(polar_point(radius, angle));
  }
  topo.slice_of_user = slice_assignment(config);
  return topo;
}

}  // namespace rscma
