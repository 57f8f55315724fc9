#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "rscma/layout.hpp"
#include "rscma/topology.hpp"

namespace rscma {

struct FadingModel {
  enum class Kind { kRayleigh, kRician };
  Kind kind = Kind::kRayleigh;
  double rician_k_factor = 0.0;

  static FadingModel rayleigh() { return {}; }
  static FadingModel rician(double k_factor) { return {Kind::kRician, k_factor}; }
};

// Estimated channels h̄_{b,n,k} (length M_T each) with per-link protection bounds.
// Immutable once generated.
class ChannelSet {
 public:
  ChannelSet() = default;
  ChannelSet(Dims dims, double kappa);

  const Dims& dims() const { return dims_; }
  double kappa() const { return kappa_; }

  std::span<const cplx> h(int b, int n, int k) const;
  std::span<cplx> h(int b, int n, int k);
  double theta(int b, int n, int k) const { return theta_[dims_.beam_index(b, n, k)]; }

  // Recomputes every protection bound from the current estimates for a new kappa.
  void set_kappa(double kappa);

  bool operator==(const ChannelSet&) const = default;

 private:
  Dims dims_;
  double kappa_ = 0.0;
  std::vector<cplx> h_;
  std::vector<double> theta_;
};

double pathloss_gain(const NetworkConfig& config, double distance_m);

ChannelSet generate_channels(const Topology& topology, const NetworkConfig& config,
                             const FadingModel& model, std::uint64_t seed);

// Protection bound Θ = κ² + 2κ‖h̄‖; throws std::invalid_argument for κ < 0.
double uncertainty_bound(std::span<const cplx> h_bar, double kappa);

// Error vector with uniform direction and radius uniform in [0, κ].
std::vector<cplx> sample_error(int antennas, double kappa, std::uint64_t seed);

template <class Rng>
std::vector<cplx> sample_error(int antennas, double kappa, Rng& rng);

// CSV fixture format: a "# kappa=<value>" line, a header, then one row per
// (b, n, k, m) with the real and imaginary part printed at full precision.
void write_channels_csv(std::ostream& os, const ChannelSet& channels);
ChannelSet read_channels_csv(std::istream& is);

}  // namespace rscma

#include <cmath>
#include <random>
#include <stdexcept>

namespace rscma {

template <class Rng>
std::vector<cplx> sample_error(int antennas, double kappa, Rng& rng) {
  if (kappa < 0.0) throw std::invalid_argument("kappa must be non-negative");
  std::vector<cplx> e(static_cast<std::size_t>(antennas));
  if (kappa == 0.0) return e;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double norm2 = 0.0;
  while (norm2 == 0.0) {
    norm2 = 0.0;
    for (auto& v : e) {
      v = {gauss(rng), gauss(rng)};
      norm2 += std::norm(v);
    }
  }
  // Radius kept strictly inside [0, κ] after the division rounding.
  const double radius = std::min(kappa * unit(rng), kappa) / std::sqrt(norm2);
  for (auto& v : e) v *= radius;
  double check = 0.0;
  for (const auto& v : e) check += std::norm(v);
  if (std::sqrt(check) > kappa) {
    const double shrink = kappa / std::sqrt(check);
    for (auto& v : e) v *= shrink * (1.0 - 1e-15);
  }
  return e;
}

}  // namespace rscma
