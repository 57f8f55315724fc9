#include "rscma/channel.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "rscma/random.hpp"

namespace rscma {

ChannelSet::ChannelSet(Dims dims, double kappa)
    : dims_(dims),
      kappa_(kappa),
      h_(dims.num_beams() * static_cast<std::size_t>(dims.antennas)),
      theta_(dims.num_beams(), 0.0) {
  if (kappa < 0.0) throw std::invalid_argument("kappa must be non-negative");
}

std::span<const cplx> ChannelSet::h(int b, int n, int k) const {
  const std::size_t m = static_cast<std::size_t>(dims_.antennas);
  return {h_.data() + dims_.beam_index(b, n, k) * m, m};
}

std::span<cplx> ChannelSet::h(int b, int n, int k) {
  const std::size_t m = static_cast<std::size_t>(dims_.antennas);
  return {h_.data() + dims_.beam_index(b, n, k) * m, m};
}

void ChannelSet::set_kappa(double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("kappa must be non-negative");
  kappa_ = kappa;
  for (int b = 0; b < dims_.rrh; ++b)
    for (int n = 0; n < dims_.subcarriers; ++n)
      for (int k = 0; k < dims_.users; ++k)
        theta_[dims_.beam_index(b, n, k)] = uncertainty_bound(h(b, n, k), kappa);
}

double uncertainty_bound(std::span<const cplx> h_bar, double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("kappa must be non-negative");
  double norm2 = 0.0;
  for (const cplx& v : h_bar) norm2 += std::norm(v);
  return kappa * kappa + 2.0 * kappa * std::sqrt(norm2);
}

double pathloss_gain(const NetworkConfig& config, double distance_m) {
  const double d = std::max(distance_m, config.min_distance_m);
  return std::pow(d / config.pathloss_reference_m, -config.pathloss_exponent);
}

ChannelSet generate_channels(const Topology& topology, const NetworkConfig& config,
                             const FadingModel& model, std::uint64_t seed) {
  if (model.rician_k_factor < 0.0) throw std::invalid_argument("Rician k-factor must be >= 0");
  Dims dims = config.dims();
  dims.codebooks = 0;  // channels do not depend on the codebook layout
  ChannelSet set(dims, config.error_bound);
  const bool rician = model.kind == FadingModel::Kind::kRician;
  const double los_amp = rician ? std::sqrt(model.rician_k_factor / (model.rician_k_factor + 1.0)) : 0.0;
  const double nlos_amp = rician ? std::sqrt(1.0 / (model.rician_k_factor + 1.0)) : 1.0;
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int b = 0; b < dims.rrh; ++b) {
    for (int k = 0; k < dims.users; ++k) {
      const double amp = std::sqrt(pathloss_gain(config, topology.distance(b, k)));
      const Point& rp = topology.rrh_positions[b];
      const Point& up = topology.user_positions[k];
      const double departure = std::atan2(up.y - rp.y, up.x - rp.x);
      for (int n = 0; n < dims.subcarriers; ++n) {
        const std::initializer_list<std::uint64_t> idx = {
            static_cast<std::uint64_t>(b), static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k)};
        auto rng = make_stream(seed, StreamTag::kFading, idx);
        auto phase_rng = make_stream(seed, StreamTag::kLosPhase, idx);
        const double phase0 = 2.0 * std::numbers::pi * unit(phase_rng);
        auto h = set.h(b, n, k);
        for (int m = 0; m < dims.antennas; ++m) {
          const cplx scatter(gauss(rng), gauss(rng));
          cplx fading = nlos_amp * scatter;
          if (rician)
            fading += los_amp * std::polar(1.0, phase0 + std::numbers::pi * m * std::sin(departure));
          h[m] = amp * fading;
        }
      }
    }
  }
  set.set_kappa(config.error_bound);
  return set;
}

std::vector<cplx> sample_error(int antennas, double kappa, std::uint64_t seed) {
  auto rng = make_stream(seed, StreamTag::kError);
  return sample_error(antennas, kappa, rng);
}

void write_channels_csv(std::ostream& os, const ChannelSet& channels) {
  const Dims& d = channels.dims();
  os << "# kappa=" << std::setprecision(17) << channels.kappa() << " rrh=" << d.rrh
     << " subcarriers=" << d.subcarriers << " users=" << d.users << " antennas=" << d.antennas << '\n';
  os << "b,n,k,m,re,im\n";
  for (int b = 0; b < d.rrh; ++b)
    for (int n = 0; n < d.subcarriers; ++n)
      for (int k = 0; k < d.users; ++k) {
        auto h = channels.h(b, n, k);
        for (int m = 0; m < d.antennas; ++m)
          os << b << ',' << n << ',' << k << ',' << m << ',' << std::setprecision(17) << h[m].real() << ','
             << h[m].imag() << '\n';
      }
}

ChannelSet read_channels_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
    throw std::runtime_error("channel CSV: missing metadata line");
  Dims d;
  double kappa = 0.0;
  {
    std::istringstream meta(line.substr(2));
    std::string tok;
    while (meta >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "kappa") kappa = std::stod(val);
      else if (key == "rrh") d.rrh = std::stoi(val);
      else if (key == "subcarriers") d.subcarriers = std::stoi(val);
      else if (key == "users") d.users = std::stoi(val);
      else if (key == "antennas") d.antennas = std::stoi(val);
    }
  }
  d.codebooks = 0;
  if (!std::getline(is, line)) throw std::runtime_error("channel CSV: missing header");
  ChannelSet set(d, kappa);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field[6];
    for (auto& f : field)
      if (!std::getline(row, f, ',')) throw std::runtime_error("channel CSV: short row");
    const int b = std::stoi(field[0]), n = std::stoi(field[1]), k = std::stoi(field[2]), m = std::stoi(field[3]);
    if (b < 0 || b >= d.rrh || n < 0 || n >= d.subcarriers || k < 0 || k >= d.users || m < 0 ||
        m >= d.antennas)
      throw std::runtime_error("channel CSV: index out of range");
    set.h(b, n, k)[m] = cplx(std::stod(field[4]), std::stod(field[5]));
    ++rows;
  }
  if (rows != d.num_beams() * static_cast<std::size_t>(d.antennas))
    throw std::runtime_error("channel CSV: row count mismatch");
  set.set_kappa(kappa);
  return set;
}

}  // namespace rscma
