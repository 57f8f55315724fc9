#include "oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace rscma::oracle {
namespace {

double gain(std::span<const cplx> w, std::span<const cplx> h, const std::vector<cplx>* e) {
  cplx s = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) s += w[m] * (h[m] + (e ? (*e)[m] : cplx(0.0)));
  return std::norm(s);
}

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const cplx& x : v) s += std::norm(x);
  return s;
}

double protection(const ChannelSet& ch, int b, int n, int k) {
  const double kappa = ch.kappa();
  return kappa * kappa + 2.0 * kappa * std::sqrt(norm2(ch.h(b, n, k)));
}

// kind: 0 nominal, -1 lower, +1 upper.
double bound_sinr(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, const ChannelSet& ch,
                  double noise, int b, int c, int k, int kind) {
  if (!rho.at(b, c, k)) return 0.0;
  const Dims& d = rho.dims();
  double signal = 0.0, interference = 0.0;
  for (int n = 0; n < d.subcarriers; ++n) {
    if (!q.at(n, c)) continue;
    const double p = gain(w.w(b, n, k), ch.h(b, n, k), nullptr);
    const double t = protection(ch, b, n, k) * norm2(w.w(b, n, k));
    signal += kind < 0 ? std::max(0.0, p - t) : (kind > 0 ? p + t : p);
    for (int bb = 0; bb < d.rrh; ++bb)
      for (int kk = 0; kk < d.users; ++kk) {
        if ((bb == b && kk == k) || !rho.at(bb, c, kk)) continue;
        const double pi = gain(w.w(bb, n, kk), ch.h(bb, n, k), nullptr);
        const double ti = protection(ch, bb, n, k) * norm2(w.w(bb, n, kk));
        interference += kind < 0 ? pi + ti : (kind > 0 ? std::max(0.0, pi - ti) : pi);
      }
  }
  return signal / (interference + noise);
}

std::vector<cplx> ball_draw(int m, double kappa, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<cplx> e(static_cast<std::size_t>(m));
  double s = 0.0;
  do {
    s = 0.0;
    for (auto& x : e) {
      x = {g(rng), g(rng)};
      s += std::norm(x);
    }
  } while (s == 0.0);
  const double r = kappa * u(rng) / std::sqrt(s);
  for (auto& x : e) x *= r;
  s = norm2(e);
  if (std::sqrt(s) > kappa)
    for (auto& x : e) x *= kappa / std::sqrt(s) * (1.0 - 1e-15);
  return e;
}

}  // namespace

double true_sinr(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, const ChannelSet& channels,
                 const std::vector<std::vector<cplx>>& errors, double noise, int b, int c, int k) {
  if (!rho.at(b, c, k)) return 0.0;
  const Dims& d = rho.dims();
  const Dims& cd = channels.dims();
  auto err = [&](int bb, int n, int kk) { return &errors[cd.beam_index(bb, n, kk)]; };
  double signal = 0.0, interference = 0.0;
  for (int n = 0; n < d.subcarriers; ++n) {
    if (!q.at(n, c)) continue;
    signal += gain(w.w(b, n, k), channels.h(b, n, k), err(b, n, k));
    for (int bb = 0; bb < d.rrh; ++bb)
      for (int kk = 0; kk < d.users; ++kk) {
        if ((bb == b && kk == k) || !rho.at(bb, c, kk)) continue;
        interference += gain(w.w(bb, n, kk), channels.h(bb, n, k), err(bb, n, k));
      }
  }
  return signal / (interference + noise);
}

double lower_rate(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, const ChannelSet& channels,
                  double noise, int b, int c, int k) {
  return std::log2(1.0 + bound_sinr(w, rho, q, channels, noise, b, c, k, -1));
}

double upper_rate(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, const ChannelSet& channels,
                  double noise, int b, int c, int k) {
  return std::log2(1.0 + bound_sinr(w, rho, q, channels, noise, b, c, k, +1));
}

std::vector<LinkRange> oracle_worst_rate(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                                         const ChannelSet& channels, double noise, int draws, std::uint64_t seed,
                                         bool directed) {
  if (draws < 1) throw std::invalid_argument("draws must be positive");
  const Dims& cd = channels.dims();
  const double kappa = channels.kappa();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<LinkRange> out;
  for (const Link& l : rho.links())
    out.push_back({l, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  std::vector<std::vector<cplx>> errors(cd.num_beams());
  for (int draw = 0; draw < draws; ++draw) {
    const bool aim = directed && draw % 2 == 1;
    for (int b = 0; b < cd.rrh; ++b)
      for (int n = 0; n < cd.subcarriers; ++n)
        for (int k = 0; k < cd.users; ++k) {
          auto& e = errors[cd.beam_index(b, n, k)];
          e = ball_draw(cd.antennas, kappa, rng);
          if (!aim) continue;
          // Error along conj(w_{b,n,k}) scaled to the sphere, with the phase that
          // moves wᵀ(h̄+e) straight toward or away from the origin.
          auto wv = w.w(b, n, k);
          const double wn = std::sqrt(norm2(wv));
          if (wn == 0.0 || kappa == 0.0) continue;
          cplx s = 0.0;
          for (int m = 0; m < cd.antennas; ++m) s += wv[m] * channels.h(b, n, k)[m];
          const cplx phase = std::abs(s) > 0.0 ? s / std::abs(s) : cplx(1.0);
          const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
          for (int m = 0; m < cd.antennas; ++m)
            e[m] = sign * kappa * (1.0 - 1e-15) * phase * std::conj(wv[m]) / wn;
        }
    for (LinkRange& r : out) {
      const double rate = std::log2(1.0 + true_sinr(w, rho, q, channels, errors, noise, r.link.b, r.link.c, r.link.k));
      r.min_rate = std::min(r.min_rate, rate);
      r.max_rate = std::max(r.max_rate, rate);
    }
  }
  return out;
}

double true_objective(const BeamformerSet& beams, const Assignment& rho, const CodebookMap& q,
                      const ChannelSet& channels, const NetworkConfig& config, bool robust) {
  const Dims& d = rho.dims();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double noise = config.noise_power();
  for (int n = 0; n < d.subcarriers; ++n) {
    int count = 0;
    for (int b = 0; b < d.rrh; ++b)
      for (int c = 0; c < d.codebooks; ++c)
        for (int k = 0; k < d.users; ++k) count += rho.at(b, c, k) && q.at(n, c);
    if (count > config.reuse_limit) return nan;
  }
  for (int k = 0; k < d.users; ++k) {
    int rrhs = 0, links = 0;
    for (int b = 0; b < d.rrh; ++b) {
      int here = 0;
      for (int c = 0; c < d.codebooks; ++c) here += rho.at(b, c, k);
      rrhs += here > 0;
      links += here;
    }
    if (rrhs > 1 || (config.one_codebook_per_user && links > 1)) return nan;
  }
  BeamformerSet w(beams.dims());
  for (int b = 0; b < d.rrh; ++b)
    for (int c = 0; c < d.codebooks; ++c)
      for (int k = 0; k < d.users; ++k)
        if (rho.at(b, c, k))
          for (int n = 0; n < d.subcarriers; ++n)
            if (q.at(n, c)) std::copy(beams.w(b, n, k).begin(), beams.w(b, n, k).end(), w.w(b, n, k).begin());
  std::vector<int> slice_of(static_cast<std::size_t>(d.users));
  {
    // Round-robin membership honoring the slice sizes.
    std::vector<int> left = config.slice_sizes;
    int v = 0;
    for (int k = 0; k < d.users; ++k) {
      while (left[v] == 0) v = (v + 1) % config.num_slices;
      slice_of[k] = v;
      --left[v];
      v = (v + 1) % config.num_slices;
    }
  }
  double total = 0.0;
  std::vector<double> slice(static_cast<std::size_t>(config.num_slices), 0.0);
  for (int b = 0; b < d.rrh; ++b) {
    double power = 0.0, load = 0.0;
    for (int c = 0; c < d.codebooks; ++c)
      for (int k = 0; k < d.users; ++k) {
        if (!rho.at(b, c, k)) continue;
        for (int n = 0; n < d.subcarriers; ++n)
          if (q.at(n, c)) power += norm2(w.w(b, n, k));
        const int lo = robust ? -1 : 0, hi = robust ? 1 : 0;
        const double r = std::log2(1.0 + bound_sinr(w, rho, q, channels, noise, b, c, k, lo));
        load += std::log2(1.0 + bound_sinr(w, rho, q, channels, noise, b, c, k, hi));
        total += r;
        slice[slice_of[k]] += r;
      }
    if (power > config.power_caps_w[b] * (1.0 + 1e-9)) return nan;
    if (load > config.fronthaul_caps[b] * (1.0 + 1e-9)) return nan;
  }
  for (int v = 0; v < config.num_slices; ++v)
    if (slice[v] < config.slice_min_rates[v] - 1e-9 * std::max(1.0, config.slice_min_rates[v])) return nan;
  return total;
}

OracleAssignment oracle_best_assignment(const BeamformerSet& beams, const CodebookMap& q, const ChannelSet& channels,
                                        const NetworkConfig& config, const OracleBudget& budget, bool robust) {
  const Dims d = beams.dims();
  Dims ld = d;
  ld.codebooks = q.codebooks();
  const std::size_t n = ld.num_links();
  if (n >= 63 || (std::uint64_t{1} << n) > budget.max_patterns)
    throw BudgetExceeded("assignment enumeration exceeds the oracle budget");
  OracleAssignment best{Assignment(ld), 0.0, 0, false};
  Assignment rho(ld);
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t pattern = 0; pattern < total; ++pattern) {
    for (std::size_t i = 0; i < n; ++i) rho.set(i, (pattern >> i) & 1U);
    const double value = true_objective(beams, rho, q, channels, config, robust);
    ++best.patterns;
    if (std::isnan(value)) continue;
    if (!best.found || value > best.objective) {
      best.rho = rho;
      best.objective = value;
      best.found = true;
    }
  }
  return best;
}

}  // namespace rscma::oracle
