#include "rscma/rate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace rscma {
namespace {

enum class Bound { kNominal, kLower, kUpper };

double received_power(std::span<const cplx> w, std::span<const cplx> h) {
  cplx s = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) s += w[m] * h[m];
  return std::norm(s);
}

double squared_norm(std::span<const cplx> w) {
  double s = 0.0;
  for (const cplx& v : w) s += std::norm(v);
  return s;
}

// Interference term seen by the receiver through `channel` from beam `w`.
double interference_term(std::span<const cplx> w, std::span<const cplx> channel, double theta, Bound bound) {
  const double p = received_power(w, channel);
  switch (bound) {
    case Bound::kNominal: return p;
    case Bound::kLower: return p + theta * squared_norm(w);
    case Bound::kUpper: return std::max(0.0, p - theta * squared_norm(w));
  }
  return p;
}

double sinr(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, const ChannelSet& ch,
            double noise, int b, int c, int k, Bound bound) {
  if (!rho.at(b, c, k)) return 0.0;
  const Dims& d = rho.dims();
  double numerator = 0.0;
  double interference = 0.0;
  for (int n : q.support(c)) {
    const auto wk = w.w(b, n, k);
    const double p = received_power(wk, ch.h(b, n, k));
    const double protection = ch.theta(b, n, k) * squared_norm(wk);
    switch (bound) {
      case Bound::kNominal: numerator += p; break;
      case Bound::kLower: numerator += std::max(0.0, p - protection); break;
      case Bound::kUpper: numerator += p + protection; break;
    }
    for (int kk = 0; kk < d.users; ++kk) {
      if (kk == k || !rho.at(b, c, kk)) continue;
      interference += interference_term(w.w(b, n, kk), ch.h(b, n, k), ch.theta(b, n, k), bound);
    }
    for (int bb = 0; bb < d.rrh; ++bb) {
      if (bb == b) continue;
      for (int kk = 0; kk < d.users; ++kk) {
        if (!rho.at(bb, c, kk)) continue;
        interference += interference_term(w.w(bb, n, kk), ch.h(bb, n, k), ch.theta(bb, n, k), bound);
      }
    }
  }
  return numerator / (interference + noise);
}

}  // namespace

double nominal_sinr(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                    const ChannelSet& channels, double noise, int b, int c, int k) {
  return sinr(w, rho, q, channels, noise, b, c, k, Bound::kNominal);
}

double worst_sinr_lower(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                        const ChannelSet& channels, double noise, int b, int c, int k) {
  return sinr(w, rho, q, channels, noise, b, c, k, Bound::kLower);
}

double worst_sinr_upper(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                        const ChannelSet& channels, double noise, int b, int c, int k) {
  return sinr(w, rho, q, channels, noise, b, c, k, Bound::kUpper);
}

double rate_of(double sinr) { return std::log2(1.0 + sinr); }

double rrh_power(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, int b) {
  const Dims& d = rho.dims();
  double total = 0.0;
  for (int c = 0; c < d.codebooks; ++c)
    for (int k = 0; k < d.users; ++k) {
      if (!rho.at(b, c, k)) continue;
      for (int n : q.support(c)) total += w.norm2(b, n, k);
    }
  return total;
}

RateReport aggregate_report(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                            const ChannelSet& channels, const NetworkConfig& config, RateModel model) {
  const Dims& d = rho.dims();
  const double noise = config.noise_power();
  const std::vector<int> slice_of = slice_assignment(config);
  RateReport report;
  report.slice_rates.assign(static_cast<std::size_t>(config.num_slices), 0.0);
  report.fronthaul_load.assign(static_cast<std::size_t>(d.rrh), 0.0);
  report.rrh_power.assign(static_cast<std::size_t>(d.rrh), 0.0);
  for (const Link& l : rho.links()) {
    LinkRate lr{l, 0.0, 0.0};
    if (model == RateModel::kNominal) {
      lr.lower = lr.upper = rate_of(nominal_sinr(w, rho, q, channels, noise, l.b, l.c, l.k));
    } else {
      lr.lower = rate_of(worst_sinr_lower(w, rho, q, channels, noise, l.b, l.c, l.k));
      lr.upper = rate_of(worst_sinr_upper(w, rho, q, channels, noise, l.b, l.c, l.k));
    }
    report.sum_rate += lr.lower;
    report.slice_rates[slice_of[l.k]] += lr.lower;
    report.fronthaul_load[l.b] += lr.upper;
    report.links.push_back(lr);
  }
  for (int b = 0; b < d.rrh; ++b) report.rrh_power[b] = rrh_power(w, rho, q, b);
  return report;
}

void write_report_csv(std::ostream& os, const RateReport& report) {
  os << "b,c,k,lower_rate,upper_rate\n" << std::setprecision(17);
  for (const LinkRate& l : report.links)
    os << l.link.b << ',' << l.link.c << ',' << l.link.k << ',' << l.lower << ',' << l.upper << '\n';
}

nlohmann::json to_json(const RateReport& report) {
  return {{"sum_rate", report.sum_rate},
          {"slice_rates", report.slice_rates},
          {"fronthaul_load", report.fronthaul_load},
          {"rrh_power", report.rrh_power},
          {"scheduled_links", report.links.size()}};
}

}  // namespace rscma
