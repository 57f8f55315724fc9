#pragma once

#include <iosfwd>
#include <vector>

#include "json.hpp"
#include "rscma/channel.hpp"
#include "rscma/scma.hpp"
#include "rscma/topology.hpp"
#include "rscma/variables.hpp"

namespace rscma {

// kNominal treats every protection bound as zero, so lower = upper = nominal rate.
enum class RateModel { kRobust, kNominal };

// SINR of link (b, c, k) with `channels` taken as the true channel; Θ is ignored.
double nominal_sinr(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                    const ChannelSet& channels, double noise, int b, int c, int k);

// Worst case over the uncertainty ball: clamped signal, inflated interference.
double worst_sinr_lower(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                        const ChannelSet& channels, double noise, int b, int c, int k);

// Best case over the uncertainty ball: inflated signal, clamped interference.
double worst_sinr_upper(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                        const ChannelSet& channels, double noise, int b, int c, int k);

// log2(1 + γ).
double rate_of(double sinr);

// Σ_{c,k,n} q_{n,c} ρ_{b,c,k} ‖w_{b,n,k}‖².
double rrh_power(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, int b);

struct LinkRate {
  Link link;
  double lower = 0.0;  // r̂
  double upper = 0.0;  // r̄
};

struct RateReport {
  std::vector<LinkRate> links;  // scheduled links in (b, c, k) order
  double sum_rate = 0.0;
  std::vector<double> slice_rates;
  std::vector<double> fronthaul_load;
  std::vector<double> rrh_power;
};

RateReport aggregate_report(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                            const ChannelSet& channels, const NetworkConfig& config,
                            RateModel model = RateModel::kRobust);

// One row per scheduled link: b,c,k,lower_rate,upper_rate.
void write_report_csv(std::ostream& os, const RateReport& report);
nlohmann::json to_json(const RateReport& report);

}  // namespace rscma
