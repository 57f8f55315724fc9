#pragma once

// Brute-force references for the test suite. Nothing here calls the rate module;
// SINRs are re-derived from the channel and beam tensors directly.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rscma/channel.hpp"
#include "rscma/rate.hpp"
#include "rscma/scma.hpp"
#include "rscma/topology.hpp"
#include "rscma/variables.hpp"

namespace rscma::oracle {

struct OracleBudget {
  std::uint64_t max_patterns = std::uint64_t{1} << 20;
  int draws = 10000;
  int grid = 64;
};

class BudgetExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

// SINR of link (b, c, k) when every channel h_{b',n,k'} is replaced by h̄ + e_{b',n,k'}.
// `errors` is indexed like ChannelSet beams, one vector per (b', n, k').
double true_sinr(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, const ChannelSet& channels,
                 const std::vector<std::vector<cplx>>& errors, double noise, int b, int c, int k);

struct LinkRange {
  Link link;
  double min_rate = 0.0;
  double max_rate = 0.0;
};

// Empirical min / max of the true rate over `draws` independent error realizations.
// With `directed`, half of the draws push every error along ±conj(w) of the beam it
// multiplies, which is where the extreme received powers sit.
std::vector<LinkRange> oracle_worst_rate(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                                         const ChannelSet& channels, double noise, int draws, std::uint64_t seed,
                                         bool directed = false);

// Worst-case (lower) rate of each link and the upper rate, recomputed from scratch.
double lower_rate(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, const ChannelSet& channels,
                  double noise, int b, int c, int k);
double upper_rate(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, const ChannelSet& channels,
                  double noise, int b, int c, int k);

struct OracleAssignment {
  Assignment rho;
  double objective = 0.0;  // true Σ r̂ at rho with the beams masked to rho
  std::uint64_t patterns = 0;
  bool found = false;
};

// True (non-frozen) objective of rho with beams masked to rho; NaN when any hard
// constraint fails under the true rates.
double true_objective(const BeamformerSet& beams, const Assignment& rho, const CodebookMap& q,
                      const ChannelSet& channels, const NetworkConfig& config, bool robust = true);

// Enumerates every 0/1 pattern over the links and keeps the best true objective.
// Throws BudgetExceeded when 2^links exceeds the budget.
OracleAssignment oracle_best_assignment(const BeamformerSet& beams, const CodebookMap& q, const ChannelSet& channels,
                                        const NetworkConfig& config, const OracleBudget& budget = {},
                                        bool robust = true);

}  // namespace rscma::oracle
