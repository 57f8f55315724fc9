#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rscma/channel.hpp"
#include "rscma/rate.hpp"
#include "rscma/scma.hpp"
#include "rscma/tally.hpp"
#include "rscma/topology.hpp"
#include "rscma/variables.hpp"

namespace rscma {

// Which interference pattern the link coefficients are evaluated under.
enum class FreezePolicy {
  kPreviousAssignment,  // every link of ρ_prev except the receiving user's own
  kInterferenceFree,
};

class InfeasibleAssignmentError : public std::runtime_error {
 public:
  InfeasibleAssignmentError(std::string family, const std::string& what)
      : std::runtime_error(what), family_(std::move(family)) {}
  // Constraint family that cannot be met, e.g. "slice_rate".
  const std::string& family() const { return family_; }

 private:
  std::string family_;
};

// Binary program over ρ with every coefficient fixed:
//   max Σ ρ r̂  s.t. reuse, single-RRH association, per-RRH power and fronthaul, slice minimum rates.
struct AssignmentProblem {
  Dims dims;
  CodebookMap q;
  BeamformerSet beams;               // candidate beam per (b, n, k)
  std::vector<double> lower;         // r̂ per link index
  std::vector<double> upper;         // r̄ per link index
  std::vector<double> power;         // Σ_{n ∈ supp(c)} ‖w_{b,n,k}‖² per link index
  std::vector<std::uint8_t> allowed; // association mask per link index
  std::vector<double> power_caps;
  std::vector<double> fronthaul_caps;
  std::vector<double> slice_min_rates;
  std::vector<int> slice_of;
  int reuse_limit = 0;
  bool one_codebook_per_user = false;

  std::size_t num_vars() const { return lower.size(); }
  // Σ ρ r̂ summed in link-index order.
  double objective(const Assignment& rho) const;
  // Family name of the first violated constraint, empty when feasible.
  std::string first_violation(const Assignment& rho) const;
  bool feasible(const Assignment& rho) const { return first_violation(rho).empty(); }
  ConstraintTally tally() const;
};

// W with every zero beam replaced by a matched filter carrying P_b / (U (L_b + 1)),
// L_b being the number of links RRH b serves in rho and U the largest codebook degree.
BeamformerSet candidate_beams(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                              const ChannelSet& channels, const NetworkConfig& config);

// Keeps only beams used by rho.
BeamformerSet mask_beams(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q);

// `mask` lists allowed links by link index; empty allows every link.
AssignmentProblem build_assignment_problem(const BeamformerSet& w, const Assignment& rho_prev,
                                           const CodebookMap& q, const ChannelSet& channels,
                                           const NetworkConfig& config, RateModel model = RateModel::kRobust,
                                           FreezePolicy policy = FreezePolicy::kPreviousAssignment,
                                           const std::vector<std::uint8_t>& mask = {});

struct AssignmentResult {
  Assignment rho;
  double objective = 0.0;
  bool proven_optimal = false;
  long nodes = 0;
};

struct BnbOptions {
  long node_limit = 1L << 22;
  int threads = 1;
  std::optional<Assignment> incumbent;  // used when feasible
};

// Depth-first branch-and-bound. Among optima the lexicographically smallest 0/1
// pattern in link-index order is returned. Throws InfeasibleAssignmentError.
AssignmentResult solve_bnb(const AssignmentProblem& p, const BnbOptions& options = {});

// Full enumeration with the same tie-break. Throws std::length_error when 2^vars > cap.
AssignmentResult solve_exhaustive(const AssignmentProblem& p, std::uint64_t cap = std::uint64_t{1} << 20);

}  // namespace rscma
