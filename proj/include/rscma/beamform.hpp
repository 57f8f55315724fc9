#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "rscma/channel.hpp"
#include "rscma/ipm.hpp"
#include "rscma/rate.hpp"
#include "rscma/scma.hpp"
#include "rscma/tally.hpp"
#include "rscma/topology.hpp"
#include "rscma/variables.hpp"

namespace rscma {

// G(ψ, φ; ψᵗ, φᵗ): convex majorant of ψφ, tight at (ψᵗ, φᵗ).
double bilinear_surrogate(double psi, double phi, double psi_t, double phi_t);

// g(θ; θᵗ): tangent minorant of ‖θ‖², tight at θᵗ.
double quadratic_tangent(const std::array<double, 2>& theta, const std::array<double, 2>& theta_t);

// Epigraph auxiliaries per link (b, c, k). φ values are in watts.
struct AuxiliaryVars {
  AuxiliaryVars() = default;
  // Neutral values for every link: ψ1 = 1, φ1 = φ2 = noise, ψ2 = 0.
  AuxiliaryVars(Dims dims, double noise);

  Dims dims;
  std::vector<double> psi1;
  std::vector<double> phi1;
  std::vector<double> psi2;
  std::vector<double> phi2;
};

// Matched filter w ∝ conj(h̄) on every scheduled beam, with each RRH's budget split
// equally over its scheduled (link, subcarrier) slots.
BeamformerSet init_beamformers(const ChannelSet& channels, const Assignment& rho, const CodebookMap& q,
                               const NetworkConfig& config);

// Auxiliaries evaluated at W: ψ1 = 1 + γ̂, φ1 = worst interference + σ, ψ2 = r̄,
// φ2 = clamped interference + σ.
AuxiliaryVars tight_expansion_point(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                                    const ChannelSet& channels, const NetworkConfig& config,
                                    RateModel model = RateModel::kRobust);

struct ExpansionPoint {
  BeamformerSet w;
  AuxiliaryVars aux;
};

enum class ConstraintFamily {
  kPower,
  kSliceRate,
  kSignalEpigraph,
  kDenominator,
  kFronthaul,
  kUpperRateEpigraph,
  kUpperDenominator,
  kDomain,
};

const char* family_name(ConstraintFamily family);

struct ConstraintRecord {
  ConstraintFamily family;
  int index = 0;        // RRH, slice, flat link index or variable, depending on the family
  bool active = false;  // inactive records belong to unscheduled links or vacuous bounds
  ipm::ConvexFunction f;
};

// Convexified beamforming problem for a fixed assignment, in noise-normalized units.
// Each solver variable is the physical value divided by scale[i].
struct ConvexSubproblem {
  Dims dims;
  double noise = 1.0;
  int num_vars = 0;
  std::vector<int> beam_offset;  // per beam index: first of 2·M_T variables (re, then im), or -1
  std::vector<int> link_offset;  // per link index: ψ1, φ1, ψ2, φ2 variables, or -1
  std::vector<double> scale;
  std::vector<ConstraintRecord> records;
  ipm::ConvexFunction objective;  // −Σ log2 ψ1
  Eigen::VectorXd start;          // expansion point

  // Counts per family, excluding domain bounds.
  ConstraintTally tally() const;
  bool is_structurally_convex() const;
  ipm::Problem problem() const;
  // Value of every record at x; inactive records report 0.
  std::vector<double> constraint_values(const Eigen::VectorXd& x) const;
  void write_text(std::ostream& os) const;
};

// Throws std::invalid_argument if rho breaks the reuse or single-RRH rules, and
// ipm::InfeasibleError if a slice with a positive minimum rate has no scheduled link.
ConvexSubproblem build_subproblem(const Assignment& rho, const CodebookMap& q, const ChannelSet& channels,
                                  const NetworkConfig& config, const ExpansionPoint& expansion,
                                  RateModel model = RateModel::kRobust);

struct SubproblemSolution {
  BeamformerSet w;
  AuxiliaryVars aux;
  double objective = 0.0;  // Σ log2 ψ1
  ipm::Result stats;
};

// Throws ipm::InfeasibleError or ipm::NonConvergenceError from the solver.
SubproblemSolution solve_subproblem(const ConvexSubproblem& p, const ipm::Options& options = {});

// Extracts physical beams and auxiliaries from a solver point.
SubproblemSolution unpack_solution(const ConvexSubproblem& p, const Eigen::VectorXd& x);

// True when reuse and single-RRH association hold.
bool assignment_structurally_feasible(const Assignment& rho, const CodebookMap& q, int reuse_limit);

}  // namespace rscma
