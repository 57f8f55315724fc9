#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rscma/assign.hpp"
#include "rscma/beamform.hpp"
#include "rscma/channel.hpp"
#include "rscma/ipm.hpp"
#include "rscma/rate.hpp"
#include "rscma/scma.hpp"
#include "rscma/topology.hpp"
#include "rscma/variables.hpp"

namespace rscma {

struct AsmOptions {
  int max_iterations = 50;
  // Absolute threshold on ‖W(t) − W(t−1)‖; defaults to relative_epsilon · ‖W(1)‖.
  std::optional<double> epsilon;
  double relative_epsilon = 1e-3;
  ipm::Options solver;
  FreezePolicy freeze = FreezePolicy::kPreviousAssignment;
  RateModel model = RateModel::kRobust;
  long node_limit = 200000;
  // Allowed links by link index; empty allows every link.
  std::vector<std::uint8_t> association_mask;
};

class InfeasibleScenarioError : public std::runtime_error {
 public:
  InfeasibleScenarioError(std::string cause, const std::string& what)
      : std::runtime_error(what), cause_(std::move(cause)) {}
  // "R_min" or "K_T".
  const std::string& cause() const { return cause_; }

 private:
  std::string cause_;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  std::string beamform_status;
  std::string assign_status;
  double w_change = 0.0;
  long nodes = 0;
  std::vector<double> rrh_power;
  std::vector<double> slice_rates;
};

struct Solution {
  BeamformerSet w;
  Assignment rho;
  RateReport report;
  std::vector<IterationRecord> trace;  // entry 0 is the initial point
  double objective = 0.0;              // Σ r̂
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  double wall_seconds = 0.0;
};

struct InitialPoint {
  Assignment rho;
  BeamformerSet w;
};

// Greedy ρ(0) with matched-filter beams, backed off per RRH until every fronthaul cap holds.
// Throws InfeasibleScenarioError when a slice minimum rate is still unmet.
InitialPoint initial_point(const NetworkConfig& config, const ChannelSet& channels, const CodebookMap& q,
                           RateModel model = RateModel::kRobust,
                           const std::vector<std::uint8_t>& association_mask = {});

// Alternates the beamforming and assignment steps. config is used after effective_config().
Solution run_asm(const NetworkConfig& config, const ChannelSet& channels, const CodebookMap& q,
                 const AsmOptions& options = {});

// Same loop from a given starting point.
Solution run_asm_from(const NetworkConfig& config, const ChannelSet& channels, const CodebookMap& q,
                      const InitialPoint& start, const AsmOptions& options = {});

struct Violation {
  std::string constraint;  // power, reuse, association, slice_rate, fronthaul
  int index = 0;
  double slack = 0.0;  // negative when violated
};

// Re-evaluates every hard constraint with the robust rates; lists those below -tol.
std::vector<Violation> check_feasibility(const BeamformerSet& w, const Assignment& rho, const NetworkConfig& config,
                                         const ChannelSet& channels, const CodebookMap& q, double tol = 1e-6);
std::vector<Violation> check_feasibility(const Solution& sol, const NetworkConfig& config,
                                         const ChannelSet& channels, const CodebookMap& q, double tol = 1e-6);

// (NoC₁, NoC₂) = (4BCK + 2B + V, 5BCK + C²B² + N + 2B + V).
std::pair<long, long> constraint_counts(const NetworkConfig& config);

nlohmann::json to_json(const Solution& sol);
// iteration,objective,beamform_status,assign_status,w_change,power_b...,slice_rate_v...
void write_trace_csv(std::ostream& os, const Solution& sol);

}  // namespace rscma
