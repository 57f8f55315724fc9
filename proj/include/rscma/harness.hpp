#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "rscma/asm.hpp"
#include "rscma/channel.hpp"
#include "rscma/topology.hpp"

namespace rscma {

enum class SweepVariable { kNone, kPower, kRmin, kSlices, kUsers, kKappa, kFading, kAccess };

const char* to_string(SweepVariable v);
SweepVariable parse_sweep_variable(const std::string& name);

// One experiment file. Sweep values are numbers, except "fading" (rayleigh | rician)
// and "access" (scma | ofdma).
struct ExperimentSpec {
  std::string name = "experiment";
  NetworkConfig scenario;
  FadingModel fading;
  SweepVariable variable = SweepVariable::kNone;
  std::vector<nlohmann::json> values;
  int seeds = 10;
  std::uint64_t base_seed = 1;
  std::string output;
  AsmOptions asm_options;
  int threads = 0;  // 0: hardware concurrency
};

ExperimentSpec spec_from_json(const nlohmann::json& j);
ExperimentSpec load_spec(const std::string& path);
// Empty when the spec is usable.
std::vector<std::string> validate_spec(const ExperimentSpec& spec);

struct RunRecord {
  std::string point;
  std::string variant;
  std::uint64_t seed = 0;
  bool feasible = false;
  double sum_rate = 0.0;  // 0 for infeasible runs
  int iterations = 0;
  std::string status;
};

struct PointSummary {
  std::string point;
  std::string variant;
  int runs = 0;
  int feasible = 0;
  double mean = 0.0;  // over all seeds, infeasible runs counting as 0
  double std_error = 0.0;
  double mean_iterations = 0.0;
};

struct ExperimentResult {
  std::string name;
  std::string variable;
  std::vector<PointSummary> points;  // sweep order, then variant order
  std::vector<RunRecord> runs;       // same order, then seed

  bool any_infeasible() const;
  const PointSummary& at(const std::string& point, const std::string& variant = "") const;
};

// Scenario and fading model for one sweep value.
struct PointSetup {
  NetworkConfig config;
  FadingModel fading;
};
PointSetup apply_sweep(const ExperimentSpec& spec, const nlohmann::json& value);

// One seeded run: topology, channels and ASM.
RunRecord run_single(const NetworkConfig& config, const FadingModel& fading, std::uint64_t seed,
                     const AsmOptions& options, bool nearest_association = false);

ExperimentResult run_experiment(const ExperimentSpec& spec);
// SCMA and OFDMA at every sweep point.
ExperimentResult compare_access(const ExperimentSpec& spec);
// Rayleigh and Rician on identical topologies and seeds; requires κ = 0.
ExperimentResult compare_channels(const ExperimentSpec& spec);
// Joint association ("proposed") against nearest-RRH association ("nearest").
ExperimentResult compare_association(const ExperimentSpec& spec);

// Link mask allowing only each user's nearest RRH.
std::vector<std::uint8_t> nearest_rrh_mask(const Topology& topology, const NetworkConfig& config);

// point,variant,runs,feasible,mean_sum_rate,std_error,mean_iterations
void write_summary_csv(std::ostream& os, const ExperimentResult& result);
// point,variant,seed,feasible,sum_rate,iterations,status
void write_runs_csv(std::ostream& os, const ExperimentResult& result);
nlohmann::json to_json(const ExperimentResult& result);

}  // namespace rscma
