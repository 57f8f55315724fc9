#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <sstream>

#include "rscma/harness.hpp"

using namespace rscma;
using nlohmann::json;

namespace {

json small_scenario() {
  return {{"num_rrh", 2},
          {"power_caps_w", {20.0, 3.0}},
          {"fronthaul_caps_bps_per_hz", {20.0, 5.0}},
          {"num_users", 4},
          {"num_subcarriers", 4},
          {"num_codebooks", 4},
          {"antennas", 2},
          {"pathloss_reference_m", 100.0},
          {"noise_power_w", 10.0},
          {"error_bound", 0.05}};
}

ExperimentSpec small_spec(json sweep = nullptr, int seeds = 3) {
  json j = {{"name", "small"}, {"scenario", small_scenario()}, {"seeds", seeds}, {"threads", 1}};
  if (!sweep.is_null()) j["sweep"] = sweep;
  return spec_from_json(j);
}

std::string csv(const ExperimentResult& r) {
  std::ostringstream os;
  write_summary_csv(os, r);
  write_runs_csv(os, r);
  return os.str();
}

}  // namespace

TEST_CASE("sweep variable names round-trip") {
  for (const char* name : {"none", "power", "r_min", "slices", "users", "kappa", "fading", "access"})
    CHECK(std::string(to_string(parse_sweep_variable(name))) == name);
  CHECK_THROWS_AS(parse_sweep_variable("temperature"), std::invalid_argument);
}

TEST_CASE("spec parsing") {
  const ExperimentSpec s = spec_from_json({{"name", "x"},
                                           {"scenario", small_scenario()},
                                           {"fading", {{"model", "rician"}, {"rician_k_factor", 5.0}}},
                                           {"sweep", {{"variable", "kappa"}, {"values", {0.0, 0.1}}}},
                                           {"seeds", 7},
                                           {"base_seed", 11},
                                           {"asm", {{"max_iterations", 9}, {"model", "nominal"}, {"epsilon", 0.5}}}});
  CHECK(s.name == "x");
  CHECK(s.scenario.num_rrh == 2);
  CHECK(s.fading.kind == FadingModel::Kind::kRician);
  CHECK(s.fading.rician_k_factor == 5.0);
  CHECK(s.variable == SweepVariable::kKappa);
  CHECK(s.values.size() == 2);
  CHECK(s.seeds == 7);
  CHECK(s.base_seed == 11);
  CHECK(s.asm_options.max_iterations == 9);
  CHECK(s.asm_options.model == RateModel::kNominal);
  CHECK(*s.asm_options.epsilon == 0.5);
  CHECK(validate_spec(s).empty());
  CHECK_THROWS_AS(spec_from_json({{"asm", {{"model", "optimistic"}}}}), std::invalid_argument);
  CHECK_THROWS_AS(spec_from_json({{"fading", {{"model", "nakagami"}}}}), std::invalid_argument);
}

TEST_CASE("validation lists every problem") {
  ExperimentSpec s = small_spec({{"variable", "kappa"}, {"values", {0.05, -1}}});
  s.seeds = 0;
  const auto errors = validate_spec(s);
  CHECK(errors.size() >= 2);
  bool seeds = false, point = false;
  for (const auto& e : errors) {
    seeds = seeds || e.rfind("seeds", 0) == 0;
    point = point || e.rfind("point -1", 0) == 0;
  }
  CHECK(seeds);
  CHECK(point);
  CHECK_THROWS_AS(run_experiment(s), std::invalid_argument);
  CHECK(!validate_spec(small_spec({{"variable", "power"}, {"values", json::array()}})).empty());
}

TEST_CASE("shipped scenario files validate") {
  int files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(RSCMA_SCENARIO_DIR)) {
    if (entry.path().extension() != ".json") continue;
    ++files;
    const ExperimentSpec s = load_spec(entry.path().string());
    INFO(entry.path().string());
    CHECK(validate_spec(s).empty());
    CHECK(s.seeds >= 10);
  }
  CHECK(files >= 8);
  CHECK_THROWS_AS(load_spec("/nonexistent/spec.json"), std::runtime_error);
}

TEST_CASE("sweeps change only their variable") {
  ExperimentSpec s = small_spec({{"variable", "power"}, {"values", {10, 20}}});
  CHECK(apply_sweep(s, 10).config.power_caps_w == std::vector<double>{10.0, 3.0});
  s.variable = SweepVariable::kUsers;
  s.scenario.num_slices = 2;
  s.scenario.slice_sizes = {2, 2};
  s.scenario.slice_min_rates = {0.0, 0.0};
  const PointSetup u = apply_sweep(s, 7);
  CHECK(u.config.num_users == 7);
  CHECK(u.config.slice_sizes == std::vector<int>{4, 3});
  s.variable = SweepVariable::kSlices;
  s.scenario.slice_min_rates = {0.5, 0.5};
  const PointSetup v = apply_sweep(s, 3);
  CHECK(v.config.slice_sizes == std::vector<int>{2, 1, 1});
  CHECK(v.config.slice_min_rates == std::vector<double>{0.5, 0.5, 0.5});
  s.variable = SweepVariable::kRmin;
  CHECK(apply_sweep(s, 1.5).config.slice_min_rates == std::vector<double>{1.5, 1.5});
  s.variable = SweepVariable::kKappa;
  CHECK(apply_sweep(s, 0.1).config.error_bound == 0.1);
  s.variable = SweepVariable::kFading;
  CHECK(apply_sweep(s, "rician").fading.kind == FadingModel::Kind::kRician);
  s.variable = SweepVariable::kAccess;
  CHECK(apply_sweep(s, "ofdma").config.access == AccessScheme::kOfdma);
  CHECK_THROWS_AS(apply_sweep(s, "cdma"), std::invalid_argument);
}

TEST_CASE("experiments are deterministic and independent of the thread count") {
  ExperimentSpec s = small_spec({{"variable", "kappa"}, {"values", {0.0, 0.1}}});
  const ExperimentResult a = run_experiment(s);
  s.threads = 3;
  const ExperimentResult b = run_experiment(s);
  CHECK(csv(a) == csv(b));
  REQUIRE(a.points.size() == 2);
  CHECK(a.runs.size() == 6);
  CHECK(a.at("0.0").runs == 3);
  CHECK_THROWS_AS(a.at("0.2"), std::out_of_range);
  CHECK(a.variable == "kappa");
}

TEST_CASE("summary statistics come from the per-seed rows") {
  const ExperimentResult r = run_experiment(small_spec(nullptr, 4));
  REQUIRE(r.points.size() == 1);
  const PointSummary& p = r.at("baseline");
  double sum = 0.0;
  int feasible = 0;
  for (const RunRecord& run : r.runs) {
    sum += run.sum_rate;
    feasible += run.feasible;
    if (!run.feasible) CHECK(run.sum_rate == 0.0);
  }
  CHECK(p.mean == doctest::Approx(sum / 4).epsilon(1e-14));
  CHECK(p.feasible == feasible);
  CHECK(p.std_error >= 0.0);
  CHECK(r.any_infeasible() == (feasible < 4));
}

TEST_CASE("unreachable minimum rates are recorded per run, not thrown") {
  ExperimentSpec s = small_spec(nullptr, 2);
  s.scenario.slice_min_rates = {500.0};
  const ExperimentResult r = run_experiment(s);
  CHECK(r.any_infeasible());
  CHECK(r.at("baseline").feasible == 0);
  for (const RunRecord& run : r.runs) CHECK(run.status == "infeasible_R_min");
}

TEST_CASE("identical fading on both sides gives identical rows") {
  const ExperimentSpec s = small_spec(nullptr, 2);
  const ExperimentResult a = run_experiment(s);
  const ExperimentResult b = run_experiment(s);
  CHECK(csv(a) == csv(b));
  const RunRecord one = run_single(s.scenario, s.fading, 1, s.asm_options);
  CHECK(one.sum_rate == a.runs[0].sum_rate);
  CHECK(one.iterations == a.runs[0].iterations);
}

TEST_CASE("channel comparison needs perfect CSI") {
  ExperimentSpec s = small_spec(nullptr, 2);
  CHECK_THROWS_AS(compare_channels(s), std::invalid_argument);
  s.scenario.error_bound = 0.0;
  const ExperimentResult r = compare_channels(s);
  CHECK(r.points.size() == 2);
  CHECK(r.at("baseline", "rayleigh").runs == 2);
  CHECK(r.at("baseline", "rician").runs == 2);
  // Paired runs share topology and seed.
  CHECK(r.runs[0].seed == r.runs[2].seed);
}

TEST_CASE("access comparison pairs SCMA and OFDMA") {
  const ExperimentResult r = compare_access(small_spec({{"variable", "power"}, {"values", {10}}}, 2));
  CHECK(r.points.size() == 2);
  CHECK(r.points[0].variant == "scma");
  CHECK(r.points[1].variant == "ofdma");
  CHECK_THROWS_AS(compare_access(small_spec({{"variable", "access"}, {"values", {"scma"}}})), std::invalid_argument);
}

TEST_CASE("a single RRH makes association comparison trivial") {
  ExperimentSpec s = small_spec(nullptr, 3);
  s.scenario.num_rrh = 1;
  s.scenario.power_caps_w = {20.0};
  s.scenario.fronthaul_caps = {20.0};
  const ExperimentResult r = compare_association(s);
  CHECK(r.at("baseline", "proposed").mean == r.at("baseline", "nearest").mean);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.runs[i].sum_rate == r.runs[i + 3].sum_rate);
}

TEST_CASE("nearest mask allows one RRH per user") {
  NetworkConfig c = baseline_config();
  const Topology t = generate_topology(c, 5);
  const auto mask = nearest_rrh_mask(t, c);
  const Dims d = c.dims();
  for (int k = 0; k < d.users; ++k)
    for (int b = 0; b < d.rrh; ++b)
      for (int cb = 0; cb < d.codebooks; ++cb)
        CHECK(mask[d.link_index(b, cb, k)] == (b == t.nearest_rrh(k) ? 1 : 0));
}

TEST_CASE("result JSON carries points and runs") {
  const ExperimentResult r = run_experiment(small_spec(nullptr, 2));
  const json j = to_json(r);
  CHECK(j["name"] == "small");
  CHECK(j["points"].size() == 1);
  CHECK(j["runs"].size() == 2);
  std::ostringstream os;
  write_summary_csv(os, r);
  CHECK(os.str().rfind("point,variant,runs,feasible,mean_sum_rate,std_error,mean_iterations\n", 0) == 0);
}
