#include "rscma/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "rscma/scma.hpp"

namespace rscma {

namespace {

struct NamedVariable {
  SweepVariable v;
  const char* name;
};

constexpr NamedVariable kVariables[] = {
    {SweepVariable::kNone, "none"},   {SweepVariable::kPower, "power"},   {SweepVariable::kRmin, "r_min"},
    {SweepVariable::kSlices, "slices"}, {SweepVariable::kUsers, "users"}, {SweepVariable::kKappa, "kappa"},
    {SweepVariable::kFading, "fading"}, {SweepVariable::kAccess, "access"},
};

std::string label(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_null()) return "baseline";
  return value.dump();
}

FadingModel parse_fading(const std::string& name, double k_factor) {
  if (name == "rayleigh") return {FadingModel::Kind::kRayleigh, k_factor};
  if (name == "rician") return {FadingModel::Kind::kRician, k_factor};
  throw std::invalid_argument("unknown fading model '" + name + "'");
}

struct Variant {
  std::string name;
  PointSetup (*apply)(PointSetup);
  bool nearest = false;
};

PointSetup as_is(PointSetup s) { return s; }
PointSetup to_scma(PointSetup s) {
  s.config.access = AccessScheme::kScma;
  return s;
}
PointSetup to_ofdma(PointSetup s) {
  s.config.access = AccessScheme::kOfdma;
  return s;
}
PointSetup to_rayleigh(PointSetup s) {
  s.fading.kind = FadingModel::Kind::kRayleigh;
  return s;
}
PointSetup to_rician(PointSetup s) {
  s.fading.kind = FadingModel::Kind::kRician;
  return s;
}

ExperimentResult run_variants(const ExperimentSpec& spec, const std::vector<Variant>& variants) {
  if (const auto errors = validate_spec(spec); !errors.empty()) {
    std::string msg = "invalid experiment spec:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  std::vector<nlohmann::json> values = spec.values;
  if (spec.variable == SweepVariable::kNone || values.empty()) values = {nlohmann::json()};

  struct Job {
    std::size_t point;
    PointSetup setup;
    bool nearest;
    std::uint64_t seed;
    std::string point_label;
    std::string variant;
  };
  std::vector<Job> jobs;
  std::size_t points = 0;
  for (const auto& value : values) {
    const PointSetup base = apply_sweep(spec, value);
    for (const Variant& var : variants) {
      for (int s = 0; s < spec.seeds; ++s)
        jobs.push_back({points, var.apply(base), var.nearest, spec.base_seed + static_cast<std::uint64_t>(s),
                        label(value), var.name});
      ++points;
    }
  }

  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      records[j] = run_single(job.setup.config, job.setup.fading, job.seed, spec.asm_options, job.nearest);
      records[j].point = job.point_label;
      records[j].variant = job.variant;
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t threads =
      std::min<std::size_t>(jobs.size(), spec.threads > 0 ? static_cast<std::size_t>(spec.threads) : hw);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  result.name = spec.name;
  result.variable = to_string(spec.variable);
  result.runs = records;
  result.points.resize(points);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    PointSummary& ps = result.points[jobs[j].point];
    ps.point = jobs[j].point_label;
    ps.variant = jobs[j].variant;
    ++ps.runs;
    ps.feasible += records[j].feasible ? 1 : 0;
    ps.mean += records[j].sum_rate;
    ps.mean_iterations += records[j].iterations;
  }
  for (PointSummary& ps : result.points) {
    if (ps.runs == 0) continue;
    ps.mean /= ps.runs;
    ps.mean_iterations /= ps.runs;
  }
  std::vector<double> ss(points, 0.0);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const double dev = records[j].sum_rate - result.points[jobs[j].point].mean;
    ss[jobs[j].point] += dev * dev;
  }
  for (std::size_t i = 0; i < points; ++i) {
    const int n = result.points[i].runs;
    result.points[i].std_error = n > 1 ? std::sqrt(ss[i] / (n - 1) / n) : 0.0;
  }
  return result;
}

}  // namespace

const char* to_string(SweepVariable v) {
  for (const auto& nv : kVariables)
    if (nv.v == v) return nv.name;
  return "none";
}

SweepVariable parse_sweep_variable(const std::string& name) {
  for (const auto& nv : kVariables)
    if (name == nv.name) return nv.v;
  throw std::invalid_argument("unknown sweep variable '" + name + "'");
}

ExperimentSpec spec_from_json(const nlohmann::json& j) {
  ExperimentSpec s;
  s.name = j.value("name", s.name);
  if (j.contains("scenario")) s.scenario = config_from_json(j.at("scenario"));
  if (j.contains("fading")) {
    const auto& f = j.at("fading");
    s.fading = parse_fading(f.value("model", std::string("rayleigh")), f.value("rician_k_factor", 3.0));
  } else {
    s.fading.rician_k_factor = 3.0;
  }
  if (j.contains("sweep")) {
    const auto& sw = j.at("sweep");
    s.variable = parse_sweep_variable(sw.at("variable").get<std::string>());
    for (const auto& v : sw.at("values")) s.values.push_back(v);
  }
  s.seeds = j.value("seeds", s.seeds);
  s.base_seed = j.value("base_seed", s.base_seed);
  s.output = j.value("output", s.output);
  s.threads = j.value("threads", s.threads);
  if (j.contains("asm")) {
    const auto& a = j.at("asm");
    AsmOptions& o = s.asm_options;
    o.max_iterations = a.value("max_iterations", o.max_iterations);
    if (a.contains("epsilon") && !a.at("epsilon").is_null()) o.epsilon = a.at("epsilon").get<double>();
    o.relative_epsilon = a.value("relative_epsilon", o.relative_epsilon);
    o.solver.tolerance = a.value("tolerance", o.solver.tolerance);
    o.solver.max_iterations = a.value("solver_max_iterations", o.solver.max_iterations);
    o.node_limit = a.value("node_limit", o.node_limit);
    const std::string model = a.value("model", std::string("robust"));
    if (model == "robust") o.model = RateModel::kRobust;
    else if (model == "nominal") o.model = RateModel::kNominal;
    else throw std::invalid_argument("unknown rate model '" + model + "'");
    const std::string freeze = a.value("freeze", std::string("previous"));
    if (freeze == "previous") o.freeze = FreezePolicy::kPreviousAssignment;
    else if (freeze == "interference_free") o.freeze = FreezePolicy::kInterferenceFree;
    else throw std::invalid_argument("unknown freeze policy '" + freeze + "'");
  }
  return s;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file '" + path + "'");
  return spec_from_json(nlohmann::json::parse(in));
}

PointSetup apply_sweep(const ExperimentSpec& spec, const nlohmann::json& value) {
  PointSetup s{spec.scenario, spec.fading};
  NetworkConfig& c = s.config;
  switch (spec.variable) {
    case SweepVariable::kNone:
      break;
    case SweepVariable::kPower:
      if (c.power_caps_w.empty()) throw std::invalid_argument("scenario has no power caps");
      c.power_caps_w[0] = value.get<double>();
      break;
    case SweepVariable::kRmin:
      c.slice_min_rates.assign(static_cast<std::size_t>(c.num_slices), value.get<double>());
      break;
    case SweepVariable::kSlices: {
      const double rmin = c.slice_min_rates.empty() ? 0.0 : c.slice_min_rates.front();
      c.num_slices = value.get<int>();
      c.slice_sizes = even_slice_sizes(c.num_users, c.num_slices);
      c.slice_min_rates.assign(static_cast<std::size_t>(c.num_slices), rmin);
      break;
    }
    case SweepVariable::kUsers:
      c.num_users = value.get<int>();
      c.slice_sizes = even_slice_sizes(c.num_users, c.num_slices);
      break;
    case SweepVariable::kKappa:
      c.error_bound = value.get<double>();
      break;
    case SweepVariable::kFading:
      s.fading = parse_fading(value.get<std::string>(), spec.fading.rician_k_factor);
      break;
    case SweepVariable::kAccess: {
      const std::string a = value.get<std::string>();
      if (a == "scma") c.access = AccessScheme::kScma;
      else if (a == "ofdma") c.access = AccessScheme::kOfdma;
      else throw std::invalid_argument("unknown access scheme '" + a + "'");
      break;
    }
  }
  return s;
}

std::vector<std::string> validate_spec(const ExperimentSpec& spec) {
  std::vector<std::string> errors;
  if (spec.seeds < 1) errors.push_back("seeds: must be at least 1");
  if (spec.variable != SweepVariable::kNone && spec.values.empty()) errors.push_back("sweep.values: empty");
  if (spec.asm_options.max_iterations < 1) errors.push_back("asm.max_iterations: must be at least 1");
  if (spec.asm_options.epsilon && !(*spec.asm_options.epsilon > 0.0)) errors.push_back("asm.epsilon: must be > 0");
  std::vector<nlohmann::json> values = spec.values;
  if (values.empty()) values = {nlohmann::json()};
  for (const auto& v : values) {
    try {
      const PointSetup s = apply_sweep(spec, v);
      for (const ConfigError& e : validate_config(effective_config(s.config)))
        errors.push_back("point " + label(v) + ": " + e.field + ": " + e.message);
    } catch (const std::exception& e) {
      errors.push_back("point " + label(v) + ": " + e.what());
    }
  }
  return errors;
}

std::vector<std::uint8_t> nearest_rrh_mask(const Topology& topology, const NetworkConfig& config) {
  const Dims d = config.dims();
  std::vector<std::uint8_t> mask(d.num_links(), 0);
  for (int k = 0; k < d.users; ++k) {
    const int b = topology.nearest_rrh(k);
    for (int c = 0; c < d.codebooks; ++c) mask[d.link_index(b, c, k)] = 1;
  }
  return mask;
}

RunRecord run_single(const NetworkConfig& config, const FadingModel& fading, std::uint64_t seed,
                     const AsmOptions& options, bool nearest_association) {
  RunRecord r;
  r.seed = seed;
  require_valid(config);
  const NetworkConfig eff = effective_config(config);
  const Topology topology = generate_topology(config, seed);
  const ChannelSet channels = generate_channels(topology, config, fading, seed);
  const CodebookMap q = codebook_map_for(config);
  AsmOptions opts = options;
  if (nearest_association) opts.association_mask = nearest_rrh_mask(topology, eff);
  try {
    const Solution sol = run_asm(eff, channels, q, opts);
    const auto bad = check_feasibility(sol, eff, channels, q);
    r.feasible = bad.empty();
    r.sum_rate = r.feasible ? sol.objective : 0.0;
    r.iterations = sol.iterations;
    r.status = r.feasible ? sol.stop_reason : "violation_" + bad.front().constraint;
  } catch (const InfeasibleScenarioError& e) {
    r.status = "infeasible_" + e.cause();
  }
  return r;
}

bool ExperimentResult::any_infeasible() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunRecord& r) { return !r.feasible; });
}

const PointSummary& ExperimentResult::at(const std::string& point, const std::string& variant) const {
  for (const PointSummary& p : points)
    if (p.point == point && p.variant == variant) return p;
  throw std::out_of_range("no result for point '" + point + "' variant '" + variant + "'");
}

ExperimentResult run_experiment(const ExperimentSpec& spec) { return run_variants(spec, {{"", as_is}}); }

ExperimentResult compare_access(const ExperimentSpec& spec) {
  if (spec.variable == SweepVariable::kAccess) throw std::invalid_argument("compare-access cannot sweep access");
  return run_variants(spec, {{"scma", to_scma}, {"ofdma", to_ofdma}});
}

ExperimentResult compare_channels(const ExperimentSpec& spec) {
  if (spec.variable == SweepVariable::kFading) throw std::invalid_argument("compare-channel cannot sweep fading");
  if (spec.variable == SweepVariable::kKappa) throw std::invalid_argument("compare-channel requires perfect CSI");
  if (spec.scenario.error_bound != 0.0) throw std::invalid_argument("compare-channel requires kappa = 0");
  return run_variants(spec, {{"rayleigh", to_rayleigh}, {"rician", to_rician}});
}

ExperimentResult compare_association(const ExperimentSpec& spec) {
  return run_variants(spec, {{"proposed", as_is, false}, {"nearest", as_is, true}});
}

void write_summary_csv(std::ostream& os, const ExperimentResult& result) {
  os << "point,variant,runs,feasible,mean_sum_rate,std_error,mean_iterations\n" << std::setprecision(12);
  for (const PointSummary& p : result.points)
    os << p.point << ',' << p.variant << ',' << p.runs << ',' << p.feasible << ',' << p.mean << ',' << p.std_error
       << ',' << p.mean_iterations << '\n';
}

void write_runs_csv(std::ostream& os, const ExperimentResult& result) {
  os << "point,variant,seed,feasible,sum_rate,iterations,status\n" << std::setprecision(12);
  for (const RunRecord& r : result.runs)
    os << r.point << ',' << r.variant << ',' << r.seed << ',' << (r.feasible ? 1 : 0) << ',' << r.sum_rate << ','
       << r.iterations << ',' << r.status << '\n';
}

nlohmann::json to_json(const ExperimentResult& result) {
  nlohmann::json j;
  j["name"] = result.name;
  j["variable"] = result.variable;
  nlohmann::json pts = nlohmann::json::array();
  for (const PointSummary& p : result.points)
    pts.push_back({{"point", p.point},
                   {"variant", p.variant},
                   {"runs", p.runs},
                   {"feasible", p.feasible},
                   {"mean_sum_rate", p.mean},
                   {"std_error", p.std_error},
                   {"mean_iterations", p.mean_iterations}});
  j["points"] = std::move(pts);
  nlohmann::json runs = nlohmann::json::array();
  for (const RunRecord& r : result.runs)
    runs.push_back({{"point", r.point},
                    {"variant", r.variant},
                    {"seed", r.seed},
                    {"feasible", r.feasible},
                    {"sum_rate", r.sum_rate},
                    {"iterations", r.iterations},
                    {"status", r.status}});
  j["runs"] = std::move(runs);
  return j;
}

}  // namespace rscma
