#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rscma/harness.hpp"

namespace {

struct CommonArgs {
  std::string spec;
  int seeds = 0;
  int threads = -1;
  std::string out;
  bool json = false;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--spec", args.spec, "Experiment file (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seeds", args.seeds, "Seeds per point (overrides the file)")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", args.threads, "Worker threads, 0 for all cores");
  cmd->add_option("--out", args.out, "Summary CSV; per-run rows go to <stem>.runs.csv");
  cmd->add_flag("--json", args.json, "Print the full result as JSON");
  cmd->add_flag("--strict", args.strict, "Exit with status 2 if any run is infeasible");
}

int emit(const rscma::ExperimentResult& result, const CommonArgs& args, const std::string& default_out) {
  const std::string out = args.out.empty() ? default_out : args.out;
  if (!out.empty()) {
    std::ofstream summary(out);
    if (!summary) throw std::runtime_error("cannot write '" + out + "'");
    rscma::write_summary_csv(summary, result);
    std::filesystem::path runs_path(out);
    runs_path.replace_extension(".runs.csv");
    std::ofstream runs(runs_path);
    if (!runs) throw std::runtime_error("cannot write '" + runs_path.string() + "'");
    rscma::write_runs_csv(runs, result);
  }
  if (args.json) std::cout << rscma::to_json(result).dump(2) << '\n';
  else rscma::write_summary_csv(std::cout, result);
  return args.strict && result.any_infeasible() ? 2 : 0;
}

rscma::ExperimentSpec load(const CommonArgs& args) {
  rscma::ExperimentSpec spec = rscma::load_spec(args.spec);
  if (args.seeds > 0) spec.seeds = args.seeds;
  if (args.threads >= 0) spec.threads = args.threads;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust MISO-SCMA C-RAN resource allocation experiments"};
  app.require_subcommand(1);

  CommonArgs run_args, access_args, channel_args, assoc_args;
  auto* run = app.add_subcommand("run", "Run the sweep in an experiment file");
  add_common(run, run_args);
  auto* access = app.add_subcommand("compare-access", "SCMA against OFDMA at every sweep point");
  add_common(access, access_args);
  auto* channel = app.add_subcommand("compare-channel", "Rayleigh against Rician fading with perfect CSI");
  add_common(channel, channel_args);
  auto* assoc = app.add_subcommand("compare-assoc", "Joint association against nearest-RRH association");
  add_common(assoc, assoc_args);

  std::string validate_spec;
  auto* validate = app.add_subcommand("validate", "Check an experiment file without running it");
  validate->add_option("--spec", validate_spec, "Experiment file (JSON)")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto spec = load(run_args);
      return emit(rscma::run_experiment(spec), run_args, spec.output);
    }
    if (*access) {
      const auto spec = load(access_args);
      return emit(rscma::compare_access(spec), access_args, spec.output);
    }
    if (*channel) {
      const auto spec = load(channel_args);
      return emit(rscma::compare_channels(spec), channel_args, spec.output);
    }
    if (*assoc) {
      const auto spec = load(assoc_args);
      return emit(rscma::compare_association(spec), assoc_args, spec.output);
    }
    if (*validate) {
      const auto spec = rscma::load_spec(validate_spec);
      const auto errors = rscma::validate_spec(spec);
      for (const auto& e : errors) std::cerr << e << '\n';
      if (!errors.empty()) return 1;
      const auto [noc1, noc2] = rscma::constraint_counts(rscma::effective_config(spec.scenario));
      std::cout << "ok: " << spec.name << ", sweep " << rscma::to_string(spec.variable) << " over "
                << spec.values.size() << " values, " << spec.seeds << " seeds, NoC1=" << noc1 << " NoC2=" << noc2
                << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
