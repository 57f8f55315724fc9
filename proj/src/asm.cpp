#include "rscma/asm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace rscma {

namespace {

constexpr double kAcceptTol = 1e-7;

std::vector<Violation> violations(const BeamformerSet& w, const Assignment& rho, const NetworkConfig& config,
                                  const ChannelSet& channels, const CodebookMap& q, double tol, RateModel model,
                                  const std::vector<std::uint8_t>& mask = {}) {
  const Dims& d = rho.dims();
  std::vector<Violation> out;
  auto flag = [&](const char* name, int index, double slack, double scale) {
    if (slack < -tol * std::max(1.0, std::abs(scale))) out.push_back({name, index, slack});
  };
  for (int b = 0; b < d.rrh; ++b) flag("power", b, config.power_caps_w[b] - rrh_power(w, rho, q, b), config.power_caps_w[b]);
  for (int n = 0; n < d.subcarriers; ++n)
    flag("reuse", n, static_cast<double>(config.reuse_limit - reuse_count(rho, q, n)), 1.0);
  for (int k = 0; k < d.users; ++k) {
    int rrhs = 0, count = 0;
    bool masked = false;
    for (int b = 0; b < d.rrh; ++b) {
      bool here = false;
      for (int c = 0; c < d.codebooks; ++c)
        if (rho.at(b, c, k)) {
          here = true;
          ++count;
          if (!mask.empty() && !mask[d.link_index(b, c, k)]) masked = true;
        }
      rrhs += here ? 1 : 0;
    }
    double slack = 1.0 - rrhs;
    if (config.one_codebook_per_user) slack = std::min(slack, 1.0 - count);
    if (masked) slack = std::min(slack, -1.0);
    flag("association", k, slack, 1.0);
  }
  const RateReport report = aggregate_report(w, rho, q, channels, config, model);
  for (int v = 0; v < config.num_slices; ++v)
    flag("slice_rate", v, report.slice_rates[v] - config.slice_min_rates[v], config.slice_min_rates[v]);
  for (int b = 0; b < d.rrh; ++b)
    flag("fronthaul", b, config.fronthaul_caps[b] - report.fronthaul_load[b], config.fronthaul_caps[b]);
  return out;
}

double sum_rate(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q, const ChannelSet& channels,
                const NetworkConfig& config, RateModel model) {
  return aggregate_report(w, rho, q, channels, config, model).sum_rate;
}

bool allowed(const std::vector<std::uint8_t>& mask, std::size_t li) { return mask.empty() || mask[li] != 0; }

// Largest scale s ∈ [0, 1] for RRH b's beams keeping its fronthaul load within the cap.
double fronthaul_backoff(BeamformerSet& w, const Assignment& rho, const CodebookMap& q, const ChannelSet& channels,
                         const NetworkConfig& config, RateModel model, int b) {
  const Dims& d = rho.dims();
  const BeamformerSet base = w;
  auto apply = [&](double s) {
    const double a = std::sqrt(s);
    for (int n = 0; n < d.subcarriers; ++n)
      for (int k = 0; k < d.users; ++k) {
        auto dst = w.w(b, n, k);
        auto src = base.w(b, n, k);
        for (std::size_t m = 0; m < dst.size(); ++m) dst[m] = a * src[m];
      }
  };
  const double cap = config.fronthaul_caps[b] * (1.0 - 1e-9);
  auto load = [&](double s) {
    apply(s);
    return aggregate_report(w, rho, q, channels, config, model).fronthaul_load[b];
  };
  if (load(1.0) <= cap) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (load(mid) <= cap ? lo : hi) = mid;
  }
  apply(lo);
  return lo;
}

// Safeguarded extrapolation of the surrogate step. Per beam, the power moves
// geometrically, p(s) = p^(1−s) p_new^s, along the new direction; each RRH keeps the
// total power of W_new. Doubles s while the true objective improves and the point stays
// acceptable. On return w holds the accepted beams and value their objective.
template <class Accept>
int extrapolate(BeamformerSet& w, const BeamformerSet& w_new, double& value, const Assignment& rho,
                const CodebookMap& q, const ChannelSet& channels, const NetworkConfig& config, RateModel model,
                Accept& acceptable) {
  const Dims& d = rho.dims();
  const BeamformerSet base = w;
  w = w_new;
  std::vector<double> budget(static_cast<std::size_t>(d.rrh));
  for (int b = 0; b < d.rrh; ++b) budget[b] = std::min(rrh_power(w_new, rho, q, b), config.power_caps_w[b]);
  int accepted = 0;
  for (int j = 1; j <= 10; ++j) {
    const double step = std::ldexp(1.0, j);
    BeamformerSet trial = w_new;
    for (int b = 0; b < d.rrh; ++b) {
      for (int n = 0; n < d.subcarriers; ++n)
        for (int k = 0; k < d.users; ++k) {
          const double p0 = base.norm2(b, n, k), p1 = w_new.norm2(b, n, k);
          if (p0 <= 0.0 || p1 <= 0.0) continue;
          const double ps = std::exp((1.0 - step) * std::log(p0) + step * std::log(p1));
          const double a = std::isfinite(ps) ? std::sqrt(ps / p1) : 0.0;
          for (cplx& v : trial.w(b, n, k)) v *= a;
        }
      const double p = rrh_power(trial, rho, q, b);
      if (!(p > 0.0)) continue;
      const double shrink = std::sqrt(budget[b] / p);
      for (int n = 0; n < d.subcarriers; ++n)
        for (int k = 0; k < d.users; ++k)
          for (cplx& v : trial.w(b, n, k)) v *= shrink;
    }
    for (int b = 0; b < d.rrh; ++b) fronthaul_backoff(trial, rho, q, channels, config, model, b);
    double trial_value = 0.0;
    if (!acceptable(trial, rho, trial_value) || !(trial_value > value)) break;
    w = std::move(trial);
    value = trial_value;
    accepted = j;
  }
  return accepted;
}

IterationRecord record(int iteration, const RateReport& report) {
  IterationRecord r;
  r.iteration = iteration;
  r.objective = report.sum_rate;
  r.rrh_power = report.rrh_power;
  r.slice_rates = report.slice_rates;
  return r;
}

}  // namespace

InitialPoint initial_point(const NetworkConfig& config_in, const ChannelSet& channels, const CodebookMap& q,
                           RateModel model, const std::vector<std::uint8_t>& mask) {
  const NetworkConfig config = effective_config(config_in);
  Dims d = config.dims();
  if (q.codebooks() != d.codebooks) throw std::invalid_argument("codebook map does not match the scenario");
  if (!mask.empty() && mask.size() != d.num_links()) throw std::invalid_argument("association mask has the wrong size");
  const double noise = config.noise_power();
  const bool robust = model == RateModel::kRobust;
  const std::vector<int> slice_of = slice_assignment(config);

  // Best interference-free single-link rate at full power.
  std::vector<double> best_single(static_cast<std::size_t>(d.users), 0.0);
  for (int k = 0; k < d.users; ++k)
    for (int b = 0; b < d.rrh; ++b)
      for (int c = 0; c < d.codebooks; ++c) {
        if (!allowed(mask, d.link_index(b, c, k))) continue;
        const double per = config.power_caps_w[b] / static_cast<double>(q.support(c).size());
        double snr = 0.0;
        for (int n : q.support(c)) {
          double g = 0.0;
          for (const cplx& v : channels.h(b, n, k)) g += std::norm(v);
          snr += std::max(0.0, per * g - (robust ? channels.theta(b, n, k) * per : 0.0)) / noise;
        }
        best_single[k] = std::max(best_single[k], rate_of(snr));
      }
  std::vector<int> users(static_cast<std::size_t>(d.users));
  for (int k = 0; k < d.users; ++k) users[k] = k;
  std::stable_sort(users.begin(), users.end(), [&](int a, int b) { return best_single[a] > best_single[b]; });

  Assignment rho(d);
  std::vector<bool> blocked(static_cast<std::size_t>(d.users), false);
  for (int k : users) {
    double best = -1.0;
    Link choice{-1, -1, k};
    bool reuse_blocked = false;
    for (int b = 0; b < d.rrh; ++b)
      for (int c = 0; c < d.codebooks; ++c) {
        if (!allowed(mask, d.link_index(b, c, k))) continue;
        rho.set(b, c, k, true);
        bool ok = true;
        for (int n : q.support(c)) ok = ok && reuse_count(rho, q, n) <= config.reuse_limit;
        if (ok) {
          const double obj = sum_rate(init_beamformers(channels, rho, q, config), rho, q, channels, config, model);
          if (obj > best) {
            best = obj;
            choice = {b, c, k};
          }
        } else {
          reuse_blocked = true;
        }
        rho.set(b, c, k, false);
      }
    if (choice.b >= 0) rho.set(choice.b, choice.c, k, true);
    else blocked[k] = reuse_blocked;
  }

  // Per-user power weights; init_beamformers is the all-ones case.
  std::vector<double> weight(static_cast<std::size_t>(d.users), 1.0);
  auto weighted = [&](const Assignment& r) {
    BeamformerSet w = init_beamformers(channels, r, q, config);
    for (int b = 0; b < d.rrh; ++b) {
      double total = 0.0, scaled = 0.0;
      for (int c = 0; c < d.codebooks; ++c)
        for (int k = 0; k < d.users; ++k)
          if (r.at(b, c, k)) {
            total += static_cast<double>(q.support(c).size());
            scaled += weight[k] * static_cast<double>(q.support(c).size());
          }
      if (scaled <= 0.0) continue;
      for (int n = 0; n < d.subcarriers; ++n)
        for (int k = 0; k < d.users; ++k)
          for (cplx& v : w.w(b, n, k)) v *= std::sqrt(weight[k] * total / scaled);
    }
    return w;
  };
  auto backed_off = [&](const Assignment& r) {
    BeamformerSet w = weighted(r);
    for (int round = 0; round < 100; ++round) {
      bool changed = false;
      for (int b = 0; b < d.rrh; ++b)
        if (fronthaul_backoff(w, r, q, channels, config, model, b) < 1.0) changed = true;
      if (!changed) break;
    }
    return w;
  };
  auto covered = [&](const RateReport& r) {
    double total = 0.0;
    for (int v = 0; v < config.num_slices; ++v) total += std::min(r.slice_rates[v], config.slice_min_rates[v]);
    return total;
  };
  auto short_slice = [&](const RateReport& r) {
    for (int v = 0; v < config.num_slices; ++v) {
      const double need = config.slice_min_rates[v];
      if (r.slice_rates[v] < need - kAcceptTol * std::max(1.0, need)) return true;
    }
    return false;
  };

  // Repair: while a slice misses its minimum, add the extra link that covers the most
  // of the missing rate.
  BeamformerSet w = backed_off(rho);
  for (RateReport r = aggregate_report(w, rho, q, channels, config, model); short_slice(r);) {
    // Shift power toward short slices first.
    for (int round = 0; round < 30 && short_slice(r); ++round) {
      const std::vector<double> saved = weight;
      for (int k = 0; k < d.users; ++k)
        if (r.slice_rates[slice_of[k]] < config.slice_min_rates[slice_of[k]]) weight[k] *= 2.0;
      BeamformerSet trial = backed_off(rho);
      const RateReport tr = aggregate_report(trial, rho, q, channels, config, model);
      if (!(covered(tr) > covered(r))) {
        weight = saved;
        break;
      }
      w = std::move(trial);
      r = tr;
    }
    if (!short_slice(r)) break;
    double best = covered(r);
    Link choice{-1, -1, -1};
    for (int k = 0; k < d.users; ++k) {
      const int v = slice_of[k];
      if (r.slice_rates[v] >= config.slice_min_rates[v]) continue;
      for (int b = 0; b < d.rrh; ++b)
        for (int c = 0; c < d.codebooks; ++c) {
          if (rho.at(b, c, k) || !allowed(mask, d.link_index(b, c, k))) continue;
          if (config.one_codebook_per_user) continue;
          bool other_rrh = false;
          for (int bb = 0; bb < d.rrh; ++bb)
            for (int cc = 0; cc < d.codebooks; ++cc) other_rrh = other_rrh || (bb != b && rho.at(bb, cc, k));
          if (other_rrh) continue;
          rho.set(b, c, k, true);
          bool ok = true;
          for (int n : q.support(c)) ok = ok && reuse_count(rho, q, n) <= config.reuse_limit;
          if (ok) {
            const BeamformerSet trial = weighted(rho);
            const double value = covered(aggregate_report(trial, rho, q, channels, config, model));
            if (value > best * (1.0 + 1e-12)) {
              best = value;
              choice = {b, c, k};
            }
          }
          rho.set(b, c, k, false);
        }
    }
    if (choice.b < 0) break;
    rho.set(choice.b, choice.c, choice.k, true);
    w = backed_off(rho);
    r = aggregate_report(w, rho, q, channels, config, model);
  }

  const RateReport report = aggregate_report(w, rho, q, channels, config, model);
  for (int v = 0; v < config.num_slices; ++v) {
    const double need = config.slice_min_rates[v];
    if (report.slice_rates[v] >= need - kAcceptTol * std::max(1.0, need)) continue;
    bool reuse_hit = false;
    for (int k = 0; k < d.users; ++k) reuse_hit = reuse_hit || (slice_of[k] == v && blocked[k]);
    const std::string cause = reuse_hit ? "K_T" : "R_min";
    throw InfeasibleScenarioError(cause, "initial assignment misses the minimum rate of slice " + std::to_string(v) + " (" +
                                             std::to_string(report.slice_rates[v]) + " < " + std::to_string(need) + ")" +
                                             (reuse_hit ? " (reuse limit blocks a user)" : ""));
  }
  for (const Violation& v : violations(w, rho, config, channels, q, kAcceptTol, model, mask))
    throw InfeasibleScenarioError(v.constraint == "reuse" ? "K_T" : "R_min",
                                  "initial point violates " + v.constraint + " constraint " + std::to_string(v.index));
  return {std::move(rho), std::move(w)};
}

Solution run_asm(const NetworkConfig& config, const ChannelSet& channels, const CodebookMap& q,
                 const AsmOptions& options) {
  return run_asm_from(config, channels, q, initial_point(config, channels, q, options.model, options.association_mask),
                      options);
}

Solution run_asm_from(const NetworkConfig& config_in, const ChannelSet& channels, const CodebookMap& q,
                      const InitialPoint& start, const AsmOptions& options) {
  if (options.max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
  if (options.epsilon && !(*options.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const NetworkConfig config = effective_config(config_in);
  const RateModel model = options.model;
  const auto& mask = options.association_mask;

  Solution sol;
  sol.rho = start.rho;
  sol.w = mask_beams(start.w, sol.rho, q);
  if (!violations(sol.w, sol.rho, config, channels, q, kAcceptTol, model, mask).empty())
    throw std::invalid_argument("starting point is infeasible");
  RateReport report = aggregate_report(sol.w, sol.rho, q, channels, config, model);
  double objective = report.sum_rate;
  sol.trace.push_back(record(0, report));
  sol.trace.back().beamform_status = "initial";
  sol.trace.back().assign_status = "initial";

  double epsilon = options.epsilon.value_or(0.0);
  std::vector<std::pair<BeamformerSet, Assignment>> seen{{sol.w, sol.rho}};
  auto acceptable = [&](const BeamformerSet& w, const Assignment& rho, double& value) {
    if (!violations(w, rho, config, channels, q, kAcceptTol, model, mask).empty()) return false;
    value = sum_rate(w, rho, q, channels, config, model);
    return std::isfinite(value);
  };

  auto solve_step = [&](const BeamformerSet& w, const Assignment& rho, const NetworkConfig& cfg,
                        BeamformerSet& out) -> std::string {
    std::string status;
    std::optional<SubproblemSolution> step;
    try {
      const ExpansionPoint ex{w, tight_expansion_point(w, rho, q, channels, cfg, model)};
      const ConvexSubproblem p = build_subproblem(rho, q, channels, cfg, ex, model);
      try {
        step = solve_subproblem(p, options.solver);
        status = "solved";
      } catch (const ipm::NonConvergenceError& e) {
        step = unpack_solution(p, e.best().x);
        status = "nonconvergence";
      }
    } catch (const ipm::InfeasibleError&) {
      return "infeasible";
    }
    out = mask_beams(step->w, rho, q);
    return status;
  };

  NetworkConfig relaxed = config;
  std::fill(relaxed.slice_min_rates.begin(), relaxed.slice_min_rates.end(), 0.0);
  const bool has_minimums = relaxed.slice_min_rates != config.slice_min_rates;
  auto meets_minimums = [&](const BeamformerSet& w, const Assignment& rho) {
    const RateReport r = aggregate_report(w, rho, q, channels, config, model);
    for (int v = 0; v < config.num_slices; ++v)
      if (r.slice_rates[v] < config.slice_min_rates[v] - kAcceptTol * std::max(1.0, config.slice_min_rates[v]))
        return false;
    return true;
  };

  // One surrogate solve at (w, rho); leaves `out` empty when the subproblem is infeasible.
  // Slice rows are dropped first and only added back when the relaxed step misses a minimum.
  auto beamform_step = [&](const BeamformerSet& w, const Assignment& rho, BeamformerSet& out) -> std::string {
    if (has_minimums) {
      const std::string status = solve_step(w, rho, relaxed, out);
      if (!out.data().empty() && meets_minimums(out, rho)) return status;
      out = BeamformerSet();
    }
    return solve_step(w, rho, config, out);
  };

  sol.stop_reason = "max_iterations";
  for (int t = 1; t <= options.max_iterations; ++t) {
    const BeamformerSet w_prev = sol.w;
    std::string bf_status;
    // Beamforming step with the surrogates refreshed at the current point.
    {
      BeamformerSet w_new;
      bf_status = beamform_step(sol.w, sol.rho, w_new);
      double value = 0.0;
      if (w_new.data().empty()) {
      } else if (acceptable(w_new, sol.rho, value) && value >= objective) {
        const int doublings = extrapolate(sol.w, w_new, value, sol.rho, q, channels, config, model, acceptable);
        if (doublings > 0) bf_status += "_extrapolated";
        objective = value;
      } else {
        bf_status += "_rejected";
      }
    }
    if (t == 1 && !options.epsilon) epsilon = options.relative_epsilon * sol.w.norm();

    // Assignment step with coefficients frozen at the current point.
    std::string as_status;
    long nodes = 0;
    try {
      const AssignmentProblem ap =
          build_assignment_problem(sol.w, sol.rho, q, channels, config, model, options.freeze, mask);
      BnbOptions bnb;
      bnb.node_limit = options.node_limit;
      bnb.incumbent = sol.rho;
      const AssignmentResult res = solve_bnb(ap, bnb);
      nodes = res.nodes;
      as_status = res.proven_optimal ? "optimal" : "node_limit";
      if (res.rho == sol.rho) {
        as_status += "_unchanged";
      } else {
        const BeamformerSet w_new = mask_beams(ap.beams, res.rho, q);
        double value = 0.0;
        BeamformerSet w_refined;
        if (acceptable(w_new, res.rho, value) && value > objective) {
          sol.w = w_new;
          sol.rho = res.rho;
          objective = value;
        } else if (beamform_step(w_new, res.rho, w_refined);
                   !w_refined.data().empty() && acceptable(w_refined, res.rho, value) && value > objective) {
          sol.w = std::move(w_refined);
          sol.rho = res.rho;
          objective = value;
          as_status += "_refined";
        } else {
          as_status += "_rejected";
        }
      }
    } catch (const InfeasibleAssignmentError& e) {
      as_status = "infeasible_" + e.family();
    }

    report = aggregate_report(sol.w, sol.rho, q, channels, config, model);
    IterationRecord rec = record(t, report);
    rec.beamform_status = bf_status;
    rec.assign_status = as_status;
    rec.w_change = distance(sol.w, w_prev);
    rec.nodes = nodes;
    sol.trace.push_back(std::move(rec));
    sol.iterations = t;

    if (sol.trace.back().w_change <= epsilon) {
      sol.converged = true;
      sol.stop_reason = "w_change";
      break;
    }
    const bool repeat = std::any_of(seen.begin(), seen.end(), [&](const auto& s) {
      return s.second == sol.rho && s.first == sol.w;
    });
    if (repeat) {
      sol.converged = true;
      sol.stop_reason = "repeat";
      break;
    }
    seen.emplace_back(sol.w, sol.rho);
  }
  sol.report = report;
  sol.objective = report.sum_rate;
  sol.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

std::vector<Violation> check_feasibility(const BeamformerSet& w, const Assignment& rho, const NetworkConfig& config,
                                         const ChannelSet& channels, const CodebookMap& q, double tol) {
  return violations(w, rho, effective_config(config), channels, q, tol, RateModel::kRobust);
}

std::vector<Violation> check_feasibility(const Solution& sol, const NetworkConfig& config,
                                         const ChannelSet& channels, const CodebookMap& q, double tol) {
  return check_feasibility(sol.w, sol.rho, config, channels, q, tol);
}

std::pair<long, long> constraint_counts(const NetworkConfig& config) {
  const long B = config.num_rrh, C = config.num_codebooks, K = config.num_users, V = config.num_slices,
             N = config.num_subcarriers;
  return {4 * B * C * K + 2 * B + V, 5 * B * C * K + C * C * B * B + N + 2 * B + V};
}

nlohmann::json to_json(const Solution& sol) {
  nlohmann::json j;
  j["objective"] = sol.objective;
  j["iterations"] = sol.iterations;
  j["converged"] = sol.converged;
  j["stop_reason"] = sol.stop_reason;
  j["wall_seconds"] = sol.wall_seconds;
  j["assignment"] = to_json(sol.rho);
  j["report"] = to_json(sol.report);
  nlohmann::json trace = nlohmann::json::array();
  for (const IterationRecord& r : sol.trace)
    trace.push_back({{"iteration", r.iteration},
                     {"objective", r.objective},
                     {"beamform_status", r.beamform_status},
                     {"assign_status", r.assign_status},
                     {"w_change", r.w_change},
                     {"nodes", r.nodes},
                     {"rrh_power", r.rrh_power},
                     {"slice_rates", r.slice_rates}});
  j["trace"] = std::move(trace);
  return j;
}

void write_trace_csv(std::ostream& os, const Solution& sol) {
  const std::size_t B = sol.trace.empty() ? 0 : sol.trace.front().rrh_power.size();
  const std::size_t V = sol.trace.empty() ? 0 : sol.trace.front().slice_rates.size();
  os << "iteration,objective,beamform_status,assign_status,w_change";
  for (std::size_t b = 0; b < B; ++b) os << ",power_" << b;
  for (std::size_t v = 0; v < V; ++v) os << ",slice_rate_" << v;
  os << '\n' << std::setprecision(12);
  for (const IterationRecord& r : sol.trace) {
    os << r.iteration << ',' << r.objective << ',' << r.beamform_status << ',' << r.assign_status << ','
       << r.w_change;
    for (double p : r.rrh_power) os << ',' << p;
    for (double s : r.slice_rates) os << ',' << s;
    os << '\n';
  }
}

}  // namespace rscma
