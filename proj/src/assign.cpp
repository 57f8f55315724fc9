#include "rscma/assign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace rscma {

namespace {

constexpr double kRelTol = 1e-9;  // canonical feasibility slack
constexpr double kDfsTol = 1e-7;  // looser slack used while branching

double received_power(std::span<const cplx> w, std::span<const cplx> h) {
  cplx s = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) s += w[m] * h[m];
  return std::norm(s);
}

bool beam_is_zero(std::span<const cplx> w) {
  return std::all_of(w.begin(), w.end(), [](const cplx& v) { return v == cplx(0.0); });
}

}  // namespace

BeamformerSet candidate_beams(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                              const ChannelSet& channels, const NetworkConfig& config) {
  const Dims& d = rho.dims();
  BeamformerSet out = w;
  std::size_t degree = 1;
  for (int c = 0; c < q.codebooks(); ++c) degree = std::max(degree, q.support(c).size());
  std::vector<int> served(static_cast<std::size_t>(d.rrh), 0);
  for (const Link& l : rho.links()) ++served[l.b];
  for (int b = 0; b < d.rrh; ++b) {
    const double amplitude =
        std::sqrt(config.power_caps_w[b] / (static_cast<double>(degree) * (served[b] + 1)));
    for (int n = 0; n < d.subcarriers; ++n)
      for (int k = 0; k < d.users; ++k) {
        auto beam = out.w(b, n, k);
        if (!beam_is_zero(beam)) continue;
        const auto h = channels.h(b, n, k);
        double norm = 0.0;
        for (const cplx& v : h) norm += std::norm(v);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        for (std::size_t m = 0; m < h.size(); ++m) beam[m] = amplitude * std::conj(h[m]) / norm;
      }
  }
  return out;
}

BeamformerSet mask_beams(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q) {
  const Dims& d = rho.dims();
  std::vector<std::uint8_t> used(d.num_beams(), 0);
  for (const Link& l : rho.links())
    for (int n : q.support(l.c)) used[d.beam_index(l.b, n, l.k)] = 1;
  BeamformerSet out = w;
  for (int b = 0; b < d.rrh; ++b)
    for (int n = 0; n < d.subcarriers; ++n)
      for (int k = 0; k < d.users; ++k)
        if (!used[d.beam_index(b, n, k)])
          for (cplx& v : out.w(b, n, k)) v = 0.0;
  return out;
}

AssignmentProblem build_assignment_problem(const BeamformerSet& w, const Assignment& rho_prev,
                                           const CodebookMap& q, const ChannelSet& channels,
                                           const NetworkConfig& config, RateModel model, FreezePolicy policy,
                                           const std::vector<std::uint8_t>& mask) {
  const Dims& d = rho_prev.dims();
  const Dims& cd = channels.dims();
  if (cd.rrh != d.rrh || cd.subcarriers != d.subcarriers || cd.users != d.users || cd.antennas != d.antennas ||
      q.codebooks() != d.codebooks || config.num_codebooks != d.codebooks)
    throw std::invalid_argument("assignment problem inputs have inconsistent shapes");
  if (!mask.empty() && mask.size() != d.num_links()) throw std::invalid_argument("association mask has the wrong size");
  for (const cplx& v : w.data())
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw std::invalid_argument("beamformers must be finite");

  AssignmentProblem p;
  p.dims = d;
  p.q = q;
  p.beams = candidate_beams(w, rho_prev, q, channels, config);
  p.lower.assign(d.num_links(), 0.0);
  p.upper.assign(d.num_links(), 0.0);
  p.power.assign(d.num_links(), 0.0);
  p.allowed = mask.empty() ? std::vector<std::uint8_t>(d.num_links(), 1) : mask;
  p.power_caps = config.power_caps_w;
  p.fronthaul_caps = config.fronthaul_caps;
  p.slice_min_rates = config.slice_min_rates;
  p.slice_of = slice_assignment(config);
  p.reuse_limit = config.reuse_limit;
  p.one_codebook_per_user = config.one_codebook_per_user;

  const double noise = config.noise_power();
  const bool robust = model == RateModel::kRobust;
  const bool frozen = policy == FreezePolicy::kPreviousAssignment;
  for (int b = 0; b < d.rrh; ++b)
    for (int c = 0; c < d.codebooks; ++c)
      for (int k = 0; k < d.users; ++k) {
        double num_lo = 0.0, num_up = 0.0, den_lo = noise, den_up = noise, power = 0.0;
        for (int n : q.support(c)) {
          const double pw = p.beams.norm2(b, n, k);
          power += pw;
          const double s = received_power(p.beams.w(b, n, k), channels.h(b, n, k));
          const double prot = robust ? channels.theta(b, n, k) * pw : 0.0;
          num_lo += std::max(0.0, s - prot);
          num_up += s + prot;
          if (!frozen) continue;
          for (int bb = 0; bb < d.rrh; ++bb)
            for (int kk = 0; kk < d.users; ++kk) {
              if (kk == k || !rho_prev.at(bb, c, kk)) continue;
              const double i = received_power(p.beams.w(bb, n, kk), channels.h(bb, n, k));
              const double iprot = robust ? channels.theta(bb, n, k) * p.beams.norm2(bb, n, kk) : 0.0;
              den_lo += i + iprot;
              den_up += std::max(0.0, i - iprot);
            }
        }
        const std::size_t li = d.link_index(b, c, k);
        p.lower[li] = rate_of(num_lo / den_lo);
        p.upper[li] = rate_of(num_up / den_up);
        p.power[li] = power;
      }
  return p;
}

double AssignmentProblem::objective(const Assignment& rho) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (rho.at(i)) sum += lower[i];
  return sum;
}

std::string AssignmentProblem::first_violation(const Assignment& rho) const {
  const Dims& d = dims;
  if (!(rho.dims() == d)) throw std::invalid_argument("assignment has the wrong shape");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (rho.at(i) && !allowed[i]) return "association";
  for (int n = 0; n < d.subcarriers; ++n)
    if (reuse_count(rho, q, n) > reuse_limit) return "reuse";
  for (int k = 0; k < d.users; ++k) {
    int rrh = -1, count = 0;
    for (int b = 0; b < d.rrh; ++b)
      for (int c = 0; c < d.codebooks; ++c)
        if (rho.at(b, c, k)) {
          if (rrh >= 0 && rrh != b) return "association";
          rrh = b;
          ++count;
        }
    if (one_codebook_per_user && count > 1) return "association";
  }
  for (int b = 0; b < d.rrh; ++b) {
    double pw = 0.0;
    for (int c = 0; c < d.codebooks; ++c)
      for (int k = 0; k < d.users; ++k)
        if (rho.at(b, c, k)) pw += power[d.link_index(b, c, k)];
    if (pw > power_caps[b] * (1.0 + kRelTol)) return "power";
  }
  for (int b = 0; b < d.rrh; ++b) {
    double load = 0.0;
    for (int c = 0; c < d.codebooks; ++c)
      for (int k = 0; k < d.users; ++k)
        if (rho.at(b, c, k)) load += upper[d.link_index(b, c, k)];
    if (load > fronthaul_caps[b] * (1.0 + kRelTol)) return "fronthaul";
  }
  std::vector<double> rate(slice_min_rates.size(), 0.0);
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (rho.at(i)) rate[slice_of[i % static_cast<std::size_t>(d.users)]] += lower[i];
  for (std::size_t v = 0; v < rate.size(); ++v)
    if (rate[v] < slice_min_rates[v] - kRelTol * std::max(1.0, slice_min_rates[v])) return "slice_rate";
  return {};
}

ConstraintTally AssignmentProblem::tally() const {
  const long links = static_cast<long>(dims.num_links());
  const long bc = static_cast<long>(dims.rrh) * dims.codebooks;
  ConstraintTally t;
  t.add("binary", links);
  t.add("signal_epigraph", links);
  t.add("denominator", links);
  t.add("upper_rate_epigraph", links);
  t.add("upper_denominator", links);
  // One vector constraint ρ_{b,c,·} ⊙ ρ_{b',c',·} = 0 per ordered pair of (RRH, codebook) slots;
  // pairs on the same RRH are vacuous unless one codebook per user is enforced.
  t.add("association", bc * bc);
  t.add("reuse", dims.subcarriers);
  t.add("power", dims.rrh);
  t.add("fronthaul", dims.rrh);
  t.add("slice_rate", static_cast<long>(slice_min_rates.size()));
  return t;
}

namespace {

// Running sums for a partial assignment.
struct SearchState {
  const AssignmentProblem& p;
  std::vector<int> reuse;
  std::vector<int> user_rrh;
  std::vector<int> user_links;
  std::vector<double> power;
  std::vector<double> load;
  std::vector<double> slice;
  double value = 0.0;
  Assignment rho;

  explicit SearchState(const AssignmentProblem& prob)
      : p(prob),
        reuse(static_cast<std::size_t>(prob.dims.subcarriers), 0),
        user_rrh(static_cast<std::size_t>(prob.dims.users), -1),
        user_links(static_cast<std::size_t>(prob.dims.users), 0),
        power(static_cast<std::size_t>(prob.dims.rrh), 0.0),
        load(static_cast<std::size_t>(prob.dims.rrh), 0.0),
        slice(prob.slice_min_rates.size(), 0.0),
        rho(prob.dims) {}

  int rrh_of(std::size_t i) const {
    return static_cast<int>(i / (static_cast<std::size_t>(p.dims.codebooks) * p.dims.users));
  }
  int codebook_of(std::size_t i) const {
    return static_cast<int>((i / static_cast<std::size_t>(p.dims.users)) % p.dims.codebooks);
  }
  int user_of(std::size_t i) const { return static_cast<int>(i % static_cast<std::size_t>(p.dims.users)); }

  bool can_add(std::size_t i) const {
    if (!p.allowed[i]) return false;
    const int b = rrh_of(i), c = codebook_of(i), k = user_of(i);
    if (user_rrh[k] >= 0 && user_rrh[k] != b) return false;
    if (p.one_codebook_per_user && user_links[k] > 0) return false;
    for (int n : p.q.support(c))
      if (reuse[n] + 1 > p.reuse_limit) return false;
    if (power[b] + p.power[i] > p.power_caps[b] * (1.0 + kDfsTol)) return false;
    if (load[b] + p.upper[i] > p.fronthaul_caps[b] * (1.0 + kDfsTol)) return false;
    return true;
  }

  void add(std::size_t i) {
    const int b = rrh_of(i), c = codebook_of(i), k = user_of(i);
    for (int n : p.q.support(c)) ++reuse[n];
    user_rrh[k] = b;
    ++user_links[k];
    power[b] += p.power[i];
    load[b] += p.upper[i];
    slice[p.slice_of[k]] += p.lower[i];
    value += p.lower[i];
    rho.set(i, true);
  }

  void remove(std::size_t i) {
    const int b = rrh_of(i), c = codebook_of(i), k = user_of(i);
    for (int n : p.q.support(c)) --reuse[n];
    if (--user_links[k] == 0) user_rrh[k] = -1;
    power[b] -= p.power[i];
    load[b] -= p.upper[i];
    slice[p.slice_of[k]] -= p.lower[i];
    value -= p.lower[i];
    rho.set(i, false);
  }
};

struct Candidate {
  bool found = false;
  double objective = -std::numeric_limits<double>::infinity();
  Assignment rho;

  void offer(const AssignmentProblem& p, const Assignment& r) {
    if (!p.feasible(r)) return;
    const double obj = p.objective(r);
    if (!found || obj > objective || (obj == objective && r.bits() < rho.bits())) {
      found = true;
      objective = obj;
      rho = r;
    }
  }
};

void atomic_max(std::atomic<double>& target, double v) {
  double cur = target.load();
  while (v > cur && !target.compare_exchange_weak(cur, v)) {
  }
}

struct Shared {
  std::atomic<double> best{-std::numeric_limits<double>::infinity()};
  std::atomic<long> nodes{0};
  std::atomic<bool> aborted{false};
  long node_limit = 0;
};

class BranchAndBound {
 public:
  BranchAndBound(const AssignmentProblem& p, const std::vector<std::size_t>& order, Shared& shared)
      : p_(p),
        order_(order),
        shared_(shared),
        state_(p),
        addable_(p.num_vars(), 0),
        user_sum_(static_cast<std::size_t>(p.dims.users) * p.dims.rrh, 0.0) {
    sorted_power_ = order;
    sorted_load_ = order;
    sorted_slots_ = order;
    auto density = [&](std::vector<std::size_t>& v, auto weight) {
      std::stable_sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
        return p.lower[a] * weight(b) > p.lower[b] * weight(a);
      });
    };
    density(sorted_power_, [&](std::size_t i) { return p.power[i]; });
    density(sorted_load_, [&](std::size_t i) { return p.upper[i]; });
    density(sorted_slots_, [&](std::size_t i) { return static_cast<double>(p.q.support(state_.codebook_of(i)).size()); });
  }

  // Applies the first prefix.size() decisions; false when a forced 1 is not addable.
  bool apply_prefix(const std::vector<bool>& prefix) {
    for (std::size_t d = 0; d < prefix.size(); ++d) {
      if (!prefix[d]) continue;
      if (!state_.can_add(order_[d])) return false;
      state_.add(order_[d]);
    }
    return true;
  }

  void run(std::size_t depth) { dfs(depth); }
  Candidate& best() { return best_; }

 private:
  void leaf() {
    best_.offer(p_, state_.rho);
    if (best_.found) atomic_max(shared_.best, best_.objective);
  }

  // Upper bound on the value still addable: the smallest of per-RRH power and fronthaul
  // knapsacks, a reuse-slot knapsack and a one-RRH-per-user bound.
  double added_value_bound() {
    const int B = p_.dims.rrh;
    std::vector<double> power_room(static_cast<std::size_t>(B)), load_room(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
      power_room[b] = p_.power_caps[b] * (1.0 + kDfsTol) - state_.power[b];
      load_room[b] = p_.fronthaul_caps[b] * (1.0 + kDfsTol) - state_.load[b];
    }
    double per_rrh = 0.0;
    {
      std::vector<double> by_power(static_cast<std::size_t>(B), 0.0), by_load(static_cast<std::size_t>(B), 0.0);
      for (std::size_t i : sorted_power_) {
        if (!addable_[i]) continue;
        const std::size_t b = static_cast<std::size_t>(state_.rrh_of(i));
        double& r = power_room[b];
        if (r <= 0.0) continue;
        if (p_.power[i] <= r) {
          by_power[b] += p_.lower[i];
          r -= p_.power[i];
        } else {
          by_power[b] += p_.lower[i] * r / p_.power[i];
          r = 0.0;
        }
      }
      for (std::size_t i : sorted_load_) {
        if (!addable_[i]) continue;
        const std::size_t b = static_cast<std::size_t>(state_.rrh_of(i));
        double& r = load_room[b];
        if (r <= 0.0) continue;
        if (p_.upper[i] <= r) {
          by_load[b] += p_.lower[i];
          r -= p_.upper[i];
        } else {
          by_load[b] += p_.lower[i] * r / p_.upper[i];
          r = 0.0;
        }
      }
      for (int b = 0; b < B; ++b) per_rrh += std::min(by_power[b], by_load[b]);
    }
    double slots = 0.0;
    for (int n = 0; n < p_.dims.subcarriers; ++n) slots += std::max(0, p_.reuse_limit - state_.reuse[n]);
    double by_slots = 0.0;
    for (std::size_t i : sorted_slots_) {
      if (!addable_[i] || slots <= 0.0) continue;
      const double w = static_cast<double>(p_.q.support(state_.codebook_of(i)).size());
      if (w <= slots) {
        by_slots += p_.lower[i];
        slots -= w;
      } else {
        by_slots += p_.lower[i] * slots / w;
        slots = 0.0;
      }
    }
    double by_user = 0.0;
    for (int k = 0; k < p_.dims.users; ++k) {
      double best = 0.0;
      for (int b = 0; b < B; ++b) best = std::max(best, user_sum_[static_cast<std::size_t>(k) * B + b]);
      by_user += best;
    }
    return std::min({per_rrh, by_slots, by_user});
  }

  void dfs(std::size_t depth) {
    if (shared_.aborted.load(std::memory_order_relaxed)) return;
    if (shared_.nodes.fetch_add(1, std::memory_order_relaxed) >= shared_.node_limit) {
      shared_.aborted = true;
      return;
    }
    const int B = p_.dims.rrh;
    std::fill(addable_.begin(), addable_.end(), 0);
    std::fill(user_sum_.begin(), user_sum_.end(), 0.0);
    std::vector<double> slice_room(state_.slice.size(), 0.0);
    bool any = false;
    for (std::size_t d = depth; d < order_.size(); ++d) {
      const std::size_t i = order_[d];
      if (!state_.can_add(i)) continue;
      any = true;
      addable_[i] = 1;
      user_sum_[static_cast<std::size_t>(state_.user_of(i)) * B + state_.rrh_of(i)] += p_.lower[i];
      slice_room[p_.slice_of[state_.user_of(i)]] += p_.lower[i];
    }
    if (!any) {
      leaf();
      return;
    }
    for (std::size_t v = 0; v < slice_room.size(); ++v) {
      const double need = p_.slice_min_rates[v];
      if (need > 0.0 && state_.slice[v] + slice_room[v] < need - kDfsTol * std::max(1.0, need)) return;
    }
    const double incumbent = shared_.best.load(std::memory_order_relaxed);
    if (std::isfinite(incumbent)) {
      const double bound = state_.value + added_value_bound();
      if (bound < incumbent - 1e-9 * (1.0 + std::abs(incumbent))) return;
    }

    const std::size_t i = order_[depth];
    if (state_.can_add(i)) {
      state_.add(i);
      dfs(depth + 1);
      state_.remove(i);
    }
    dfs(depth + 1);
  }

  const AssignmentProblem& p_;
  const std::vector<std::size_t>& order_;
  Shared& shared_;
  SearchState state_;
  Candidate best_;
  std::vector<std::uint8_t> addable_;
  std::vector<double> user_sum_;
  std::vector<std::size_t> sorted_power_;
  std::vector<std::size_t> sorted_load_;
  std::vector<std::size_t> sorted_slots_;
};

AssignmentResult finish(const AssignmentProblem& p, const Candidate& best, bool proven, long nodes) {
  if (!best.found) {
    if (!proven)
      throw InfeasibleAssignmentError("node_limit", "no feasible assignment found within the node limit");
    throw InfeasibleAssignmentError("slice_rate", "no assignment meets every slice minimum rate");
  }
  (void)p;
  return {best.rho, best.objective, proven, nodes};
}

}  // namespace

AssignmentResult solve_bnb(const AssignmentProblem& p, const BnbOptions& options) {
  // Links that can never be worth scheduling stay at zero.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < p.num_vars(); ++i) {
    const int b = static_cast<int>(i / (static_cast<std::size_t>(p.dims.codebooks) * p.dims.users));
    if (!p.allowed[i] || !(p.lower[i] > 0.0) || p.power[i] > p.power_caps[b] * (1.0 + kRelTol) ||
        p.upper[i] > p.fronthaul_caps[b] * (1.0 + kRelTol) || p.reuse_limit < 1)
      continue;
    order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p.lower[a] > p.lower[b]; });

  Shared shared;
  shared.node_limit = std::max(1L, options.node_limit);
  Candidate best;
  if (options.incumbent) {
    best.offer(p, *options.incumbent);
    if (best.found) shared.best = best.objective;
  }

  const int threads = std::max(1, options.threads);
  std::size_t split = 0;
  while (threads > 1 && split < order.size() && (std::size_t{1} << split) < static_cast<std::size_t>(threads) * 4)
    ++split;
  std::vector<std::vector<bool>> jobs;
  for (std::size_t mask = 0; mask < (std::size_t{1} << split); ++mask) {
    std::vector<bool> prefix(split);
    // 1-branches first, matching the sequential visiting order.
    for (std::size_t d = 0; d < split; ++d) prefix[d] = !((mask >> (split - 1 - d)) & 1u);
    jobs.push_back(std::move(prefix));
  }

  std::vector<Candidate> found(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      BranchAndBound bnb(p, order, shared);
      if (!bnb.apply_prefix(jobs[j])) continue;
      bnb.run(split);
      found[j] = bnb.best();
    }
  };
  if (threads == 1 || jobs.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const Candidate& c : found)
    if (c.found) best.offer(p, c.rho);
  return finish(p, best, !shared.aborted, shared.nodes.load());
}

AssignmentResult solve_exhaustive(const AssignmentProblem& p, std::uint64_t cap) {
  const std::size_t n = p.num_vars();
  if (n >= 63 || (std::uint64_t{1} << n) > cap)
    throw std::length_error("exhaustive search space of 2^" + std::to_string(n) + " patterns exceeds the cap");
  SearchState state(p);
  Candidate best;
  long nodes = 0;
  // Index order, 0 before 1, replacing only on strict improvement: the first optimum
  // reached is the lexicographically smallest one.
  auto visit = [&](auto&& self, std::size_t i) -> void {
    ++nodes;
    if (i == n) {
      const double obj = p.objective(state.rho);
      if ((!best.found || obj > best.objective) && p.feasible(state.rho)) {
        best.found = true;
        best.objective = obj;
        best.rho = state.rho;
      }
      return;
    }
    self(self, i + 1);
    if (state.can_add(i)) {
      state.add(i);
      self(self, i + 1);
      state.remove(i);
    }
  };
  visit(visit, 0);
  return finish(p, best, true, nodes);
}

}  // namespace rscma
