#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "oracle/instances.hpp"
#include "rscma/assign.hpp"
#include "rscma/beamform.hpp"

using namespace rscma;

namespace {

// Problem with coefficients given directly; caps are loose unless set afterwards.
AssignmentProblem direct(int rrh, int codebooks, int users, CodebookMap q, std::vector<double> lower) {
  AssignmentProblem p;
  p.dims = Dims{rrh, q.subcarriers(), users, codebooks, 1};
  p.q = std::move(q);
  p.beams = BeamformerSet(p.dims);
  const std::size_t n = p.dims.num_links();
  p.lower = std::move(lower);
  p.upper = p.lower;
  p.power.assign(n, 0.0);
  p.allowed.assign(n, 1);
  p.power_caps.assign(static_cast<std::size_t>(rrh), 1e9);
  p.fronthaul_caps.assign(static_cast<std::size_t>(rrh), 1e9);
  p.slice_min_rates = {0.0};
  p.slice_of.assign(static_cast<std::size_t>(users), 0);
  p.reuse_limit = 1000;
  return p;
}

AssignmentProblem random_problem(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int rrh = std::uniform_int_distribution<int>(1, 2)(rng);
  const int users = pick(rng);
  const int codebooks = std::min(pick(rng), 12 / (rrh * users));
  const int subcarriers = codebooks + 2;
  const CodebookMap q = build_codebook_map(subcarriers, codebooks, 2);
  const std::size_t n = static_cast<std::size_t>(rrh * codebooks * users);
  std::vector<double> lower(n);
  for (double& v : lower) v = std::floor(u(rng) * 8.0) / 4.0;  // coarse values make ties common
  AssignmentProblem p = direct(rrh, codebooks, users, q, lower);
  for (std::size_t i = 0; i < n; ++i) {
    p.upper[i] = p.lower[i] * (1.0 + u(rng));
    p.power[i] = u(rng);
  }
  for (double& c : p.power_caps) c = 0.5 + 1.5 * u(rng);
  for (double& c : p.fronthaul_caps) c = 1.0 + 4.0 * u(rng);
  p.reuse_limit = pick(rng);
  p.one_codebook_per_user = u(rng) < 0.3;
  if (u(rng) < 0.3) {
    p.slice_min_rates = {0.0, 0.5 * u(rng)};
    for (int k = 0; k < users; ++k) p.slice_of[k] = k % 2;
  }
  return p;
}

}  // namespace

TEST_CASE("two users, two codebooks: each user on its best codebook") {
  const CodebookMap q(2, {{0}, {1}});
  // Link order is (c, k): (c1,k1)=2, (c1,k2)=1, (c2,k1)=1, (c2,k2)=3.
  AssignmentProblem p = direct(1, 2, 2, q, {2, 1, 1, 3});
  p.one_codebook_per_user = true;
  const AssignmentResult r = solve_bnb(p);
  CHECK(r.objective == 5.0);
  CHECK(r.rho.at(0, 0, 0));
  CHECK(r.rho.at(0, 1, 1));
  CHECK(r.rho.count() == 2);
  CHECK(r.proven_optimal);
  CHECK(solve_exhaustive(p).rho == r.rho);

  // Without the switch a user may hold both codebooks of its RRH.
  p.one_codebook_per_user = false;
  CHECK(solve_bnb(p).objective == 7.0);
}

TEST_CASE("reuse limit one admits a single user on shared subcarriers") {
  const CodebookMap q(2, {{0, 1}, {0, 1}});
  AssignmentProblem p = direct(1, 2, 2, q, {2, 1, 1, 3});
  p.reuse_limit = 1;
  const AssignmentResult r = solve_bnb(p);
  CHECK(r.rho.count() == 1);
  CHECK(r.objective == 3.0);
}

TEST_CASE("a single user is served by one RRH only") {
  const CodebookMap q(3, {{0, 1}, {1, 2}});
  // Links (b, c): (0,0)=1, (0,1)=1, (1,0)=1.5, (1,1)=1.5.
  const AssignmentProblem p = direct(2, 2, 1, q, {1, 1, 1.5, 1.5});
  const AssignmentResult r = solve_bnb(p);
  int rrhs = 0;
  for (int b = 0; b < 2; ++b) rrhs += r.rho.at(b, 0, 0) || r.rho.at(b, 1, 0);
  CHECK(rrhs == 1);
  CHECK(r.objective == 3.0);
  CHECK(p.feasible(r.rho));
}

TEST_CASE("single link coefficient equals the rate module value") {
  NetworkConfig c = testing::small_config(1, 1, 2, 1, 2, 0.05);
  const testing::Instance in = testing::make_instance(c, 4);
  Assignment rho(c.dims());
  rho.set(0, 0, 0, true);
  const BeamformerSet w = init_beamformers(in.channels, rho, in.q, c);
  const AssignmentProblem p = build_assignment_problem(w, rho, in.q, in.channels, c);
  const RateReport r = aggregate_report(w, rho, in.q, in.channels, c);
  REQUIRE(r.links.size() == 1);
  CHECK(p.lower[0] == doctest::Approx(r.links[0].lower).epsilon(1e-14));
  CHECK(p.upper[0] == doctest::Approx(r.links[0].upper).epsilon(1e-14));
}

TEST_CASE("empty previous assignment gives interference-free coefficients") {
  const NetworkConfig c = testing::small_config(2, 3, 4, 4, 2, 0.05);
  const testing::Instance in = testing::make_instance(c, 6);
  const Dims d = c.dims();
  std::mt19937_64 rng(6);
  const Assignment busy = testing::random_assignment(d, in.q, c.reuse_limit, rng);
  const BeamformerSet w = init_beamformers(in.channels, busy, in.q, c);
  const AssignmentProblem empty = build_assignment_problem(w, Assignment(d), in.q, in.channels, c);
  const AssignmentProblem free_policy =
      build_assignment_problem(w, busy, in.q, in.channels, c, RateModel::kRobust, FreezePolicy::kInterferenceFree);
  const AssignmentProblem frozen = build_assignment_problem(w, busy, in.q, in.channels, c);
  for (std::size_t i = 0; i < d.num_links(); ++i) {
    // Same candidate beams on every scheduled beam; the free policy ignores the pattern.
    REQUIRE(free_policy.lower[i] >= frozen.lower[i] - 1e-15);
    REQUIRE(empty.lower[i] >= 0.0);
  }
  // Isolated link: the coefficient is the interference-free robust rate.
  for (int b = 0; b < d.rrh; ++b)
    for (int cb = 0; cb < d.codebooks; ++cb)
      for (int k = 0; k < d.users; ++k) {
        Assignment alone(d);
        alone.set(b, cb, k, true);
        const BeamformerSet beams = mask_beams(empty.beams, alone, in.q);
        const RateReport r = aggregate_report(beams, alone, in.q, in.channels, c);
        CHECK(empty.lower[d.link_index(b, cb, k)] == doctest::Approx(r.links[0].lower).epsilon(1e-12));
      }
}

TEST_CASE("assignment tally matches NoC2") {
  NetworkConfig c = testing::small_config(2, 3, 4, 4, 2, 0.05);
  c.num_slices = 2;
  c.slice_sizes = {2, 1};
  c.slice_min_rates = {0.0, 0.0};
  const testing::Instance in = testing::make_instance(c, 1);
  const BeamformerSet w(c.dims());
  const AssignmentProblem p = build_assignment_problem(w, Assignment(c.dims()), in.q, in.channels, c);
  const long bck = 2 * 4 * 3;
  CHECK(p.tally().total() == 5 * bck + 16 * 4 + 4 + 2 * 2 + 2);
  CHECK(p.tally().total() == constraint_counts(c).second);
}

TEST_CASE("unattainable slice minimum is reported by both solvers") {
  const CodebookMap q(2, {{0}, {1}});
  AssignmentProblem p = direct(1, 2, 2, q, {2, 1, 1, 3});
  p.slice_min_rates = {0.0, 100.0};
  p.slice_of = {0, 1};
  try {
    solve_bnb(p);
    FAIL("expected InfeasibleAssignmentError");
  } catch (const InfeasibleAssignmentError& e) {
    CHECK(e.family() == "slice_rate");
  }
  CHECK_THROWS_AS(solve_exhaustive(p), InfeasibleAssignmentError);
}

TEST_CASE("no users gives the empty assignment") {
  const CodebookMap q(2, {{0}, {1}});
  const AssignmentProblem p = direct(1, 2, 0, q, {});
  const AssignmentResult r = solve_bnb(p);
  CHECK(r.rho.count() == 0);
  CHECK(r.objective == 0.0);
  CHECK(solve_exhaustive(p).objective == 0.0);
}

TEST_CASE("exhaustive search refuses oversized problems") {
  const CodebookMap q(2, {{0}, {1}});
  const AssignmentProblem p = direct(1, 2, 11, q, std::vector<double>(22, 1.0));
  CHECK_THROWS_AS(solve_exhaustive(p, 1 << 20), std::length_error);
}

TEST_CASE("property: branch and bound equals enumeration") {
  std::mt19937_64 rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const AssignmentProblem p = random_problem(rng);
    AssignmentResult a, b;
    bool a_inf = false, b_inf = false;
    try {
      a = solve_bnb(p);
    } catch (const InfeasibleAssignmentError&) {
      a_inf = true;
    }
    try {
      b = solve_exhaustive(p);
    } catch (const InfeasibleAssignmentError&) {
      b_inf = true;
    }
    REQUIRE(a_inf == b_inf);
    if (a_inf) continue;
    ++compared;
    REQUIRE(a.objective == b.objective);
    REQUIRE(a.rho == b.rho);
    REQUIRE(p.feasible(a.rho));
  }
  CHECK(compared > 200);
}

TEST_CASE("property: the optimum never falls below a feasible previous assignment") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const NetworkConfig c = testing::small_config(2, 3, 4, 4, 2, 0.05);
    const testing::Instance in = testing::make_instance(c, seed);
    std::mt19937_64 rng(seed);
    const Assignment prev = testing::random_assignment(c.dims(), in.q, c.reuse_limit, rng);
    const BeamformerSet w = init_beamformers(in.channels, prev, in.q, c);
    const AssignmentProblem p = build_assignment_problem(w, prev, in.q, in.channels, c);
    if (!p.feasible(prev)) continue;
    const AssignmentResult r = solve_bnb(p);
    CHECK(r.objective >= p.objective(prev));
    CHECK(p.feasible(r.rho));
    CHECK(assignment_structurally_feasible(r.rho, in.q, c.reuse_limit));
  }
}

TEST_CASE("thread count does not change the answer") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const AssignmentProblem p = random_problem(rng);
    BnbOptions one, four;
    four.threads = 4;
    try {
      const AssignmentResult a = solve_bnb(p, one);
      const AssignmentResult b = solve_bnb(p, four);
      CHECK(a.rho == b.rho);
      CHECK(a.objective == b.objective);
    } catch (const InfeasibleAssignmentError&) {
      CHECK_THROWS_AS(solve_bnb(p, four), InfeasibleAssignmentError);
    }
  }
}

TEST_CASE("assignment JSON is a sparse triple list") {
  const Dims d{2, 4, 3, 4, 1};
  Assignment rho(d);
  rho.set(1, 2, 0, true);
  rho.set(0, 3, 2, true);
  const auto j = to_json(rho);
  CHECK(j.size() == 2);
  CHECK(assignment_from_json(j, d) == rho);
}
