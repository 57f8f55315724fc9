#include "rscma/beamform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace rscma {

double bilinear_surrogate(double psi, double phi, double psi_t, double phi_t) {
  const double a = psi_t - phi_t;
  return 0.25 * (psi + phi) * (psi + phi) - 0.25 * (a * a + 2.0 * a * (psi - psi_t - phi + phi_t));
}

double quadratic_tangent(const std::array<double, 2>& theta, const std::array<double, 2>& theta_t) {
  const double n2 = theta_t[0] * theta_t[0] + theta_t[1] * theta_t[1];
  return n2 + 2.0 * (theta_t[0] * (theta[0] - theta_t[0]) + theta_t[1] * (theta[1] - theta_t[1]));
}

AuxiliaryVars::AuxiliaryVars(Dims d, double noise)
    : dims(d),
      psi1(d.num_links(), 1.0),
      phi1(d.num_links(), noise),
      psi2(d.num_links(), 0.0),
      phi2(d.num_links(), noise) {}

const char* family_name(ConstraintFamily family) {
  switch (family) {
    case ConstraintFamily::kPower: return "power";
    case ConstraintFamily::kSliceRate: return "slice_rate";
    case ConstraintFamily::kSignalEpigraph: return "signal_epigraph";
    case ConstraintFamily::kDenominator: return "denominator";
    case ConstraintFamily::kFronthaul: return "fronthaul";
    case ConstraintFamily::kUpperRateEpigraph: return "upper_rate_epigraph";
    case ConstraintFamily::kUpperDenominator: return "upper_denominator";
    case ConstraintFamily::kDomain: return "domain";
  }
  return "unknown";
}

bool assignment_structurally_feasible(const Assignment& rho, const CodebookMap& q, int reuse_limit) {
  const Dims& d = rho.dims();
  for (int n = 0; n < d.subcarriers; ++n)
    if (reuse_count(rho, q, n) > reuse_limit) return false;
  for (int k = 0; k < d.users; ++k) {
    int rrh = -1;
    for (int b = 0; b < d.rrh; ++b)
      for (int c = 0; c < d.codebooks; ++c)
        if (rho.at(b, c, k)) {
          if (rrh >= 0 && rrh != b) return false;
          rrh = b;
        }
  }
  return true;
}

BeamformerSet init_beamformers(const ChannelSet& channels, const Assignment& rho, const CodebookMap& q,
                               const NetworkConfig& config) {
  const Dims& d = rho.dims();
  BeamformerSet w(d);
  for (int b = 0; b < d.rrh; ++b) {
    long slots = 0;
    for (int c = 0; c < d.codebooks; ++c)
      for (int k = 0; k < d.users; ++k)
        if (rho.at(b, c, k)) slots += static_cast<long>(q.support(c).size());
    if (slots == 0) continue;
    const double amplitude = std::sqrt(config.power_caps_w[b] / static_cast<double>(slots));
    for (int c = 0; c < d.codebooks; ++c)
      for (int k = 0; k < d.users; ++k) {
        if (!rho.at(b, c, k)) continue;
        for (int n : q.support(c)) {
          const auto h = channels.h(b, n, k);
          double norm = 0.0;
          for (const cplx& v : h) norm += std::norm(v);
          norm = std::sqrt(norm);
          auto beam = w.w(b, n, k);
          for (std::size_t m = 0; m < h.size(); ++m)
            beam[m] = norm > 0.0 ? amplitude * std::conj(h[m]) / norm : cplx(0.0);
        }
      }
  }
  return w;
}

namespace {

double received_power(std::span<const cplx> w, std::span<const cplx> h) {
  cplx s = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) s += w[m] * h[m];
  return std::norm(s);
}

struct Interferer {
  int b;  // transmitting RRH
  int n;
  int k;  // interfering user
};

// Beams on codebook c that reach user k, excluding the link's own beams.
std::vector<Interferer> interferers(const Assignment& rho, const CodebookMap& q, int b, int c, int k) {
  const Dims& d = rho.dims();
  std::vector<Interferer> out;
  for (int n : q.support(c)) {
    for (int kk = 0; kk < d.users; ++kk)
      if (kk != k && rho.at(b, c, kk)) out.push_back({b, n, kk});
    for (int bb = 0; bb < d.rrh; ++bb) {
      if (bb == b) continue;
      for (int kk = 0; kk < d.users; ++kk)
        if (rho.at(bb, c, kk)) out.push_back({bb, n, kk});
    }
  }
  return out;
}

}  // namespace

AuxiliaryVars tight_expansion_point(const BeamformerSet& w, const Assignment& rho, const CodebookMap& q,
                                    const ChannelSet& channels, const NetworkConfig& config, RateModel model) {
  const Dims& d = rho.dims();
  const double noise = config.noise_power();
  AuxiliaryVars aux(d, noise);
  const bool robust = model == RateModel::kRobust;
  for (const Link& l : rho.links()) {
    double num_lo = 0.0, num_up = 0.0, den_lo = noise, den_up = noise;
    for (int n : q.support(l.c)) {
      const auto beam = w.w(l.b, n, l.k);
      const double p = received_power(beam, channels.h(l.b, n, l.k));
      const double prot = robust ? channels.theta(l.b, n, l.k) * w.norm2(l.b, n, l.k) : 0.0;
      num_lo += std::max(0.0, p - prot);
      num_up += p + prot;
    }
    for (const Interferer& j : interferers(rho, q, l.b, l.c, l.k)) {
      const double p = received_power(w.w(j.b, j.n, j.k), channels.h(j.b, j.n, l.k));
      const double prot = robust ? channels.theta(j.b, j.n, l.k) * w.norm2(j.b, j.n, j.k) : 0.0;
      den_lo += p + prot;
      den_up += std::max(0.0, p - prot);
    }
    const std::size_t li = d.link_index(l.b, l.c, l.k);
    aux.psi1[li] = 1.0 + num_lo / den_lo;
    aux.phi1[li] = den_lo;
    aux.psi2[li] = rate_of(num_up / den_up);
    aux.phi2[li] = den_up;
  }
  return aux;
}

namespace {

struct Builder {
  const Assignment& rho;
  const CodebookMap& q;
  const ChannelSet& channels;
  const BeamformerSet& w_t;
  double inv_sqrt_noise;
  double theta_factor;  // 1/σ for the robust model, 0 for the nominal one
  const ConvexSubproblem& p;
  int antennas;

  cplx channel(int b, int n, int k, int m) const { return channels.h(b, n, k)[m] * inv_sqrt_noise; }
  double theta(int b, int n, int k) const { return channels.theta(b, n, k) * theta_factor; }
  int offset(int b, int n, int k) const { return p.beam_offset[rho.dims().beam_index(b, n, k)]; }

  // Real and imaginary parts of wᵀh̃ for beam (tb, n, tk) seen through channel (tb, n, rk).
  std::pair<ipm::LinearForm, ipm::LinearForm> forms(int tb, int n, int tk, int rk) const {
    const int o = offset(tb, n, tk);
    ipm::LinearForm re, im;
    for (int m = 0; m < antennas; ++m) {
      const cplx h = channel(tb, n, rk, m);
      re.terms.push_back({o + m, h.real()});
      re.terms.push_back({o + antennas + m, -h.imag()});
      im.terms.push_back({o + m, h.imag()});
      im.terms.push_back({o + antennas + m, h.real()});
    }
    return {re, im};
  }

  // θᵗ for the same pair at the expansion point.
  std::array<double, 2> theta_t(int tb, int n, int tk, int rk) const {
    const auto beam = w_t.w(tb, n, tk);
    cplx s = 0.0;
    for (int m = 0; m < antennas; ++m) s += beam[m] * channel(tb, n, rk, m);
    return {s.real(), s.imag()};
  }

  double protection_t(int tb, int n, int tk, int rk) const {
    return theta(tb, n, rk) * w_t.norm2(tb, n, tk);
  }

  void add_norm_squares(ipm::ConvexFunction& f, int tb, int n, int tk, double weight) const {
    if (weight <= 0.0) return;
    const int o = offset(tb, n, tk);
    for (int j = 0; j < 2 * antennas; ++j) f.add_square(weight, {{{o + j, 1.0}}, 0.0});
  }

  // Adds −g(θ; θᵗ) for the given pair.
  void add_neg_tangent(ipm::ConvexFunction& f, int tb, int n, int tk, int rk) const {
    const auto [re, im] = forms(tb, n, tk, rk);
    const auto t = theta_t(tb, n, tk, rk);
    for (const auto& term : re.terms) f.add_linear(term.index, -2.0 * t[0] * term.coef);
    for (const auto& term : im.terms) f.add_linear(term.index, -2.0 * t[1] * term.coef);
    f.add_constant(t[0] * t[0] + t[1] * t[1]);
  }
};

}  // namespace

ConvexSubproblem build_subproblem(const Assignment& rho, const CodebookMap& q, const ChannelSet& channels,
                                  const NetworkConfig& config, const ExpansionPoint& expansion, RateModel model) {
  const Dims& d = rho.dims();
  if (d.rrh != channels.dims().rrh || d.subcarriers != channels.dims().subcarriers ||
      d.users != channels.dims().users || d.antennas != channels.dims().antennas || d.codebooks != q.codebooks())
    throw std::invalid_argument("subproblem inputs have inconsistent shapes");
  const Dims& wd = expansion.w.dims();
  if (wd.rrh != d.rrh || wd.subcarriers != d.subcarriers || wd.users != d.users || wd.antennas != d.antennas)
    throw std::invalid_argument("expansion beams have the wrong shape");
  if (!assignment_structurally_feasible(rho, q, config.reuse_limit))
    throw std::invalid_argument("assignment violates the reuse limit or the single-RRH rule");

  ConvexSubproblem p;
  p.dims = d;
  p.noise = config.noise_power();
  const int M = d.antennas;
  p.beam_offset.assign(d.num_beams(), -1);
  p.link_offset.assign(d.num_links(), -1);
  const std::vector<Link> links = rho.links();
  for (const Link& l : links)
    for (int n : q.support(l.c)) {
      int& o = p.beam_offset[d.beam_index(l.b, n, l.k)];
      if (o >= 0) continue;
      o = p.num_vars;
      p.num_vars += 2 * M;
    }
  const int beam_vars = p.num_vars;
  p.scale.assign(static_cast<std::size_t>(beam_vars), 1.0);
  const auto& aux = expansion.aux;
  auto positive_or = [](double v, double fallback) { return v > 0.0 && std::isfinite(v) ? v : fallback; };
  for (const Link& l : links) {
    const std::size_t li = d.link_index(l.b, l.c, l.k);
    p.link_offset[li] = p.num_vars;
    p.num_vars += 4;
    p.scale.push_back(positive_or(aux.psi1[li], 1.0));
    p.scale.push_back(positive_or(aux.phi1[li] / p.noise, 1.0));
    p.scale.push_back(std::max(1.0, aux.psi2[li]));
    p.scale.push_back(positive_or(aux.phi2[li] / p.noise, 1.0));
  }

  p.start.setZero(p.num_vars);
  for (std::size_t bi = 0; bi < d.num_beams(); ++bi) {
    const int o = p.beam_offset[bi];
    if (o < 0) continue;
    const auto beam = std::span<const cplx>(expansion.w.data().data() + bi * M, static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
      p.start[o + m] = beam[m].real();
      p.start[o + M + m] = beam[m].imag();
    }
  }
  for (const Link& l : links) {
    const std::size_t li = d.link_index(l.b, l.c, l.k);
    const int v = p.link_offset[li];
    p.start[v] = aux.psi1[li] / p.scale[v];
    p.start[v + 1] = aux.phi1[li] / p.noise / p.scale[v + 1];
    p.start[v + 2] = aux.psi2[li] / p.scale[v + 2];
    p.start[v + 3] = aux.phi2[li] / p.noise / p.scale[v + 3];
  }

  const Builder bld{rho, q, channels, expansion.w, 1.0 / std::sqrt(p.noise),
                    model == RateModel::kRobust ? 1.0 / p.noise : 0.0, p, M};
  const double ln2 = std::numbers::ln2;

  // Objective: −Σ log2 ψ1.
  for (const Link& l : links) {
    const int v = p.link_offset[d.link_index(l.b, l.c, l.k)];
    p.objective.add_neg_log(v, 1.0 / ln2);
    p.objective.add_constant(-std::log2(p.scale[v]));
  }

  // Per-RRH power budget.
  for (int b = 0; b < d.rrh; ++b) {
    ConstraintRecord r{ConstraintFamily::kPower, b, false, {}};
    r.f.add_constant(-1.0);
    for (const Link& l : links) {
      if (l.b != b) continue;
      r.active = true;
      for (int n : q.support(l.c)) bld.add_norm_squares(r.f, b, n, l.k, 1.0 / config.power_caps_w[b]);
    }
    p.records.push_back(std::move(r));
  }

  // Slice minimum rates.
  const std::vector<int> slice_of = slice_assignment(config);
  for (int s = 0; s < config.num_slices; ++s) {
    ConstraintRecord r{ConstraintFamily::kSliceRate, s, false, {}};
    const double rmin = config.slice_min_rates[s];
    if (rmin > 0.0) {
      bool any = false;
      r.f.add_constant(rmin);
      for (const Link& l : links) {
        if (slice_of[l.k] != s) continue;
        const int v = p.link_offset[d.link_index(l.b, l.c, l.k)];
        r.f.add_neg_log(v, 1.0 / ln2);
        r.f.add_constant(-std::log2(p.scale[v]));
        any = true;
      }
      if (!any) throw ipm::InfeasibleError("slice " + std::to_string(s) + " has no scheduled link", rmin);
      r.f.scale(1.0 / std::max(1.0, rmin));
      r.active = true;
    }
    p.records.push_back(std::move(r));
  }

  // Per-link epigraph constraints; unscheduled links keep inactive placeholders.
  for (int b = 0; b < d.rrh; ++b)
    for (int c = 0; c < d.codebooks; ++c)
      for (int k = 0; k < d.users; ++k) {
        const int li = static_cast<int>(d.link_index(b, c, k));
        ConstraintRecord sig{ConstraintFamily::kSignalEpigraph, li, false, {}};
        ConstraintRecord den{ConstraintFamily::kDenominator, li, false, {}};
        ConstraintRecord up{ConstraintFamily::kUpperRateEpigraph, li, false, {}};
        ConstraintRecord upden{ConstraintFamily::kUpperDenominator, li, false, {}};
        if (rho.at(b, c, k)) {
          const int v = p.link_offset[li];
          const double s_psi1 = p.scale[v], s_phi1 = p.scale[v + 1], s_psi2 = p.scale[v + 2],
                       s_phi2 = p.scale[v + 3];
          const double psi1_t = aux.psi1[li], phi1_t = aux.phi1[li] / p.noise;
          const double psi2_t = aux.psi2[li], phi2_t = aux.phi2[li] / p.noise;
          const auto others = interferers(rho, q, b, c, k);

          // G(ψ1, φ1) − φ1 − Σ_{n∈S'} (g − Θ̃‖w‖²) ≤ 0
          sig.active = true;
          const double a = psi1_t - phi1_t;
          sig.f.add_square(1.0, {{{v, 0.5 * s_psi1}, {v + 1, 0.5 * s_phi1}}, 0.0});
          sig.f.add_constant(0.25 * a * a);
          sig.f.add_linear(v, -0.5 * a * s_psi1);
          sig.f.add_linear(v + 1, 0.5 * a * s_phi1 - s_phi1);
          for (int n : q.support(c)) {
            const auto t = bld.theta_t(b, n, k, k);
            if (t[0] * t[0] + t[1] * t[1] - bld.protection_t(b, n, k, k) <= 0.0) continue;
            bld.add_neg_tangent(sig.f, b, n, k, k);
            bld.add_norm_squares(sig.f, b, n, k, bld.theta(b, n, k));
          }
          sig.f.scale(1.0 / std::max(1.0, std::abs(psi1_t * phi1_t)));

          // Σ_j (|wⱼᵀh̃|² + Θ̃‖wⱼ‖²) + 1 − φ1 ≤ 0
          den.active = true;
          den.f.add_constant(1.0);
          den.f.add_linear(v + 1, -s_phi1);
          for (const Interferer& j : others) {
            auto [re, im] = bld.forms(j.b, j.n, j.k, k);
            den.f.add_square(1.0, std::move(re));
            den.f.add_square(1.0, std::move(im));
            bld.add_norm_squares(den.f, j.b, j.n, j.k, bld.theta(j.b, j.n, k));
          }
          den.f.scale(1.0 / std::max(1.0, phi1_t));

          // Σ_n (|wᵀh̃|² + Θ̃‖w‖²) / φ2 + 1 − 2^{ψ2ᵗ}(1 + ln2 (ψ2 − ψ2ᵗ)) ≤ 0
          up.active = true;
          std::vector<ipm::LinearForm> rows;
          for (int n : q.support(c)) {
            auto [re, im] = bld.forms(b, n, k, k);
            rows.push_back(std::move(re));
            rows.push_back(std::move(im));
            const double th = bld.theta(b, n, k);
            if (th > 0.0) {
              const int o = bld.offset(b, n, k);
              for (int jx = 0; jx < 2 * M; ++jx) rows.push_back({{{o + jx, std::sqrt(th)}}, 0.0});
            }
          }
          up.f.add_quad_over_lin(1.0 / s_phi2, std::move(rows), v + 3);
          const double e = std::exp2(psi2_t);
          up.f.add_constant(1.0 - e * (1.0 - ln2 * psi2_t));
          up.f.add_linear(v + 2, -e * ln2 * s_psi2);
          up.f.scale(1.0 / e);

          // φ2 − 1 − Σ_{j∈S} (g − Θ̃‖wⱼ‖²) ≤ 0
          upden.active = true;
          upden.f.add_linear(v + 3, s_phi2);
          upden.f.add_constant(-1.0);
          for (const Interferer& j : others) {
            const auto t = bld.theta_t(j.b, j.n, j.k, k);
            if (t[0] * t[0] + t[1] * t[1] - bld.protection_t(j.b, j.n, j.k, k) <= 0.0) continue;
            bld.add_neg_tangent(upden.f, j.b, j.n, j.k, k);
            bld.add_norm_squares(upden.f, j.b, j.n, j.k, bld.theta(j.b, j.n, k));
          }
          upden.f.scale(1.0 / std::max(1.0, phi2_t));
        }
        p.records.push_back(std::move(sig));
        p.records.push_back(std::move(den));
        p.records.push_back(std::move(up));
        p.records.push_back(std::move(upden));
      }

  // Per-RRH fronthaul caps on Σ ψ2.
  for (int b = 0; b < d.rrh; ++b) {
    ConstraintRecord r{ConstraintFamily::kFronthaul, b, false, {}};
    r.f.add_constant(-1.0);
    for (const Link& l : links) {
      if (l.b != b) continue;
      const int v = p.link_offset[d.link_index(l.b, l.c, l.k)];
      r.f.add_linear(v + 2, p.scale[v + 2] / config.fronthaul_caps[b]);
      r.active = true;
    }
    p.records.push_back(std::move(r));
  }

  // Domain bounds ψ1 ≥ 1/2 and φ2 ≥ 10⁻³ (noise units).
  for (const Link& l : links) {
    const int v = p.link_offset[d.link_index(l.b, l.c, l.k)];
    ConstraintRecord lo{ConstraintFamily::kDomain, v, true, {}};
    lo.f.add_constant(0.5 / p.scale[v]);
    lo.f.add_linear(v, -1.0);
    p.records.push_back(std::move(lo));
    ConstraintRecord pos{ConstraintFamily::kDomain, v + 3, true, {}};
    pos.f.add_constant(1e-3 / p.scale[v + 3]);
    pos.f.add_linear(v + 3, -1.0);
    p.records.push_back(std::move(pos));
  }
  return p;
}

ConstraintTally ConvexSubproblem::tally() const {
  ConstraintTally t;
  for (const ConstraintRecord& r : records)
    if (r.family != ConstraintFamily::kDomain) t.add(family_name(r.family));
  return t;
}

bool ConvexSubproblem::is_structurally_convex() const {
  if (!objective.structurally_convex()) return false;
  for (const ConstraintRecord& r : records)
    if (!r.f.structurally_convex()) return false;
  return true;
}

ipm::Problem ConvexSubproblem::problem() const {
  ipm::Problem prob;
  prob.num_vars = num_vars;
  prob.objective = objective;
  for (const ConstraintRecord& r : records) {
    if (!r.active) continue;
    if (r.f.is_constant()) {
      if (r.f.value(Eigen::VectorXd::Zero(num_vars)) < 0.0) continue;
      throw ipm::InfeasibleError(std::string("constant ") + family_name(r.family) + " constraint is violated", 0.0);
    }
    prob.constraints.push_back(r.f);
    prob.domain.push_back(r.family == ConstraintFamily::kDomain);
  }
  return prob;
}

std::vector<double> ConvexSubproblem::constraint_values(const Eigen::VectorXd& x) const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const ConstraintRecord& r : records) out.push_back(r.active ? r.f.value(x) : 0.0);
  return out;
}

void ConvexSubproblem::write_text(std::ostream& os) const {
  os << "variables " << num_vars << '\n';
  for (std::size_t bi = 0; bi < beam_offset.size(); ++bi)
    if (beam_offset[bi] >= 0) os << "beam " << bi << " x" << beam_offset[bi] << " .. x" << beam_offset[bi] + 2 * dims.antennas - 1 << '\n';
  for (std::size_t li = 0; li < link_offset.size(); ++li)
    if (link_offset[li] >= 0) {
      const int v = link_offset[li];
      os << "link " << li << " psi1=x" << v << "*" << scale[v] << " phi1=x" << v + 1 << "*" << scale[v + 1]
         << " psi2=x" << v + 2 << "*" << scale[v + 2] << " phi2=x" << v + 3 << "*" << scale[v + 3] << '\n';
    }
  os << "minimize ";
  objective.write_text(os);
  os << '\n';
  for (const ConstraintRecord& r : records) {
    if (!r.active) continue;
    os << family_name(r.family) << ' ' << r.index << ": ";
    r.f.write_text(os);
    os << " <= 0\n";
  }
}

SubproblemSolution unpack_solution(const ConvexSubproblem& p, const Eigen::VectorXd& x) {
  const Dims& d = p.dims;
  const int M = d.antennas;
  SubproblemSolution sol{BeamformerSet(d), AuxiliaryVars(d, p.noise), 0.0, {}};
  for (int b = 0; b < d.rrh; ++b)
    for (int n = 0; n < d.subcarriers; ++n)
      for (int k = 0; k < d.users; ++k) {
        const int o = p.beam_offset[d.beam_index(b, n, k)];
        if (o < 0) continue;
        auto beam = sol.w.w(b, n, k);
        for (int m = 0; m < M; ++m) beam[m] = cplx(x[o + m], x[o + M + m]);
      }
  for (std::size_t li = 0; li < p.link_offset.size(); ++li) {
    const int v = p.link_offset[li];
    if (v < 0) continue;
    sol.aux.psi1[li] = x[v] * p.scale[v];
    sol.aux.phi1[li] = x[v + 1] * p.scale[v + 1] * p.noise;
    sol.aux.psi2[li] = x[v + 2] * p.scale[v + 2];
    sol.aux.phi2[li] = x[v + 3] * p.scale[v + 3] * p.noise;
    sol.objective += std::log2(sol.aux.psi1[li]);
  }
  return sol;
}

SubproblemSolution solve_subproblem(const ConvexSubproblem& p, const ipm::Options& options) {
  if (!p.is_structurally_convex()) throw std::invalid_argument("subproblem is not structurally convex");
  const ipm::Problem prob = p.problem();
  ipm::Result res = ipm::solve(prob, p.start, options);
  SubproblemSolution sol = unpack_solution(p, res.x);
  sol.stats = std::move(res);
  return sol;
}

}  // namespace rscma
