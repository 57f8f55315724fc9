#include "rscma/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace rscma::ipm {

double LinearForm::eval(const Eigen::VectorXd& x) const {
  double v = constant;
  for (const Term& t : terms) v += t.coef * x[t.index];
  return v;
}

void ConvexFunction::add_linear(int index, double coef) { linear_.push_back({index, coef}); }

void ConvexFunction::add_square(double weight, LinearForm form) {
  squares_.push_back({weight, std::move(form)});
}

void ConvexFunction::add_quad_over_lin(double weight, std::vector<LinearForm> rows, int denominator) {
  qols_.push_back({weight, std::move(rows), denominator});
}

void ConvexFunction::add_neg_log(int index, double weight) { logs_.push_back({index, weight}); }

void ConvexFunction::scale(double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("constraint scale must be positive");
  constant_ *= factor;
  for (Term& t : linear_) t.coef *= factor;
  for (Square& s : squares_) s.weight *= factor;
  for (QuadOverLin& q : qols_) q.weight *= factor;
  for (NegLog& l : logs_) l.weight *= factor;
}

double ConvexFunction::value(const Eigen::VectorXd& x) const {
  double v = constant_;
  for (const Term& t : linear_) v += t.coef * x[t.index];
  for (const Square& s : squares_) {
    const double a = s.form.eval(x);
    v += s.weight * a * a;
  }
  for (const QuadOverLin& q : qols_) {
    const double y = x[q.denominator];
    if (!(y > 0.0)) return std::numeric_limits<double>::infinity();
    double num = 0.0;
    for (const LinearForm& r : q.rows) {
      const double a = r.eval(x);
      num += a * a;
    }
    v += q.weight * num / y;
  }
  for (const NegLog& l : logs_) {
    const double xi = x[l.index];
    if (!(xi > 0.0)) return std::numeric_limits<double>::infinity();
    v -= l.weight * std::log(xi);
  }
  return v;
}

void ConvexFunction::gradient(const Eigen::VectorXd& x, std::vector<Term>& out) const {
  out.clear();
  out.insert(out.end(), linear_.begin(), linear_.end());
  for (const Square& s : squares_) {
    const double f = 2.0 * s.weight * s.form.eval(x);
    for (const Term& t : s.form.terms) out.push_back({t.index, f * t.coef});
  }
  for (const QuadOverLin& q : qols_) {
    const double y = x[q.denominator];
    double num = 0.0;
    for (const LinearForm& r : q.rows) {
      const double a = r.eval(x);
      num += a * a;
      for (const Term& t : r.terms) out.push_back({t.index, 2.0 * q.weight * a * t.coef / y});
    }
    out.push_back({q.denominator, -q.weight * num / (y * y)});
  }
  for (const NegLog& l : logs_) out.push_back({l.index, -l.weight / x[l.index]});

  std::sort(out.begin(), out.end(), [](const Term& a, const Term& b) { return a.index < b.index; });
  std::size_t w = 0;
  for (std::size_t r = 0; r < out.size(); ++r) {
    if (w > 0 && out[w - 1].index == out[r].index) out[w - 1].coef += out[r].coef;
    else out[w++] = out[r];
  }
  out.resize(w);
}

void ConvexFunction::add_hessian(const Eigen::VectorXd& x, double scale, Eigen::MatrixXd& h) const {
  for (const Square& s : squares_) {
    const double f = 2.0 * scale * s.weight;
    for (const Term& a : s.form.terms)
      for (const Term& b : s.form.terms) h(a.index, b.index) += f * a.coef * b.coef;
  }
  for (const QuadOverLin& q : qols_) {
    const int d = q.denominator;
    const double y = x[d];
    double num = 0.0;
    for (const LinearForm& r : q.rows) {
      const double a = r.eval(x);
      num += a * a;
      const double f = 2.0 * scale * q.weight / y;
      for (const Term& ti : r.terms) {
        for (const Term& tj : r.terms) h(ti.index, tj.index) += f * ti.coef * tj.coef;
        const double cross = -2.0 * scale * q.weight * a * ti.coef / (y * y);
        h(ti.index, d) += cross;
        h(d, ti.index) += cross;
      }
    }
    h(d, d) += 2.0 * scale * q.weight * num / (y * y * y);
  }
  for (const NegLog& l : logs_) {
    const double xi = x[l.index];
    h(l.index, l.index) += scale * l.weight / (xi * xi);
  }
}

bool ConvexFunction::structurally_convex() const {
  for (const Square& s : squares_)
    if (s.weight < 0.0) return false;
  for (const QuadOverLin& q : qols_)
    if (q.weight < 0.0) return false;
  for (const NegLog& l : logs_)
    if (l.weight < 0.0) return false;
  return true;
}

bool ConvexFunction::is_constant() const {
  return linear_.empty() && squares_.empty() && qols_.empty() && logs_.empty();
}

int ConvexFunction::max_index() const {
  int m = -1;
  for (const Term& t : linear_) m = std::max(m, t.index);
  for (const Square& s : squares_)
    for (const Term& t : s.form.terms) m = std::max(m, t.index);
  for (const QuadOverLin& q : qols_) {
    m = std::max(m, q.denominator);
    for (const LinearForm& r : q.rows)
      for (const Term& t : r.terms) m = std::max(m, t.index);
  }
  for (const NegLog& l : logs_) m = std::max(m, l.index);
  return m;
}

namespace {

void write_form(std::ostream& os, const LinearForm& f) {
  os << '(' << f.constant;
  for (const Term& t : f.terms) os << " + " << t.coef << "*x" << t.index;
  os << ')';
}

}  // namespace

void ConvexFunction::write_text(std::ostream& os) const {
  os << constant_;
  for (const Term& t : linear_) os << " + " << t.coef << "*x" << t.index;
  for (const Square& s : squares_) {
    os << " + " << s.weight << "*sq";
    write_form(os, s.form);
  }
  for (const QuadOverLin& q : qols_) {
    os << " + " << q.weight << "*qol[";
    for (std::size_t i = 0; i < q.rows.size(); ++i) {
      if (i) os << ", ";
      write_form(os, q.rows[i]);
    }
    os << " / x" << q.denominator << ']';
  }
  for (const NegLog& l : logs_) os << " - " << l.weight << "*log(x" << l.index << ')';
}

namespace {

struct Evaluation {
  Eigen::VectorXd f;
  std::vector<std::vector<Term>> grads;
  std::vector<Term> grad0;
  double f0 = 0.0;
};

bool evaluate_values(const Problem& p, const Eigen::VectorXd& x, Eigen::VectorXd& f, double& f0) {
  f0 = p.objective.value(x);
  if (!std::isfinite(f0)) return false;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    f[i] = p.constraints[i].value(x);
    if (!std::isfinite(f[i]) || f[i] >= 0.0) return false;
  }
  return true;
}

void evaluate_gradients(const Problem& p, const Eigen::VectorXd& x, Evaluation& e) {
  p.objective.gradient(x, e.grad0);
  e.grads.resize(p.constraints.size());
  for (std::size_t i = 0; i < p.constraints.size(); ++i) p.constraints[i].gradient(x, e.grads[i]);
}

void dual_residual(const Problem& p, const Evaluation& e, const Eigen::VectorXd& lambda, Eigen::VectorXd& r) {
  r.setZero(p.num_vars);
  for (const Term& t : e.grad0) r[t.index] += t.coef;
  for (std::size_t i = 0; i < e.grads.size(); ++i)
    for (const Term& t : e.grads[i]) r[t.index] += lambda[i] * t.coef;
}

double residual_norm(const Problem& p, const Evaluation& e, const Eigen::VectorXd& lambda, double t,
                     Eigen::VectorXd& scratch) {
  dual_residual(p, e, lambda, scratch);
  double s = scratch.squaredNorm();
  for (Eigen::Index i = 0; i < e.f.size(); ++i) {
    const double rc = -lambda[i] * e.f[i] - 1.0 / t;
    s += rc * rc;
  }
  return std::sqrt(s);
}

using StopRule = bool (*)(const Eigen::VectorXd& x, const Evaluation& e, const void* ctx);

// Primal-dual iterations from a strictly feasible x. Returns when the KKT
// tolerances are met or `stop` fires.
Result primal_dual(const Problem& p, Eigen::VectorXd x, const Options& opt, StopRule stop, const void* ctx,
                   bool* stopped_early) {
  const int n = p.num_vars;
  const std::size_t m = p.constraints.size();
  Evaluation e;
  e.f.resize(static_cast<Eigen::Index>(m));
  if (!evaluate_values(p, x, e.f, e.f0)) throw std::logic_error("interior-point start is not strictly feasible");
  evaluate_gradients(p, x, e);

  Eigen::VectorXd lambda(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) lambda[i] = -1.0 / e.f[i];
  if (stopped_early) *stopped_early = false;

  Result res;
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd rhs(n), r_dual(n), scratch(n), dx(n), dlambda(static_cast<Eigen::Index>(m));
  Eigen::VectorXd x_new(n), lambda_new(static_cast<Eigen::Index>(m));
  Evaluation e_new;
  e_new.f.resize(static_cast<Eigen::Index>(m));

  auto fill_result = [&](int iterations) {
    res.x = x;
    res.lambda = lambda;
    res.objective = e.f0;
    dual_residual(p, e, lambda, r_dual);
    res.dual_residual = m + n > 0 ? r_dual.lpNorm<Eigen::Infinity>() : 0.0;
    res.gap = m > 0 ? -e.f.dot(lambda) : 0.0;
    res.max_constraint = m > 0 ? e.f.maxCoeff() : -std::numeric_limits<double>::infinity();
    res.iterations = iterations;
  };

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (stop && stop(x, e, ctx)) {
      if (stopped_early) *stopped_early = true;
      fill_result(it);
      return res;
    }
    const double eta = m > 0 ? -e.f.dot(lambda) : 0.0;
    dual_residual(p, e, lambda, r_dual);
    if (r_dual.lpNorm<Eigen::Infinity>() <= opt.tolerance && eta <= opt.tolerance) {
      fill_result(it);
      return res;
    }
    const double t = m > 0 ? opt.mu * static_cast<double>(m) / eta : 1.0;

    h.setZero();
    rhs.setZero();
    p.objective.add_hessian(x, 1.0, h);
    for (const Term& g : e.grad0) rhs[g.index] -= g.coef;
    for (std::size_t i = 0; i < m; ++i) {
      const double fi = e.f[i];
      p.constraints[i].add_hessian(x, lambda[i], h);
      const double c = lambda[i] / -fi;
      const auto& gi = e.grads[i];
      for (const Term& a : gi) {
        rhs[a.index] -= a.coef / (t * -fi);
        for (const Term& b : gi) h(a.index, b.index) += c * a.coef * b.coef;
      }
    }
    // Symmetric diagonal equilibration before factoring.
    const Eigen::VectorXd dscale = h.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd hs = dscale.asDiagonal() * h * dscale.asDiagonal();
    const Eigen::VectorXd rs = dscale.cwiseProduct(rhs);
    double reg = 1e-12 * (1.0 + hs.diagonal().cwiseAbs().maxCoeff());
    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd hr = hs;
      hr.diagonal().array() += reg;
      ldlt.compute(hr);
      if (ldlt.info() == Eigen::Success) {
        dx = ldlt.solve(rs);
        dx += ldlt.solve(rs - hs * dx);
        dx = dscale.cwiseProduct(dx);
        if (dx.allFinite()) break;
      }
      reg *= 100.0;
    }
    if (!dx.allFinite()) break;

    for (std::size_t i = 0; i < m; ++i) {
      double gdx = 0.0;
      for (const Term& a : e.grads[i]) gdx += a.coef * dx[a.index];
      const double rc = -lambda[i] * e.f[i] - 1.0 / t;
      dlambda[i] = (rc - lambda[i] * gdx) / e.f[i];
    }

    double s_max = 1.0;
    for (std::size_t i = 0; i < m; ++i)
      if (dlambda[i] < 0.0) s_max = std::min(s_max, -lambda[i] / dlambda[i]);
    double s = 0.99 * s_max;
    const double r0 = residual_norm(p, e, lambda, t, scratch);
    bool accepted = false;
    for (int bt = 0; bt < 60 && s * dx.lpNorm<Eigen::Infinity>() > 1e-14 * (1.0 + x.lpNorm<Eigen::Infinity>());
         ++bt, s *= opt.beta) {
      x_new = x + s * dx;
      if (!evaluate_values(p, x_new, e_new.f, e_new.f0)) continue;
      lambda_new = lambda + s * dlambda;
      evaluate_gradients(p, x_new, e_new);
      if (residual_norm(p, e_new, lambda_new, t, scratch) <= (1.0 - opt.alpha * s) * r0) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Step too small to make progress; accept the point if it already meets a relaxed tolerance.
      fill_result(it);
      if (res.gap <= 10.0 * opt.tolerance && res.dual_residual <= 1e3 * opt.tolerance) return res;
      throw NonConvergenceError("interior-point line search stalled", res);
    }
    x.swap(x_new);
    lambda.swap(lambda_new);
    std::swap(e, e_new);
  }
  fill_result(opt.max_iterations);
  throw NonConvergenceError("interior-point iteration limit reached", res);
}

struct PhaseOneContext {
  int slack_index;
  double margin;
};

bool phase_one_stop(const Eigen::VectorXd& x, const Evaluation&, const void* ctx) {
  const auto* c = static_cast<const PhaseOneContext*>(ctx);
  return x[c->slack_index] < -c->margin;
}

}  // namespace

Result solve(const Problem& problem, const Eigen::VectorXd& x0, const Options& options) {
  if (x0.size() != problem.num_vars) throw std::invalid_argument("start point has the wrong dimension");
  for (const auto& c : problem.constraints)
    if (c.max_index() >= problem.num_vars) throw std::invalid_argument("constraint references unknown variable");
  const std::size_t m = problem.constraints.size();
  Eigen::VectorXd f(static_cast<Eigen::Index>(m));
  double f0 = 0.0;
  Eigen::VectorXd start = x0;
  int phase1_iterations = 0;

  if (!evaluate_values(problem, start, f, f0)) {
    // Phase I: minimize s subject to f_i(x) <= s for ordinary constraints, s >= -1.
    Problem aux;
    const int s_index = problem.num_vars;
    aux.num_vars = problem.num_vars + 1;
    aux.objective.add_linear(s_index, 1.0);
    double worst = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double v = problem.constraints[i].value(start);
      const bool hard = i < problem.domain.size() && problem.domain[i];
      if (!std::isfinite(v)) throw std::invalid_argument("start point outside the domain of a constraint");
      if (hard && v >= 0.0) throw std::invalid_argument("start point violates a domain constraint");
      if (!hard) worst = std::max(worst, v);
      ConvexFunction g = problem.constraints[i];
      if (!hard) g.add_linear(s_index, -1.0);
      aux.constraints.push_back(std::move(g));
    }
    ConvexFunction floor;
    floor.add_constant(-1.0);
    floor.add_linear(s_index, -1.0);
    aux.constraints.push_back(std::move(floor));

    Eigen::VectorXd y(aux.num_vars);
    y.head(problem.num_vars) = start;
    y[s_index] = worst + 1.0;
    PhaseOneContext ctx{s_index, options.phase1_margin};
    bool early = false;
    Result r1;
    try {
      r1 = primal_dual(aux, y, options, &phase_one_stop, &ctx, &early);
    } catch (const NonConvergenceError& err) {
      r1 = err.best();
      if (!(r1.x[s_index] < 0.0)) throw InfeasibleError("phase I did not reach a strictly feasible point", r1.x[s_index]);
    }
    phase1_iterations = r1.iterations;
    const double s_star = r1.x[s_index];
    if (!(s_star < 0.0)) throw InfeasibleError("problem has no strictly feasible point", s_star);
    start = r1.x.head(problem.num_vars);
    if (!evaluate_values(problem, start, f, f0))
      throw InfeasibleError("phase I point is not strictly feasible", s_star);
  }

  Result res;
  try {
    res = primal_dual(problem, start, options, nullptr, nullptr, nullptr);
  } catch (NonConvergenceError& err) {
    Result best = err.best();
    best.phase1_iterations = phase1_iterations;
    throw NonConvergenceError(err.what(), best);
  }
  res.phase1_iterations = phase1_iterations;
  return res;
}

}  // namespace rscma::ipm
