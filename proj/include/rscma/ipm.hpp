#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rscma::ipm {

struct Term {
  int index = 0;
  double coef = 0.0;
};

struct LinearForm {
  std::vector<Term> terms;
  double constant = 0.0;

  double eval(const Eigen::VectorXd& x) const;
};

// Sum of atoms that are convex by construction: affine, weight·(aᵀx + c)²,
// weight·Σ_j (a_jᵀx + c_j)² / x_d and −weight·ln x_i, all with weight ≥ 0.
class ConvexFunction {
 public:
  void add_constant(double c) { constant_ += c; }
  void add_linear(int index, double coef);
  void add_square(double weight, LinearForm form);
  void add_quad_over_lin(double weight, std::vector<LinearForm> rows, int denominator);
  void add_neg_log(int index, double weight);
  void scale(double factor);

  double value(const Eigen::VectorXd& x) const;
  // Merged sparse gradient, sorted by index.
  void gradient(const Eigen::VectorXd& x, std::vector<Term>& out) const;
  void add_hessian(const Eigen::VectorXd& x, double scale, Eigen::MatrixXd& h) const;

  bool structurally_convex() const;
  bool is_constant() const;
  int max_index() const;
  void write_text(std::ostream& os) const;

 private:
  struct Square {
    double weight;
    LinearForm form;
  };
  struct QuadOverLin {
    double weight;
    std::vector<LinearForm> rows;
    int denominator;
  };
  struct NegLog {
    int index;
    double weight;
  };

  double constant_ = 0.0;
  std::vector<Term> linear_;
  std::vector<Square> squares_;
  std::vector<QuadOverLin> qols_;
  std::vector<NegLog> logs_;
};

// minimize objective(x) subject to constraints[i](x) <= 0.
struct Problem {
  int num_vars = 0;
  ConvexFunction objective;
  std::vector<ConvexFunction> constraints;
  // Constraints that bound the domain of other atoms; never relaxed in phase I.
  std::vector<bool> domain;
};

struct Options {
  double tolerance = 1e-8;
  int max_iterations = 200;
  double mu = 10.0;
  double alpha = 0.01;
  double beta = 0.5;
  // Phase I stops once every constraint is below -phase1_margin.
  double phase1_margin = 1e-4;
};

struct Result {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  double objective = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double max_constraint = 0.0;
  int iterations = 0;
  int phase1_iterations = 0;
};

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double certificate)
      : std::runtime_error(what), certificate_(certificate) {}
  // Optimal phase-I value; a non-negative value certifies that no strictly feasible point exists.
  double certificate() const { return certificate_; }

 private:
  double certificate_;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, Result best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const Result& best() const { return best_; }

 private:
  Result best_;
};

// Primal-dual interior-point method. x0 must lie in the domain of every atom and
// strictly satisfy the domain constraints; a phase I is run when it is not strictly feasible.
Result solve(const Problem& problem, const Eigen::VectorXd& x0, const Options& options = {});

}  // namespace rscma::ipm
