#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "catchsim/qp.hpp"

namespace catchsim::optim {

/// Smooth nonlinear program
///   min f(x)  s.t.  ce_i(x) = 0,  ci_j(x) <= 0,  lb <= x <= ub.
/// Derivatives are not required; the solver uses central finite
/// differences (one-sided at the box boundary). If eval_all is set it is
/// used instead of the individual callbacks wherever all values are
/// needed at once, which saves repeated shared work such as kinematics.
struct NlpProblem {
  std::function<double(const Eigen::VectorXd&)> objective;
  std::vector<std::function<double(const Eigen::VectorXd&)>> eq_constraints;
  std::vector<std::function<double(const Eigen::VectorXd&)>> ineq_constraints;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
  Eigen::VectorXd x0;

  std::function<void(const Eigen::VectorXd& x, double& f, Eigen::VectorXd& ce,
                     Eigen::VectorXd& ci)>
      eval_all;
};

struct SqpOptions {
  double tol = 1e-6;        // KKT residual for convergence
  double step_tol = 1e-10;  // stop when steps stall below this
  int max_iter = 100;
  double fd_step = 1e-6;  // relative finite-difference step
  bool record_merit = false;
};

/// Sequential quadratic programming with damped BFGS Hessian updates, an
/// L1 merit line search and an elastic-relaxation fallback when a QP
/// subproblem is infeasible. Deterministic for fixed inputs.
SolveReport solve_nlp(const NlpProblem& nlp, const SqpOptions& opts = {});

/// Central-difference gradient that never evaluates outside [lb, ub]
/// (switches to a second-order one-sided stencil at the boundary).
Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& x, const Eigen::VectorXd& lb,
    const Eigen::VectorXd& ub, double rel_step = 1e-6);

}  // namespace catchsim::optim
