#pragma once

#include <Eigen/Core>
#include <limits>
#include <vector>

#include "catchsim/types.hpp"

namespace catchsim::optim {

enum class SolveStatus { optimal, infeasible, max_iter, numerical };

const char* to_string(SolveStatus status);

/// Result of a QP or NLP solve. For QPs, ineq_multipliers and active_set
/// index the canonical inequality list: the A_in rows first, then upper
/// bounds x_j <= ub_j for finite ub, then lower bounds -x_j <= -lb_j.
struct SolveReport {
  Eigen::VectorXd x;
  SolveStatus status = SolveStatus::numerical;
  int iterations = 0;
  double kkt_residual = std::numeric_limits<double>::infinity();
  double wall_time = 0.0;  // seconds

  Eigen::VectorXd eq_multipliers;
  Eigen::VectorXd ineq_multipliers;
  std::vector<int> active_set;
  std::vector<double> merit_history;  // SQP only
};

/// Convex quadratic program
///   min 1/2 x'Hx + f'x
///   s.t. A_eq x = b_eq, A_in x <= b_in, lb <= x <= ub.
/// Empty matrices/vectors mean the block is absent; +-inf bounds allowed.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  int num_vars() const { return static_cast<int>(H.rows()); }
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 0;  // 0 = scale with problem size

  // Warm start: previous solution and active set (canonical indices).
  Eigen::VectorXd x0;
  std::vector<int> active_set;
};

/// Primal active-set solver with nullspace steps. Deterministic: ties in
/// blocking-constraint and multiplier selection break to the smallest
/// canonical index. Throws ConfigError on inconsistent dimensions or an
/// indefinite H.
SolveReport solve_qp(const QpProblem& p, const QpOptions& opts = {});

/// Independently recomputable optimality certificate: max of stationarity,
/// primal feasibility and complementarity residuals at (x, nu, lambda).
double qp_kkt_residual(const QpProblem& p, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& eq_multipliers,
                       const Eigen::VectorXd& ineq_multipliers);

}  // namespace catchsim::optim
