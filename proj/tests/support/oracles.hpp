#pragma once

#include <Eigen/Dense>

#include "catchsim/ballistics.hpp"
#include "catchsim/qp.hpp"
#include "catchsim/robot_model.hpp"

namespace catchsim::testsupport {

/// Forward kinematics recomputed from scratch with explicit 4x4 matrices
/// written entry by entry (textbook Denavit-Hartenberg form), independent
/// of the transform composition used by the library.
Eigen::Matrix4d naive_dh_matrix(const DhLink& link, double joint_angle);
EePose naive_forward_kinematics(const RobotDescription& desc,
                                const JointVector& q);

/// Ball propagation with plain forward Euler at a caller-chosen step,
/// re-deriving the acceleration inline.
BallState naive_propagate(const DragModel& model, const BallState& s0,
                          double duration, double dt);

/// Globally optimal solution of a small dense convex QP by enumerating
/// every candidate active set and keeping the best feasible stationary
/// point. Exponential in the constraint count; test-sized problems only.
struct BruteForceResult {
  bool feasible = false;
  Eigen::VectorXd x;
  double objective = 0.0;
};
BruteForceResult brute_force_qp(const optim::QpProblem& p, double tol = 1e-7);

double qp_objective(const optim::QpProblem& p, const Eigen::VectorXd& x);
double qp_max_violation(const optim::QpProblem& p, const Eigen::VectorXd& x);

}  // namespace catchsim::testsupport
