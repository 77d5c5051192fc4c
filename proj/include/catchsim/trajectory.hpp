#pragma once

#include <string>
#include <vector>

#include "catchsim/qp.hpp"
#include "catchsim/robot_model.hpp"

namespace catchsim {

/// Which low-level path generator turns a catch configuration into a
/// timed waypoint sequence.
enum class LowLevel { qp, trapezoid };

const char* to_string(LowLevel kind);
LowLevel low_level_from_string(const std::string& name);

/// Joint-space trajectory with piecewise-constant acceleration on the
/// uniform grid t0 + k*dt: within interval k,
///   q(t)  = q[k] + s*qd[k] + s^2/2 * u[k],   s = t - (t0 + k*dt),
///   qd(t) = qd[k] + s*u[k].
/// Before t0 the start state holds; past the last waypoint the final
/// position holds with zero velocity.
struct JointTrajectory {
  double t0 = 0.0;
  double dt = 0.05;
  JointVector q0 = JointVector::Zero();
  JointVector qd0 = JointVector::Zero();
  std::vector<JointVector> accels;  // u[0..K-1], one per interval

  struct Sample {
    JointVector q = JointVector::Zero();
    JointVector qd = JointVector::Zero();
    JointVector u = JointVector::Zero();
  };

  int num_steps() const { return static_cast<int>(accels.size()); }
  double end_time() const { return t0 + dt * num_steps(); }

  Sample at(double t) const;

  /// States on the grid, K+1 entries; entry k carries the acceleration of
  /// the interval it starts (zero for the final entry).
  std::vector<Sample> waypoints() const;
};

/// Outcome of low-level path generation.
struct PathResult {
  JointTrajectory trajectory;
  optim::SolveStatus status = optim::SolveStatus::numerical;
  double objective = 0.0;  // summed squared acceleration increments
  int qp_iterations = 0;   // summed over joints (zero for the baseline)
  double max_kkt_residual = 0.0;  // worst per-joint certificate (qp only)
  double wall_time = 0.0;
};

/// Plans all eight joints from (q0, qd0) at t0 to rest at q_f by t_f on a
/// dt grid, K = floor((t_f - t0)/dt) intervals. The qp generator solves
/// one condensed convex QP per joint minimizing the sum of squared
/// acceleration increments subject to waypoint position/velocity limits,
/// interval acceleration bounds and exact terminal conditions. The
/// trapezoid generator searches three-phase accelerate/cruise/brake
/// profiles on the same grid. Throws ConfigError if dt <= 0 or K < 2.
PathResult plan_path(const RobotDescription& desc, const JointVector& q0,
                     const JointVector& qd0, const JointVector& q_f,
                     double t0, double t_f, double dt,
                     LowLevel kind = LowLevel::qp);

/// The metric both generators compete on.
double smoothness_objective(const JointTrajectory& traj);

/// Waypoint-level limit check with absolute slack, plus terminal
/// condition verification when a target is supplied.
bool trajectory_within_limits(const RobotDescription& desc,
                              const JointTrajectory& traj,
                              double slack = 1e-6);

void save_trajectory(const JointTrajectory& traj, const std::string& path);
JointTrajectory load_trajectory(const std::string& path);

}  // namespace catchsim
