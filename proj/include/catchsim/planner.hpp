#pragma once

#include <optional>
#include <string>
#include <vector>

#include "catchsim/ballistics.hpp"
#include "catchsim/sqp.hpp"
#include "catchsim/trajectory.hpp"

namespace catchsim {

struct PlannerConfig {
  double waypoint_dt = 0.05;    // grid spacing of the low-level path [s]
  double w_arm = 1.0;           // catch-config cost weight, arm joints
  double w_base = 5.0;          // catch-config cost weight, base coords
  double align_cone_deg = 5.0;  // planning alignment cone half-angle
  double reach_scale = 0.4;     // lambda in the per-joint reach bound
  double t_f_guess = 0.5;       // initial catch-time offset guess [s]
  double t_f_min = 0.1;         // earliest allowed catch offset [s]
  double replan_period = 0.1;   // cadence of a planner session [s]
  double lock_window = 0.2;     // freeze the goal this close to t_f [s]
  LowLevel low_level = LowLevel::qp;
  int sqp_max_iter = 60;
};

/// High-level result: where and when to catch.
struct CatchGoal {
  JointVector q_f = JointVector::Zero();
  double t_f = 0.0;
  BallState ball_at_catch;  // predicted ball state at t_f
  double cost = 0.0;        // weighted squared joint displacement
  optim::SolveReport report;
};

/// Displacement joint capacity over dt: accelerate from qd0 to the
/// velocity limit, cruise for the remainder, all scaled by lambda and
/// floored at zero (dt too short to reach cruise speed).
double reach_bound(double v_max, double a_max, double qd0, double dt,
                   double lambda);

/// Per-joint reach bounds for a move starting at velocity qd over dt.
JointVector reach_bounds(const RobotDescription& desc, const JointVector& qd,
                         double dt, double lambda);

/// Violation summary of a catch goal against the full constraint set,
/// recomputed directly (no solver state). Used by tests and `validate`.
struct GoalCheck {
  double fk_error = 0.0;         // | P_ee(q_f) - ball_at_catch.position | [m]
  double align_dot = 1.0;        // z_ee . (-normalized ball velocity)
  bool collision_free = false;
  double reach_violation = 0.0;  // max over joints of |dq| - bound [rad|m]
  double bound_violation = 0.0;  // max joint-limit overshoot

  /// All checks within tolerance; boundary-active constraints get a tiny
  /// floating-point slack.
  bool ok(double align_cone_deg, double fk_tol = 1e-3) const;
};

GoalCheck check_goal(const RobotDescription& desc, const CatchGoal& goal,
                     const JointVector& q_now, const JointVector& qd_now,
                     double t_now, const PlannerConfig& cfg);

/// Selects the catch configuration and time for the predicted flight:
/// minimizes w_arm|q_f,arm - q_arm|^2 + w_base|q_f,base - q_base|^2
/// subject to the end effector meeting the ball, cup alignment within the
/// cone, workspace containment, per-joint reach bounds and joint limits,
/// with t_f free within [t_now + t_f_min, prediction end]. Warm starts
/// from `previous` when given; one retry from (q_now, t_now + 0.7 s) if
/// the first attempt fails. nullopt = no feasible catch.
std::optional<CatchGoal> plan_catch(const RobotDescription& desc,
                                    const BallPrediction& pred,
                                    const JointVector& q_now,
                                    const JointVector& qd_now, double t_now,
                                    const PlannerConfig& cfg,
                                    const CatchGoal* previous = nullptr);

/// Stateful replanning driver: owns the current goal and trajectory,
/// enforces the goal lock window, keeps the stale trajectory when a
/// replan fails, and records wall-clock latencies. Latencies are
/// measurements only; they never feed back into planning, which keeps
/// sessions deterministic.
class PlannerSession {
 public:
  PlannerSession(const RobotDescription& desc, const PlannerConfig& cfg);

  /// One replanning attempt from the supplied robot state. Returns true
  /// when a new trajectory was adopted. Respects the lock window; call
  /// sites control the cadence.
  bool replan(const BallPrediction& pred, const JointVector& q_now,
              const JointVector& qd_now, double t_now);

  bool has_plan() const { return goal_.has_value(); }
  const CatchGoal& goal() const { return *goal_; }
  const JointTrajectory& trajectory() const { return trajectory_; }
  bool goal_locked(double t_now) const;

  int replan_attempts() const { return replan_attempts_; }
  int high_level_failures() const { return high_level_failures_; }
  int low_level_failures() const { return low_level_failures_; }
  const std::vector<double>& latencies() const { return latencies_; }

 private:
  RobotDescription desc_;
  PlannerConfig cfg_;
  std::optional<CatchGoal> goal_;
  JointTrajectory trajectory_;
  int replan_attempts_ = 0;
  int high_level_failures_ = 0;
  int low_level_failures_ = 0;
  std::vector<double> latencies_;
};

/// Single-shot convenience: goal + path in one call.
struct PlannedCatch {
  CatchGoal goal;
  PathResult path;
};

std::optional<PlannedCatch> plan_catch_and_path(const RobotDescription& desc,
                                                const BallPrediction& pred,
                                                const JointVector& q_now,
                                                const JointVector& qd_now,
                                                double t_now,
                                                const PlannerConfig& cfg);

/// Versioned JSON plan dumps consumed by the validate command.
void save_plan(const PlannedCatch& plan, const std::string& path);
PlannedCatch load_plan(const std::string& path);

}  // namespace catchsim
