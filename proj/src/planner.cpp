#include "catchsim/planner.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "catchsim/detail/trajectory_json.hpp"
#include "catchsim/robot_model.hpp"

namespace catchsim {
namespace {

using nlohmann::json;

// Feasibility slack accepted when re-checking a converged solve.
constexpr double kFeasTol = 1e-6;
// The containment cylinder is shrunk by a hair during planning so that
// goals accepted with kFeasTol slack still pass the exact inclusive
// boundary test in collision_ok.
constexpr double kCylinderMargin = 1e-5;

// Number of scalar inequality rows in the catch NLP: one alignment row,
// three containment rows, and a +/- reach pair per joint.
constexpr int kNumIneq = 4 + 2 * kNumJoints;

Vec3 approach_direction(const Vec3& ball_velocity) {
  const double speed = ball_velocity.norm();
  // A ball in flight always moves; the fallback only guards degenerate
  // synthetic inputs.
  if (speed < 1e-9) return Vec3(0.0, 0.0, 1.0);
  return -ball_velocity / speed;
}

struct CatchNlp {
  const RobotDescription* desc;
  const BallPrediction* pred;
  JointVector q_now;
  JointVector qd_now;
  double t_now = 0.0;
  PlannerConfig cfg;

  void eval(const Eigen::VectorXd& x, double& f, Eigen::VectorXd& ce,
            Eigen::VectorXd& ci) const {
    JointVector q_f;
    for (int i = 0; i < kNumJoints; ++i) q_f[i] = x[i];
    const double t_f = x[kNumJoints];

    f = 0.0;
    for (int i = 0; i < kNumArmJoints; ++i) {
      const double d = q_f[i] - q_now[i];
      f += cfg.w_arm * d * d;
    }
    for (int i = kNumArmJoints; i < kNumJoints; ++i) {
      const double d = q_f[i] - q_now[i];
      f += cfg.w_base * d * d;
    }

    const EePose pose = forward_kinematics(*desc, q_f);
    const BallState ball = query(*pred, t_f);

    ce = pose.p_world - ball.position;

    ci.resize(kNumIneq);
    const Vec3 dir = approach_direction(ball.velocity);
    ci[0] = std::cos(deg2rad(cfg.align_cone_deg)) - pose.z_axis_world.dot(dir);

    const double r_eff = desc->collision_radius - kCylinderMargin;
    ci[1] = pose.p_arm.x() * pose.p_arm.x() + pose.p_arm.y() * pose.p_arm.y() -
            r_eff * r_eff;
    ci[2] = -pose.p_arm.z() + kCylinderMargin;
    ci[3] = pose.p_arm.z() - (desc->collision_height - kCylinderMargin);

    const JointVector bound =
        reach_bounds(*desc, qd_now, t_f - t_now, cfg.reach_scale);
    for (int i = 0; i < kNumJoints; ++i) {
      const double d = q_f[i] - q_now[i];
      ci[4 + i] = d - bound[i];
      ci[4 + kNumJoints + i] = -d - bound[i];
    }
  }
};

const char* status_name(optim::SolveStatus s) { return optim::to_string(s); }

optim::SolveStatus status_from_name(const std::string& name) {
  for (optim::SolveStatus s :
       {optim::SolveStatus::optimal, optim::SolveStatus::infeasible,
        optim::SolveStatus::max_iter, optim::SolveStatus::numerical}) {
    if (name == optim::to_string(s)) return s;
  }
  throw ConfigError("plan file: unknown solver status '" + name + "'");
}

json report_to_json(const optim::SolveReport& rep) {
  json j;
  j["status"] = status_name(rep.status);
  j["iterations"] = rep.iterations;
  j["kkt_residual"] = rep.kkt_residual;
  j["wall_time"] = rep.wall_time;
  return j;
}

optim::SolveReport report_from_json(const json& j) {
  optim::SolveReport rep;
  rep.status = status_from_name(j.at("status").get<std::string>());
  rep.iterations = j.at("iterations").get<int>();
  rep.kkt_residual = j.at("kkt_residual").get<double>();
  rep.wall_time = j.at("wall_time").get<double>();
  return rep;
}

std::vector<double> to_std(const JointVector& v) {
  return std::vector<double>(v.data(), v.data() + kNumJoints);
}

JointVector joint_from_json(const json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != kNumJoints) {
    throw ConfigError(std::string("plan file: wrong joint count in ") + what);
  }
  JointVector out;
  for (int i = 0; i < kNumJoints; ++i) out[i] = v[static_cast<size_t>(i)];
  return out;
}

Vec3 vec3_from_json(const json& j, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) {
    throw ConfigError(std::string("plan file: bad vector in ") + what);
  }
  return Vec3(v[0], v[1], v[2]);
}

}  // namespace

double reach_bound(double v_max, double a_max, double qd0, double dt,
                   double lambda) {
  const double qd = std::clamp(qd0, -v_max, v_max);
  const double raw = v_max * (dt - (v_max - qd) / a_max) +
                     (v_max * v_max - qd * qd) / (2.0 * a_max);
  return lambda * std::max(raw, 0.0);
}

JointVector reach_bounds(const RobotDescription& desc, const JointVector& qd,
                         double dt, double lambda) {
  JointVector out;
  for (int i = 0; i < kNumJoints; ++i) {
    out[i] = reach_bound(desc.v_max[i], desc.a_max[i], qd[i], dt, lambda);
  }
  return out;
}

bool GoalCheck::ok(double align_cone_deg, double fk_tol) const {
  const double slack = 1e-6;
  return fk_error <= fk_tol &&
         align_dot >= std::cos(deg2rad(align_cone_deg)) - slack &&
         collision_free && reach_violation <= slack &&
         bound_violation <= slack;
}

GoalCheck check_goal(const RobotDescription& desc, const CatchGoal& goal,
                     const JointVector& q_now, const JointVector& qd_now,
                     double t_now, const PlannerConfig& cfg) {
  GoalCheck c;
  const EePose pose = forward_kinematics(desc, goal.q_f);
  c.fk_error = (pose.p_world - goal.ball_at_catch.position).norm();
  c.align_dot =
      pose.z_axis_world.dot(approach_direction(goal.ball_at_catch.velocity));
  c.collision_free = collision_ok(desc, goal.q_f);
  const JointVector bound =
      reach_bounds(desc, qd_now, goal.t_f - t_now, cfg.reach_scale);
  c.reach_violation = ((goal.q_f - q_now).cwiseAbs() - bound).maxCoeff();
  c.bound_violation = (goal.q_f.cwiseAbs() - desc.q_max).maxCoeff();
  return c;
}

std::optional<CatchGoal> plan_catch(const RobotDescription& desc,
                                    const BallPrediction& pred,
                                    const JointVector& q_now,
                                    const JointVector& qd_now, double t_now,
                                    const PlannerConfig& cfg,
                                    const CatchGoal* previous) {
  // Keep t_f strictly inside the prediction grid so interpolation stays
  // defined at finite-difference sample points.
  const double t_lo = std::max(t_now + cfg.t_f_min, pred.t0);
  const double t_hi = pred.end_time() - 1e-9;
  if (!(t_hi > t_lo)) return std::nullopt;  // horizon too short

  CatchNlp model;
  model.desc = &desc;
  model.pred = &pred;
  model.q_now = q_now;
  model.qd_now = qd_now;
  model.t_now = t_now;
  model.cfg = cfg;

  optim::NlpProblem nlp;
  nlp.lb.resize(kNumJoints + 1);
  nlp.ub.resize(kNumJoints + 1);
  for (int i = 0; i < kNumJoints; ++i) {
    nlp.lb[i] = -desc.q_max[i];
    nlp.ub[i] = desc.q_max[i];
  }
  nlp.lb[kNumJoints] = t_lo;
  nlp.ub[kNumJoints] = t_hi;
  nlp.eval_all = [&model](const Eigen::VectorXd& x, double& f,
                          Eigen::VectorXd& ce, Eigen::VectorXd& ci) {
    model.eval(x, f, ce, ci);
  };

  optim::SqpOptions sopts;
  sopts.max_iter = cfg.sqp_max_iter;

  const auto attempt =
      [&](const Eigen::VectorXd& x0) -> std::optional<CatchGoal> {
    nlp.x0 = x0;
    optim::SolveReport rep = optim::solve_nlp(nlp, sopts);
    if (rep.status != optim::SolveStatus::optimal) return std::nullopt;

    // Defense in depth: accept only goals that re-verify feasible.
    double f = 0.0;
    Eigen::VectorXd ce, ci;
    model.eval(rep.x, f, ce, ci);
    if (ce.lpNorm<Eigen::Infinity>() > kFeasTol) return std::nullopt;
    if (ci.maxCoeff() > kFeasTol) return std::nullopt;

    CatchGoal goal;
    for (int i = 0; i < kNumJoints; ++i) goal.q_f[i] = rep.x[i];
    goal.t_f = rep.x[kNumJoints];
    goal.ball_at_catch = query(pred, goal.t_f);
    goal.cost = f;
    goal.report = std::move(rep);
    return goal;
  };

  Eigen::VectorXd x0(kNumJoints + 1);
  if (previous != nullptr) {
    for (int i = 0; i < kNumJoints; ++i) x0[i] = previous->q_f[i];
    x0[kNumJoints] = previous->t_f;
  } else {
    for (int i = 0; i < kNumJoints; ++i) x0[i] = q_now[i];
    x0[kNumJoints] = t_now + cfg.t_f_guess;
  }
  if (auto goal = attempt(x0)) return goal;

  // One cold retry with a longer catch-time guess.
  Eigen::VectorXd x1(kNumJoints + 1);
  for (int i = 0; i < kNumJoints; ++i) x1[i] = q_now[i];
  x1[kNumJoints] = t_now + 0.7;
  return attempt(x1);
}

PlannerSession::PlannerSession(const RobotDescription& desc,
                               const PlannerConfig& cfg)
    : desc_(desc), cfg_(cfg) {}

bool PlannerSession::goal_locked(double t_now) const {
  return goal_.has_value() && t_now >= goal_->t_f - cfg_.lock_window;
}

bool PlannerSession::replan(const BallPrediction& pred,
                            const JointVector& q_now,
                            const JointVector& qd_now, double t_now) {
  if (goal_locked(t_now)) return false;

  const auto start = std::chrono::steady_clock::now();
  ++replan_attempts_;
  bool adopted = false;

  const CatchGoal* warm = goal_.has_value() ? &*goal_ : nullptr;
  std::optional<CatchGoal> goal =
      plan_catch(desc_, pred, q_now, qd_now, t_now, cfg_, warm);
  if (!goal.has_value()) {
    ++high_level_failures_;
  } else {
    PathResult path = plan_path(desc_, q_now, qd_now, goal->q_f, t_now,
                                goal->t_f, cfg_.waypoint_dt, cfg_.low_level);
    if (path.status != optim::SolveStatus::optimal) {
      ++low_level_failures_;
    } else {
      goal_ = std::move(goal);
      trajectory_ = std::move(path.trajectory);
      adopted = true;
    }
  }

  latencies_.push_back(
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count());
  return adopted;
}

std::optional<PlannedCatch> plan_catch_and_path(const RobotDescription& desc,
                                                const BallPrediction& pred,
                                                const JointVector& q_now,
                                                const JointVector& qd_now,
                                                double t_now,
                                                const PlannerConfig& cfg) {
  std::optional<CatchGoal> goal =
      plan_catch(desc, pred, q_now, qd_now, t_now, cfg);
  if (!goal.has_value()) return std::nullopt;
  PlannedCatch out;
  out.goal = std::move(*goal);
  out.path = plan_path(desc, q_now, qd_now, out.goal.q_f, t_now, out.goal.t_f,
                       cfg.waypoint_dt, cfg.low_level);
  if (out.path.status != optim::SolveStatus::optimal) return std::nullopt;
  return out;
}

void save_plan(const PlannedCatch& plan, const std::string& path) {
  json j;
  j["schema_version"] = 1;

  json goal;
  goal["q_f"] = to_std(plan.goal.q_f);
  goal["t_f"] = plan.goal.t_f;
  goal["ball_position"] = std::vector<double>{plan.goal.ball_at_catch.position.x(),
                                              plan.goal.ball_at_catch.position.y(),
                                              plan.goal.ball_at_catch.position.z()};
  goal["ball_velocity"] = std::vector<double>{plan.goal.ball_at_catch.velocity.x(),
                                              plan.goal.ball_at_catch.velocity.y(),
                                              plan.goal.ball_at_catch.velocity.z()};
  goal["cost"] = plan.goal.cost;
  goal["solver"] = report_to_json(plan.goal.report);
  j["goal"] = std::move(goal);

  json path_j;
  path_j["status"] = status_name(plan.path.status);
  path_j["objective"] = plan.path.objective;
  path_j["qp_iterations"] = plan.path.qp_iterations;
  path_j["wall_time"] = plan.path.wall_time;
  path_j["trajectory"] = detail::trajectory_to_json(plan.path.trajectory);
  j["path"] = std::move(path_j);

  std::ofstream out(path);
  if (!out) throw IoError("cannot write plan file: " + path);
  out << j.dump(2) << "\n";
}

PlannedCatch load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read plan file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad plan file: ") + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1) {
    throw ConfigError("plan file: unsupported schema_version");
  }
  PlannedCatch plan;
  try {
    const json& goal = j.at("goal");
    plan.goal.q_f = joint_from_json(goal.at("q_f"), "q_f");
    plan.goal.t_f = goal.at("t_f").get<double>();
    plan.goal.ball_at_catch.position =
        vec3_from_json(goal.at("ball_position"), "ball_position");
    plan.goal.ball_at_catch.velocity =
        vec3_from_json(goal.at("ball_velocity"), "ball_velocity");
    plan.goal.ball_at_catch.t = plan.goal.t_f;
    plan.goal.cost = goal.at("cost").get<double>();
    plan.goal.report = report_from_json(goal.at("solver"));

    const json& path_j = j.at("path");
    plan.path.status = status_from_name(path_j.at("status").get<std::string>());
    plan.path.objective = path_j.at("objective").get<double>();
    plan.path.qp_iterations = path_j.at("qp_iterations").get<int>();
    plan.path.wall_time = path_j.at("wall_time").get<double>();
    plan.path.trajectory =
        detail::trajectory_from_json(path_j.at("trajectory"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad plan file: ") + e.what());
  }
  return plan;
}

}  // namespace catchsim
