#include "catchsim/trajectory.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>

#include "catchsim/detail/trajectory_json.hpp"

namespace catchsim {
namespace {

using nlohmann::json;

/// Waypoint states of one joint under the acceleration sequence u.
struct JointRollout {
  std::vector<double> q;
  std::vector<double> qd;
};

JointRollout roll_joint(double q0, double qd0, const std::vector<double>& u,
                        double dt) {
  JointRollout r;
  const size_t k_steps = u.size();
  r.q.resize(k_steps + 1);
  r.qd.resize(k_steps + 1);
  r.q[0] = q0;
  r.qd[0] = qd0;
  for (size_t k = 0; k < k_steps; ++k) {
    r.q[k + 1] = r.q[k] + dt * r.qd[k] + 0.5 * dt * dt * u[k];
    r.qd[k + 1] = r.qd[k] + dt * u[k];
  }
  return r;
}

/// Condensed QP for one joint: decision vector u[0..K-1] with states
/// eliminated through the double-integrator recursion,
///   qd[k] = qd0 + dt * sum_{j<k} u[j]
///   q[k]  = q0 + k*dt*qd0 + dt^2 * sum_{j<k} (k - j - 1/2) u[j].
optim::SolveReport solve_joint_qp(int k_steps, double dt, double q0,
                                  double qd0, double q_target, double q_lim,
                                  double v_lim, double a_lim) {
  const int n = k_steps;
  optim::QpProblem p;

  // Objective: sum of squared increments of consecutive accelerations.
  Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(n - 1, n);
  for (int k = 0; k + 1 < n; ++k) {
    diff(k, k) = -1.0;
    diff(k, k + 1) = 1.0;
  }
  p.H = 2.0 * diff.transpose() * diff;
  p.f = Eigen::VectorXd::Zero(n);

  // Terminal conditions: q[K] = q_target, qd[K] = 0.
  p.A_eq.resize(2, n);
  for (int j = 0; j < n; ++j) {
    p.A_eq(0, j) = dt * dt * (n - j - 0.5);
    p.A_eq(1, j) = dt;
  }
  p.b_eq.resize(2);
  p.b_eq[0] = q_target - q0 - n * dt * qd0;
  p.b_eq[1] = -qd0;

  // Interior waypoint limits, k = 1..K-1 (the endpoints are fixed).
  const int rows = 4 * (n - 1);
  p.A_in = Eigen::MatrixXd::Zero(rows, n);
  p.b_in.resize(rows);
  int r = 0;
  for (int k = 1; k < n; ++k) {
    for (int j = 0; j < k; ++j) p.A_in(r, j) = dt;
    p.b_in[r] = v_lim - qd0;
    ++r;
    for (int j = 0; j < k; ++j) p.A_in(r, j) = -dt;
    p.b_in[r] = v_lim + qd0;
    ++r;
    for (int j = 0; j < k; ++j) p.A_in(r, j) = dt * dt * (k - j - 0.5);
    p.b_in[r] = q_lim - q0 - k * dt * qd0;
    ++r;
    for (int j = 0; j < k; ++j) p.A_in(r, j) = -dt * dt * (k - j - 0.5);
    p.b_in[r] = q_lim + q0 + k * dt * qd0;
    ++r;
  }
  p.lb = Eigen::VectorXd::Constant(n, -a_lim);
  p.ub = Eigen::VectorXd::Constant(n, a_lim);

  return optim::solve_qp(p);
}

struct TrapezoidFit {
  bool found = false;
  std::vector<double> u;
  double objective = 0.0;
};

/// Classic three-phase profile on the grid: n1 intervals accelerating at
/// a1, a zero-acceleration cruise, n3 intervals braking at a3, with
/// (a1, a3) solved exactly from the terminal conditions so the shared
/// recursion lands on the target. Phases are chosen shortest-first
/// (aggressive accelerate / cruise / brake), mirroring the conventional
/// velocity-profile generator this baseline stands in for.
TrapezoidFit fit_trapezoid(int k_steps, double dt, double q0, double qd0,
                           double q_target, double q_lim, double v_lim,
                           double a_lim) {
  TrapezoidFit best;
  for (int total = 2; total <= k_steps && !best.found; ++total) {
    for (int n1 = 1; n1 < total && !best.found; ++n1) {
      const int n3 = total - n1;
      // Position coefficients sum_{j in phase} (K - j - 1/2).
      double c1 = 0.0;
      for (int j = 0; j < n1; ++j) c1 += k_steps - j - 0.5;
      double c3 = 0.0;
      for (int j = k_steps - n3; j < k_steps; ++j) c3 += k_steps - j - 0.5;
      // n1*a1 + n3*a3 = -qd0/dt ; c1*a1 + c3*a3 = rhs_q / dt^2
      Eigen::Matrix2d m;
      m << n1, n3, c1, c3;
      if (std::abs(m.determinant()) < 1e-12) continue;
      const Eigen::Vector2d rhs(-qd0 / dt,
                                (q_target - q0 - k_steps * dt * qd0) /
                                    (dt * dt));
      const Eigen::Vector2d a = m.fullPivLu().solve(rhs);
      const double a1 = a[0];
      const double a3 = a[1];
      if (std::abs(a1) > a_lim || std::abs(a3) > a_lim) continue;

      std::vector<double> u(static_cast<size_t>(k_steps), 0.0);
      for (int j = 0; j < n1; ++j) u[static_cast<size_t>(j)] = a1;
      for (int j = k_steps - n3; j < k_steps; ++j) {
        u[static_cast<size_t>(j)] = a3;
      }
      const JointRollout roll = roll_joint(q0, qd0, u, dt);
      bool ok = true;
      for (int k = 1; k < k_steps && ok; ++k) {
        ok = std::abs(roll.q[static_cast<size_t>(k)]) <= q_lim + 1e-9 &&
             std::abs(roll.qd[static_cast<size_t>(k)]) <= v_lim + 1e-9;
      }
      if (!ok) continue;
      double obj = 0.0;
      for (int k = 0; k + 1 < k_steps; ++k) {
        const double d = u[static_cast<size_t>(k + 1)] - u[static_cast<size_t>(k)];
        obj += d * d;
      }
      best.found = true;
      best.u = std::move(u);
      best.objective = obj;
    }
  }
  return best;
}

}  // namespace

const char* to_string(LowLevel kind) {
  return kind == LowLevel::qp ? "qp" : "trapezoid";
}

LowLevel low_level_from_string(const std::string& name) {
  if (name == "qp") return LowLevel::qp;
  if (name == "trapezoid") return LowLevel::trapezoid;
  throw ConfigError("unknown low-level generator: " + name);
}

JointTrajectory::Sample JointTrajectory::at(double t) const {
  Sample s;
  const int k_steps = num_steps();
  if (t <= t0 || k_steps == 0) {
    s.q = q0;
    s.qd = qd0;
    s.u = k_steps > 0 ? accels.front() : JointVector::Zero();
    if (t < t0) s.u = JointVector::Zero();
    return s;
  }
  // Walk the recursion to the interval containing t.
  int k = static_cast<int>(std::floor((t - t0) / dt));
  const bool beyond = k >= k_steps;
  if (beyond) k = k_steps;
  JointVector q = q0;
  JointVector qd = qd0;
  for (int i = 0; i < std::min(k, k_steps); ++i) {
    q += dt * qd + 0.5 * dt * dt * accels[static_cast<size_t>(i)];
    qd += dt * accels[static_cast<size_t>(i)];
  }
  if (beyond) {
    s.q = q;
    s.qd = JointVector::Zero();
    s.u = JointVector::Zero();
    return s;
  }
  const double frac = t - t0 - k * dt;
  const JointVector& u = accels[static_cast<size_t>(k)];
  s.q = q + frac * qd + 0.5 * frac * frac * u;
  s.qd = qd + frac * u;
  s.u = u;
  return s;
}

std::vector<JointTrajectory::Sample> JointTrajectory::waypoints() const {
  std::vector<Sample> out;
  const int k_steps = num_steps();
  out.reserve(static_cast<size_t>(k_steps) + 1);
  Sample s;
  s.q = q0;
  s.qd = qd0;
  for (int k = 0; k <= k_steps; ++k) {
    s.u = k < k_steps ? accels[static_cast<size_t>(k)] : JointVector::Zero();
    out.push_back(s);
    if (k < k_steps) {
      s.q += dt * s.qd + 0.5 * dt * dt * s.u;
      s.qd += dt * s.u;
    }
  }
  return out;
}

PathResult plan_path(const RobotDescription& desc, const JointVector& q0,
                     const JointVector& qd0, const JointVector& q_f,
                     double t0, double t_f, double dt, LowLevel kind) {
  if (dt <= 0.0) throw ConfigError("plan_path: waypoint spacing must be positive");
  const int k_steps = static_cast<int>(std::floor((t_f - t0) / dt + 1e-9));
  if (k_steps < 2) throw ConfigError("plan_path: horizon shorter than two intervals");

  const auto tic = std::chrono::steady_clock::now();
  PathResult result;
  result.trajectory.t0 = t0;
  result.trajectory.dt = dt;
  result.trajectory.q0 = q0;
  result.trajectory.qd0 = qd0;
  result.trajectory.accels.assign(static_cast<size_t>(k_steps),
                                  JointVector::Zero());
  result.status = optim::SolveStatus::optimal;

  for (int i = 0; i < kNumJoints && result.status == optim::SolveStatus::optimal;
       ++i) {
    if (kind == LowLevel::qp) {
      const optim::SolveReport rep =
          solve_joint_qp(k_steps, dt, q0[i], qd0[i], q_f[i], desc.q_max[i],
                         desc.v_max[i], desc.a_max[i]);
      if (rep.status != optim::SolveStatus::optimal) {
        result.status = rep.status;
        break;
      }
      for (int k = 0; k < k_steps; ++k) {
        result.trajectory.accels[static_cast<size_t>(k)][i] = rep.x[k];
      }
      result.qp_iterations += rep.iterations;
      result.max_kkt_residual =
          std::max(result.max_kkt_residual, rep.kkt_residual);
    } else {
      const TrapezoidFit fit =
          fit_trapezoid(k_steps, dt, q0[i], qd0[i], q_f[i], desc.q_max[i],
                        desc.v_max[i], desc.a_max[i]);
      if (!fit.found) {
        result.status = optim::SolveStatus::infeasible;
        break;
      }
      for (int k = 0; k < k_steps; ++k) {
        result.trajectory.accels[static_cast<size_t>(k)][i] =
            fit.u[static_cast<size_t>(k)];
      }
    }
  }
  if (result.status == optim::SolveStatus::optimal) {
    result.objective = smoothness_objective(result.trajectory);
  }
  result.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - tic)
          .count();
  return result;
}

double smoothness_objective(const JointTrajectory& traj) {
  double obj = 0.0;
  for (size_t k = 0; k + 1 < traj.accels.size(); ++k) {
    obj += (traj.accels[k + 1] - traj.accels[k]).squaredNorm();
  }
  return obj;
}

bool trajectory_within_limits(const RobotDescription& desc,
                              const JointTrajectory& traj, double slack) {
  for (const JointTrajectory::Sample& s : traj.waypoints()) {
    if (!within_limits(desc, s.q, s.qd, s.u, slack)) return false;
  }
  return true;
}

void save_trajectory(const JointTrajectory& traj, const std::string& path) {
  json j = detail::trajectory_to_json(traj);
  j["schema_version"] = 1;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trajectory file: " + path);
  out << j.dump(2) << "\n";
}

JointTrajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read trajectory file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad trajectory file: ") + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1) {
    throw ConfigError("trajectory file: unsupported schema_version");
  }
  return detail::trajectory_from_json(j);
}

namespace detail {

json trajectory_to_json(const JointTrajectory& traj) {
  json j;
  j["t0"] = traj.t0;
  j["dt"] = traj.dt;
  j["q0"] = std::vector<double>(traj.q0.data(), traj.q0.data() + kNumJoints);
  j["qd0"] = std::vector<double>(traj.qd0.data(), traj.qd0.data() + kNumJoints);
  json accels = json::array();
  for (const JointVector& u : traj.accels) {
    accels.push_back(std::vector<double>(u.data(), u.data() + kNumJoints));
  }
  j["accels"] = std::move(accels);
  return j;
}

JointTrajectory trajectory_from_json(const json& j) {
  JointTrajectory traj;
  try {
    traj.t0 = j.at("t0").get<double>();
    traj.dt = j.at("dt").get<double>();
    const auto q0 = j.at("q0").get<std::vector<double>>();
    const auto qd0 = j.at("qd0").get<std::vector<double>>();
    if (q0.size() != kNumJoints || qd0.size() != kNumJoints) {
      throw ConfigError("trajectory: wrong joint count");
    }
    for (int i = 0; i < kNumJoints; ++i) {
      traj.q0[i] = q0[static_cast<size_t>(i)];
      traj.qd0[i] = qd0[static_cast<size_t>(i)];
    }
    for (const json& row : j.at("accels")) {
      const auto u = row.get<std::vector<double>>();
      if (u.size() != kNumJoints) {
        throw ConfigError("trajectory: wrong joint count in accels");
      }
      JointVector v;
      for (int i = 0; i < kNumJoints; ++i) v[i] = u[static_cast<size_t>(i)];
      traj.accels.push_back(v);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad trajectory record: ") + e.what());
  }
  return traj;
}

}  // namespace detail

}  // namespace catchsim
