#include "catchsim/ballistics.hpp"

#include <cmath>

namespace catchsim {

Vec3 ball_accel(const DragModel& model, const Vec3& velocity) {
  return Vec3(0.0, 0.0, -model.gravity) -
         model.drag_coeff * velocity.norm() * velocity;
}

namespace {

void rk4_step(const DragModel& model, Vec3& p, Vec3& v, double h) {
  const Vec3 k1p = v;
  const Vec3 k1v = ball_accel(model, v);
  const Vec3 k2p = v + 0.5 * h * k1v;
  const Vec3 k2v = ball_accel(model, v + 0.5 * h * k1v);
  const Vec3 k3p = v + 0.5 * h * k2v;
  const Vec3 k3v = ball_accel(model, v + 0.5 * h * k2v);
  const Vec3 k4p = v + h * k3v;
  const Vec3 k4v = ball_accel(model, v + h * k3v);
  p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

void euler_step(const DragModel& model, Vec3& p, Vec3& v, double h) {
  const Vec3 a = ball_accel(model, v);
  p += h * v;
  v += h * a;
}

}  // namespace

BallPrediction predict(const DragModel& model, const BallState& s0,
                       double horizon, double dt, Integrator method) {
  if (dt <= 0.0) throw ConfigError("predict: dt must be positive");
  if (horizon < dt) throw ConfigError("predict: horizon must cover at least one step");

  const int steps = static_cast<int>(std::ceil(horizon / dt - 1e-12));
  BallPrediction pred;
  pred.t0 = s0.t;
  pred.dt = dt;
  pred.states.reserve(steps + 1);

  Vec3 p = s0.position;
  Vec3 v = s0.velocity;
  pred.states.push_back({p, v, s0.t});
  for (int k = 1; k <= steps; ++k) {
    if (method == Integrator::rk4)
      rk4_step(model, p, v, dt);
    else
      euler_step(model, p, v, dt);
    pred.states.push_back({p, v, s0.t + k * dt});
  }
  return pred;
}

BallState query(const BallPrediction& pred, double t) {
  if (pred.states.size() < 2) throw ConfigError("query: empty prediction");
  const double rel = (t - pred.t0) / pred.dt;
  const int last = static_cast<int>(pred.states.size()) - 1;
  if (rel < -1e-9 || rel > last + 1e-9)
    throw ConfigError("query: time outside prediction horizon");

  int k = static_cast<int>(std::floor(rel));
  k = std::max(0, std::min(k, last - 1));
  const BallState& s0 = pred.states[k];
  const BallState& s1 = pred.states[k + 1];
  const double h = pred.dt;
  const double s = (t - s0.t) / h;
  if (s <= 1e-12) return {s0.position, s0.velocity, t};
  if (s >= 1.0 - 1e-12) return {s1.position, s1.velocity, t};

  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
  const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;

  BallState out;
  out.t = t;
  out.position = h00 * s0.position + h10 * h * s0.velocity +
                 h01 * s1.position + h11 * h * s1.velocity;
  out.velocity = (d00 * s0.position + d10 * h * s0.velocity +
                  d01 * s1.position + d11 * h * s1.velocity) / h;
  return out;
}

DragModel estimate_drag(const std::vector<std::vector<BallState>>& tosses,
                        const DragEstimationOptions& opts) {
  double theta = 0.0;
  double cov = 1e6;
  int usable = 0;
  const Vec3 g_vec(0.0, 0.0, opts.gravity);

  for (const auto& toss : tosses) {
    if (toss.size() < 3) continue;
    for (std::size_t k = 1; k + 1 < toss.size(); ++k) {
      const double dt = toss[k + 1].t - toss[k - 1].t;
      if (dt <= 0.0) continue;
      const Vec3 accel = (toss[k + 1].velocity - toss[k - 1].velocity) / dt;
      const double speed = toss[k].velocity.norm();
      if (speed < opts.min_speed) continue;
      const Vec3 heading = toss[k].velocity / speed;
      const double y = -(accel + g_vec).dot(heading);
      const double x = speed * speed;

      const double denom = opts.forgetting + x * cov * x;
      const double gain = cov * x / denom;
      theta += gain * (y - x * theta);
      cov = (cov - gain * x * cov) / opts.forgetting;
      ++usable;
    }
  }

  if (usable < opts.min_usable_samples)
    throw IdentifiabilityError("estimate_drag: only " + std::to_string(usable) +
                               " usable samples, need " +
                               std::to_string(opts.min_usable_samples));
  DragModel model;
  model.drag_coeff = std::max(0.0, theta);
  model.gravity = opts.gravity;
  return model;
}

std::optional<Vec3> solve_throw_velocity(const DragModel& model, const Vec3& origin,
                                         const Vec3& target, double flight_time,
                                         int* iterations) {
  if (flight_time <= 0.0) throw ConfigError("solve_throw_velocity: flight_time <= 0");
  const double T = flight_time;
  Vec3 v = (target - origin) / T + Vec3(0.0, 0.0, 0.5 * model.gravity * T);

  const double sim_dt = 1e-3;
  for (int iter = 1; iter <= 50; ++iter) {
    const BallPrediction pred = predict(model, {origin, v, 0.0}, T + 2 * sim_dt, sim_dt);
    const Vec3 err = target - query(pred, T).position;
    if (iterations) *iterations = iter;
    if (err.norm() <= 1e-3) return v;
    v += err / T;
  }
  return std::nullopt;
}

std::optional<BallState> synthesize_throw(const DragModel& model, std::uint64_t seed,
                                          const Vec3& target, double flight_time,
                                          const OriginRegion& region) {
  Rng rng(seed);
  Vec3 origin;
  if (region.fixed_origin) {
    origin = *region.fixed_origin;
  } else {
    origin = rng.annulus_xy(region.radius_min, region.radius_max,
                            region.height_min, region.height_max);
  }
  const auto v = solve_throw_velocity(model, origin, target, flight_time);
  if (!v) return std::nullopt;
  return BallState{origin, *v, 0.0};
}

}  // namespace catchsim
