#include "catchsim/estimation.hpp"

#include <Eigen/Dense>

namespace catchsim {

NoiseConfig NoiseConfig::white_accel(double sigma_accel, double dt, double sigma_meas) {
  NoiseConfig cfg;
  const double s2 = sigma_accel * sigma_accel;
  const double d2 = dt * dt;
  cfg.process.topLeftCorner<3, 3>() = s2 * d2 * d2 / 4.0 * Mat3::Identity();
  cfg.process.topRightCorner<3, 3>() = s2 * d2 * dt / 2.0 * Mat3::Identity();
  cfg.process.bottomLeftCorner<3, 3>() = s2 * d2 * dt / 2.0 * Mat3::Identity();
  cfg.process.bottomRightCorner<3, 3>() = s2 * d2 * Mat3::Identity();
  cfg.measurement = sigma_meas * sigma_meas * Mat3::Identity();
  return cfg;
}

namespace {

Mat3 drag_accel_jacobian(const DragModel& model, const Vec3& v) {
  const double speed = v.norm();
  if (speed < 1e-12) return Mat3::Zero();
  return -model.drag_coeff * (speed * Mat3::Identity() + v * v.transpose() / speed);
}

void symmetrize(Mat6& m) { m = 0.5 * (m + m.transpose()).eval(); }

}  // namespace

Mat6 kf_transition_jacobian(const FilterState& state, const DragModel& model,
                            double dt) {
  const Mat3 j = drag_accel_jacobian(model, state.velocity());
  Mat6 f = Mat6::Identity();
  f.topRightCorner<3, 3>() = dt * Mat3::Identity() + 0.5 * dt * dt * j;
  f.bottomRightCorner<3, 3>() = Mat3::Identity() + dt * j;
  return f;
}

FilterState kf_predict(const FilterState& state, const DragModel& model, double dt,
                       const Mat6& process_noise) {
  const Vec3 v = state.velocity();
  const Vec3 a = ball_accel(model, v);

  FilterState out;
  out.mean.head<3>() = state.position() + dt * v + 0.5 * dt * dt * a;
  out.mean.tail<3>() = v + dt * a;
  out.t = state.t + dt;

  const Mat6 f = kf_transition_jacobian(state, model, dt);
  out.cov = f * state.cov * f.transpose() + process_noise;
  symmetrize(out.cov);
  return out;
}

FilterState kf_update(const FilterState& state, const Vec3& z,
                      const NoiseConfig& noise) {
  const Mat3 p_pos = state.cov.topLeftCorner<3, 3>();
  const Mat3 s = p_pos + noise.measurement;

  Eigen::LDLT<Mat3> ldlt(s);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericalError("kf_update: innovation covariance not invertible");

  Eigen::Matrix<double, 6, 3> ph = state.cov.leftCols<3>();  // P * H^T
  const Eigen::Matrix<double, 6, 3> gain = ldlt.solve(ph.transpose()).transpose();

  const Vec3 innovation = z - state.position();

  FilterState out;
  out.t = state.t;
  out.mean = state.mean + gain * innovation;

  Mat6 ikh = Mat6::Identity();
  ikh.leftCols<3>() -= gain * Mat3::Identity().eval();  // I - K H, H = [I 0]
  out.cov = ikh * state.cov * ikh.transpose() +
            gain * noise.measurement * gain.transpose();
  symmetrize(out.cov);
  return out;
}

double kf_nis(const FilterState& state, const Vec3& z, const NoiseConfig& noise) {
  const Mat3 s = state.cov.topLeftCorner<3, 3>() + noise.measurement;
  Eigen::LDLT<Mat3> ldlt(s);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("kf_nis: innovation covariance not invertible");
  const Vec3 innovation = z - state.position();
  return innovation.dot(ldlt.solve(innovation));
}

FilterState init_from_measurements(const PositionMeasurement& m0,
                                   const PositionMeasurement& m1,
                                   const NoiseConfig& noise) {
  const double gap = m1.t - m0.t;
  if (gap <= 0.0) throw ConfigError("init_from_measurements: timestamps must increase");

  FilterState state;
  state.t = m1.t;
  state.mean.head<3>() = m1.position;
  state.mean.tail<3>() = (m1.position - m0.position) / gap;
  state.cov.setZero();
  state.cov.topLeftCorner<3, 3>() = noise.measurement;
  state.cov.bottomRightCorner<3, 3>() = 10.0 * Mat3::Identity();
  return state;
}

std::vector<FilterState> track(const std::vector<PositionMeasurement>& measurements,
                               const DragModel& model, const NoiseConfig& noise) {
  if (measurements.size() < 2)
    throw ConfigError("track: need at least two measurements");
  for (std::size_t i = 1; i < measurements.size(); ++i)
    if (measurements[i].t <= measurements[i - 1].t)
      throw ConfigError("track: timestamps must be strictly increasing");

  std::vector<FilterState> out;
  out.reserve(measurements.size());
  FilterState state = init_from_measurements(measurements[0], measurements[1], noise);
  // Entry 0 back-dates the two-point initialization so the output stays
  // aligned one-to-one with the measurements.
  FilterState first = state;
  first.t = measurements[0].t;
  first.mean.head<3>() = measurements[0].position;
  out.push_back(first);
  out.push_back(state);
  for (std::size_t i = 2; i < measurements.size(); ++i) {
    state = kf_predict(state, model, measurements[i].t - state.t, noise.process);
    state = kf_update(state, measurements[i].position, noise);
    out.push_back(state);
  }
  return out;
}

}  // namespace catchsim
