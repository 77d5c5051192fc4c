#pragma once

#include <vector>

#include "catchsim/ballistics.hpp"
#include "catchsim/types.hpp"

namespace catchsim {

/// Innovation covariance was not invertible or a covariance lost shape.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Gaussian belief over the ball state (position, velocity).
struct FilterState {
  Vec6 mean = Vec6::Zero();  // [b; b_dot]
  Mat6 cov = Mat6::Identity();
  double t = 0.0;

  Vec3 position() const { return mean.head<3>(); }
  Vec3 velocity() const { return mean.tail<3>(); }
};

struct NoiseConfig {
  Mat6 process = Mat6::Zero();      // per prediction step
  Mat3 measurement = Mat3::Zero();  // position measurement covariance

  /// White-acceleration process noise mapped through a step of length dt,
  /// plus an isotropic position measurement sigma.
  static NoiseConfig white_accel(double sigma_accel, double dt, double sigma_meas);
};

struct PositionMeasurement {
  Vec3 position = Vec3::Zero();
  double t = 0.0;
};

///// Prediction step: mean propagated through the drag-aware constant-
/// acceleration map, covariance through its Jacobian (EKF linearization).
/// Negative dt runs the same map backwards (used by reversibility checks).
FilterState kf_predict(const FilterState& state, const DragModel& model, double dt,
                       const Mat6& process_noise);

/// Jacobian of the prediction mean map with respect to the state.
Mat6 kf_transition_jacobian(const FilterState& state, const DragModel& model,
                            double dt);

/// Measurement update with H = [I 0], Joseph-form covariance update.
FilterState kf_update(const FilterState& state, const Vec3& z,
                      const NoiseConfig& noise);

/// Normalized innovation squared of z against the prior state.
double kf_nis(const FilterState& state, const Vec3& z, const NoiseConfig& noise);

/// Position + finite-difference velocity from the first two measurements;
/// velocity variance starts large (10 m^2/s^2 per axis).
FilterState init_from_measurements(const PositionMeasurement& m0,
                                   const PositionMeasurement& m1,
                                   const NoiseConfig& noise);

/// Runs predict/update over a time-ordered measurement stream, emitting one
/// posterior per measurement (the first two entries restate the two-point
/// initialization). Throws ConfigError on non-monotone timestamps or fewer
/// than two measurements.
std::vector<FilterState> track(const std::vector<PositionMeasurement>& measurements,
                               const DragModel& model, const NoiseConfig& noise);

}  // namespace catchsim
