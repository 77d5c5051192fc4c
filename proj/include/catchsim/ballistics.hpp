#pragma once

#include <optional>
#include <vector>

#include "catchsim/rng.hpp"
#include "catchsim/types.hpp"

namespace catchsim {

/// Point-mass flight model: gravity plus quadratic aerodynamic drag.
struct DragModel {
  double drag_coeff = 0.0238;  // K_D [1/m]
  double gravity = 9.81;       // [m/s^2]
};

struct BallState {
  Vec3 position = Vec3::Zero();  // [m], world frame
  Vec3 velocity = Vec3::Zero();  // [m/s]
  double t = 0.0;                // [s]
};

/// Fixed-step trajectory on the grid t0 + k*dt.
struct BallPrediction {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<BallState> states;

  double end_time() const {
    return states.empty() ? t0 : states.back().t;
  }
};

enum class Integrator { rk4, euler };

/// Acceleration of the ball: -(0,0,g) - K_D * |v| * v.
Vec3 ball_accel(const DragModel& model, const Vec3& velocity);

/// Integrates the flight model from s0 over [0, horizon] with fixed step dt.
/// Deterministic. Throws ConfigError for dt <= 0 or horizon < dt.
BallPrediction predict(const DragModel& model, const BallState& s0,
                       double horizon, double dt,
                       Integrator method = Integrator::rk4);

/// Cubic Hermite interpolation of the stored grid; exact at grid points.
/// Throws ConfigError when t lies outside the prediction horizon.
BallState query(const BallPrediction& pred, double t);

/// estimate_drag could not see enough informative samples.
class IdentifiabilityError : public std::runtime_error {
 public:
  explicit IdentifiabilityError(const std::string& what) : std::runtime_error(what) {}
};

struct DragEstimationOptions {
  double gravity = 9.81;
  double min_speed = 0.5;        // samples slower than this carry no drag signal
  double forgetting = 1.0;       // RLS forgetting factor, 1 = none
  int min_usable_samples = 10;
};

/// Recursive least squares fit of K_D from recorded toss sequences.
/// Accelerations come from central differences of the recorded velocities;
/// each sample contributes the scalar regression -(bdd + g)·h = K_D |v|^2.
DragModel estimate_drag(const std::vector<std::vector<BallState>>& tosses,
                        const DragEstimationOptions& opts = {});

/// Initial velocity so that the flight from `origin` passes through `target`
/// after `flight_time`, found by fixed-point shooting seeded with the
/// drag-free closed form. nullopt when 50 iterations leave >1 mm error.
std::optional<Vec3> solve_throw_velocity(const DragModel& model, const Vec3& origin,
                                         const Vec3& target, double flight_time,
                                         int* iterations = nullptr);

/// Throw origin sampling region: an annulus footprint with a height band,
/// or a fixed point when set.
struct OriginRegion {
  double radius_min = 2.5;
  double radius_max = 3.5;
  double height_min = 1.2;
  double height_max = 1.8;
  std::optional<Vec3> fixed_origin;
};

/// Samples an origin from the region (deterministic per seed) and shoots
/// at `target`. nullopt when the shooting iteration does not converge.
std::optional<BallState> synthesize_throw(const DragModel& model, std::uint64_t seed,
                                          const Vec3& target, double flight_time,
                                          const OriginRegion& region);

}  // namespace catchsim
