#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "catchsim/robot_model.hpp"
#include "catchsim/trajectory.hpp"
#include "catchsim/types.hpp"

namespace catchsim {

/// Joint-level servo surrogate: each joint runs an off-board PD loop that
/// produces a velocity command, behind a transport delay of `delay_steps`
/// control periods, followed by a first-order velocity lag and the
/// actuation clips. The closed-loop relative degree (control steps from a
/// reference step to the first output deviation) is delay_steps + 1.
struct PlantConfig {
  double control_dt = 0.008;  // 125 Hz

  JointVector kp;           // velocity command per unit position error [1/s]
  JointVector kd;           // velocity damping [-]
  JointVector tau;          // velocity lag time constant [s]
  std::array<int, kNumJoints> delay_steps{};
  std::array<int, kNumJoints> relative_degree{};

  // Actuation limits, mirroring the robot description they came from.
  JointVector q_max;
  JointVector v_max;
  JointVector a_max;

  /// Defaults: relative degree 8 on the arm joints and 14 on the base,
  /// moderate servo bandwidth, limits copied from `desc`.
  static PlantConfig defaults(const RobotDescription& desc);

  /// Throws ConfigError when time constants, delays, or the declared
  /// relative degrees are inconsistent.
  void validate() const;
};

/// Mutable per-joint servo state. `pending` holds references queued behind
/// the transport delay, oldest first.
struct PlantState {
  JointVector q = JointVector::Zero();
  JointVector qd = JointVector::Zero();
  std::array<std::deque<double>, kNumJoints> pending;
};

/// Equilibrium state at rest at `q0` (delay lines primed with q0).
PlantState init_plant(const PlantConfig& cfg, const JointVector& q0);

/// Advances the plant by one control period under reference `y_ref` and
/// returns the measured joint positions. Deterministic.
JointVector plant_step(const PlantConfig& cfg, PlantState& state,
                       const JointVector& y_ref);

/// Empirical relative degree of one joint: steps a reference from
/// equilibrium and counts control periods until the output first moves.
int measure_relative_degree(const PlantConfig& cfg, int joint);

/// One supervised example for the reference-correction network, stored as
/// offsets from the next measured output sample q[k+1]:
///   inputs (q[k]-q[k+1], q[k+r]-q[k+1]), target y[k+1]-q[k+1],
/// where y is the reference actually applied and q the measured output.
/// On a recorded run the measured outputs play the role of the desired
/// signal, so the target is the reference offset that provably produced
/// them; a plant tracking perfectly (q == y) yields all-zero targets.
struct TrainingPair {
  double state_offset = 0.0;
  double future_offset = 0.0;
  double target = 0.0;
};

struct TrainingSet {
  std::array<std::vector<TrainingPair>, kNumJoints> joints;
};

/// Slices aligned (applied reference, measured output) streams into
/// per-joint training pairs using each joint's relative degree.
/// Bit-identical across re-runs on the same streams.
TrainingSet extract_pairs(const std::vector<JointVector>& applied,
                          const std::vector<JointVector>& measured,
                          const std::array<int, kNumJoints>& relative_degree);

/// Dataset generation settings. Displacement bounds and durations follow
/// the catching-style profile: large joint excursions over a few seconds.
///
/// Anchor jitter: every pair is stored relative to an anchor sample, and
/// the map being learned is exactly translation invariant (shifting the
/// anchor shifts both inputs and the target by the same amount). Extracted
/// pairs alone only cover anchors one control step from the current
/// output, while at run time the anchor is the desired reference, which
/// sits a full tracking error away. Re-anchored copies drawn within
/// `anchor_jitter` close that gap; without them the network is queried far
/// outside its training distribution and the correction loop diverges.
struct DatasetOptions {
  std::uint64_t seed = 1;
  int min_pairs_per_joint = 1000;
  double waypoint_dt = 0.05;
  JointVector max_displacement;  // defaulted in the constructor
  std::vector<double> durations{2.0, 3.0, 4.0};
  JointVector anchor_jitter;  // defaulted in the constructor
  int jitter_copies = 2;

  DatasetOptions();
};

/// Plans rest-to-rest minimum-jerk-style waypoint trajectories with the
/// low-level planner, replays them open-loop on the plant surrogate, and
/// extracts training pairs until every joint has `min_pairs_per_joint`.
/// Throws ConfigError when the generator produces an infeasible instance.
TrainingSet collect_dataset(const RobotDescription& desc,
                            const PlantConfig& cfg,
                            const DatasetOptions& opts = {});

void save_dataset(const TrainingSet& set, const std::string& path);
TrainingSet load_dataset(const std::string& path);

/// Fixed-architecture scalar regressor: 2 inputs, two hidden layers of 10
/// rectified-linear units, one linear output; z-score normalization
/// constants are part of the model.
struct JointMlp {
  Eigen::MatrixXd w1;  // 10 x 2
  Eigen::VectorXd b1;  // 10
  Eigen::MatrixXd w2;  // 10 x 10
  Eigen::VectorXd b2;  // 10
  Eigen::MatrixXd w3;  // 1 x 10
  double b3 = 0.0;

  Eigen::Vector2d in_mean = Eigen::Vector2d::Zero();
  Eigen::Vector2d in_std = Eigen::Vector2d::Ones();
  double out_mean = 0.0;
  double out_std = 1.0;

  /// Network output in physical units for physical-unit inputs.
  double forward(double state_offset, double future_offset) const;
};

struct MlpModel {
  std::array<JointMlp, kNumJoints> joints;
};

struct TrainOptions {
  int epochs = 50;
  int batch = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  double val_fraction = 0.2;
};

struct JointCurves {
  std::vector<double> train_mse;  // one entry per epoch, normalized units
  std::vector<double> val_mse;
};

struct TrainReport {
  std::array<JointCurves, kNumJoints> joints;
};

/// Raised when validation loss exceeds 10x its initial value.
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

/// Adaptive-moment stochastic gradient descent on mean squared error with
/// a seeded shuffle/split; identical options and data give bit-identical
/// models. Curves are recorded per epoch when `report` is non-null.
JointMlp train_joint(const std::vector<TrainingPair>& pairs,
                     const TrainOptions& opts = {},
                     JointCurves* curves = nullptr);

MlpModel train(const TrainingSet& set, const TrainOptions& opts = {},
               TrainReport* report = nullptr);

/// Production training path: per joint, trains candidates from a
/// deterministic seed sequence and keeps the first whose closed-loop
/// correction on a smooth probe trajectory cuts tracking error by at
/// least half (best candidate wins if none reaches that). Open-loop
/// validation loss alone does not predict closed-loop behavior, so model
/// selection replays each candidate against the plant surrogate.
MlpModel train_for_plant(const TrainingSet& set, const PlantConfig& cfg,
                         const TrainOptions& opts = {},
                         TrainReport* report = nullptr);

void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

/// Reference pre-shaping: the modified next reference is
///   y_next + NN(q_now - y_next, y_future - y_next)
/// so a zero network passes the reference through unchanged. `y_future`
/// is the desired reference one relative degree ahead.
double preshape_joint(const JointMlp& net, double q_now, double y_next,
                      double y_future);

/// Vector form over all joints, clamped to the position limits.
JointVector preshape(const MlpModel& model, const PlantConfig& cfg,
                     const JointVector& q_now, const JointVector& y_next,
                     const JointVector& y_future);

/// Closed-loop replay of one reference trajectory on the plant surrogate,
/// optionally routing references through the pre-shaping network. Tracking
/// error is always measured against the unmodified reference.
struct TrackResult {
  std::vector<double> times;
  std::vector<JointVector> reference;
  std::vector<JointVector> measured;
  JointVector rmse = JointVector::Zero();
};

TrackResult track_trajectory(const PlantConfig& cfg,
                             const JointTrajectory& traj,
                             const MlpModel* model = nullptr,
                             double settle_time = 0.3);

namespace detail {

/// Parameter-shaped gradient bundle for the scalar network.
struct MlpGradients {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2;
  double b3 = 0.0;
};

/// Mean squared error over normalized-space samples (x1, x2, target) and
/// its analytic gradient; the finite-difference oracle in the tests
/// differentiates this same scalar.
double mlp_loss_and_grad(const JointMlp& net,
                         const std::vector<Eigen::Vector3d>& samples,
                         MlpGradients* grads);

}  // namespace detail

}  // namespace catchsim
