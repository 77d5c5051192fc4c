#pragma once

#include <Eigen/Geometry>
#include <array>
#include <string>

#include "catchsim/types.hpp"

namespace catchsim {

/// Standard Denavit-Hartenberg parameters of one revolute link:
/// A(theta) = RotZ(theta + theta0) * TransZ(d) * TransX(a) * RotX(alpha).
struct DhLink {
  double a = 0.0;       // link length [m]
  double alpha = 0.0;   // link twist [rad]
  double d = 0.0;       // link offset [m]
  double theta0 = 0.0;  // fixed joint angle offset [rad]
};

/// Kinematic description of the 8-DoF platform: a 6-R serial arm on a
/// planar (x, y) prismatic base. Limits are symmetric: min = -max.
struct RobotDescription {
  int format_version = 1;
  std::string name;

  std::array<DhLink, kNumArmJoints> arm_chain;
  Eigen::Isometry3d base_to_arm = Eigen::Isometry3d::Identity();
  Eigen::Isometry3d ee_transform = Eigen::Isometry3d::Identity();

  JointVector q_max = JointVector::Zero();  // position limits, all > 0
  JointVector v_max = JointVector::Zero();  // velocity limits, all > 0
  JointVector a_max = JointVector::Zero();  // acceleration limits, all > 0

  double collision_radius = 1.2;  // R of the end-effector containment cylinder [m]
  double collision_height = 1.5;  // H of the cylinder [m]

  JointVector q_min() const { return -q_max; }
  JointVector v_min() const { return -v_max; }
  JointVector a_min() const { return -a_max; }
};

/// End-effector pose summary used by the planner.
struct EePose {
  Vec3 p_world = Vec3::Zero();       // EE origin in the world frame [m]
  Vec3 z_axis_world = Vec3::UnitZ(); // unit z axis of the EE frame, world coords
  Vec3 p_arm = Vec3::Zero();         // EE origin in the arm mount frame [m]
};

/// Throws ConfigError when limits are not strictly positive, the cylinder
/// is degenerate, or the chain has non-finite entries.
void validate(const RobotDescription& desc);

/// Pose of the end effector: world placement composes the planar base
/// translation, the base-to-arm mount transform, the six revolute links
/// and the fixed EE transform; p_arm drops the first two.
EePose forward_kinematics(const RobotDescription& desc, const JointVector& q);

/// Workspace containment test: the end effector must stay inside the
/// upright cylinder around the arm mount, x^2 + y^2 <= R^2 and
/// 0 <= z <= H in mount coordinates, boundaries inclusive.
bool collision_ok(const RobotDescription& desc, const JointVector& q);

/// Componentwise box membership of position, velocity and acceleration,
/// with an absolute slack for floating-point boundary cases.
bool within_limits(const RobotDescription& desc, const JointVector& q,
                   const JointVector& qd, const JointVector& u,
                   double slack = 1e-9);

/// Built-in description matching the shipped ur10_ridgeback.yaml file:
/// published UR10 DH parameters, stock joint limits, default cylinder.
RobotDescription default_description();

}  // namespace catchsim
