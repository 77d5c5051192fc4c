#include "catchsim/robot_model.hpp"

#include <cmath>

namespace catchsim {

namespace {

Eigen::Isometry3d dh_transform(const DhLink& link, double theta) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.rotate(Eigen::AngleAxisd(theta + link.theta0, Vec3::UnitZ()));
  t.translate(Vec3(0.0, 0.0, link.d));
  t.translate(Vec3(link.a, 0.0, 0.0));
  t.rotate(Eigen::AngleAxisd(link.alpha, Vec3::UnitX()));
  return t;
}

}  // namespace

void validate(const RobotDescription& desc) {
  if (desc.format_version != 1)
    throw ConfigError("robot description: unsupported format_version " +
                      std::to_string(desc.format_version));
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(desc.q_max[i] > 0.0 && desc.v_max[i] > 0.0 && desc.a_max[i] > 0.0))
      throw ConfigError("robot description: limits must be strictly positive (joint " +
                        std::to_string(i) + ")");
  }
  if (!(desc.collision_radius > 0.0 && desc.collision_height > 0.0))
    throw ConfigError("robot description: collision cylinder must have positive size");
  for (const DhLink& link : desc.arm_chain) {
    if (!std::isfinite(link.a) || !std::isfinite(link.alpha) ||
        !std::isfinite(link.d) || !std::isfinite(link.theta0))
      throw ConfigError("robot description: non-finite DH parameter");
  }
  if (!desc.base_to_arm.matrix().allFinite() || !desc.ee_transform.matrix().allFinite())
    throw ConfigError("robot description: non-finite fixed transform");
}

EePose forward_kinematics(const RobotDescription& desc, const JointVector& q) {
  Eigen::Isometry3d arm = Eigen::Isometry3d::Identity();
  for (int i = 0; i < kNumArmJoints; ++i)
    arm = arm * dh_transform(desc.arm_chain[i], q[i]);
  arm = arm * desc.ee_transform;

  Eigen::Isometry3d world = desc.base_to_arm * arm;
  world.pretranslate(Vec3(q[kBaseX], q[kBaseY], 0.0));

  EePose pose;
  pose.p_arm = arm.translation();
  pose.p_world = world.translation();
  pose.z_axis_world = world.linear().col(2);
  return pose;
}

bool collision_ok(const RobotDescription& desc, const JointVector& q) {
  const Vec3 p = forward_kinematics(desc, q).p_arm;
  const double r2 = p.x() * p.x() + p.y() * p.y();
  return r2 <= desc.collision_radius * desc.collision_radius &&
         p.z() >= 0.0 && p.z() <= desc.collision_height;
}

bool within_limits(const RobotDescription& desc, const JointVector& q,
                   const JointVector& qd, const JointVector& u, double slack) {
  for (int i = 0; i < kNumJoints; ++i) {
    if (std::abs(q[i]) > desc.q_max[i] + slack) return false;
    if (std::abs(qd[i]) > desc.v_max[i] + slack) return false;
    if (std::abs(u[i]) > desc.a_max[i] + slack) return false;
  }
  return true;
}

RobotDescription default_description() {
  RobotDescription d;
  d.format_version = 1;
  d.name = "ur10_ridgeback";

  // Published UR10 DH parameters (a, alpha, d), theta offsets zero.
  d.arm_chain = {DhLink{0.0, kPi / 2.0, 0.1273, 0.0},
                 DhLink{-0.612, 0.0, 0.0, 0.0},
                 DhLink{-0.5723, 0.0, 0.0, 0.0},
                 DhLink{0.0, kPi / 2.0, 0.163941, 0.0},
                 DhLink{0.0, -kPi / 2.0, 0.1157, 0.0},
                 DhLink{0.0, 0.0, 0.0922, 0.0}};

  d.base_to_arm = Eigen::Isometry3d(Eigen::Translation3d(0.0, 0.0, 0.30));
  d.ee_transform = Eigen::Isometry3d(Eigen::Translation3d(0.0, 0.0, 0.12));

  for (int i = 0; i < kNumArmJoints; ++i) {
    d.q_max[i] = deg2rad(180.0);
    d.a_max[i] = deg2rad(458.0);
  }
  d.v_max[0] = d.v_max[1] = d.v_max[2] = deg2rad(103.0);
  d.v_max[3] = d.v_max[4] = deg2rad(126.0);
  d.v_max[5] = deg2rad(180.0);

  d.q_max[kBaseX] = d.q_max[kBaseY] = 3.0;
  d.v_max[kBaseX] = d.v_max[kBaseY] = 1.0;
  d.a_max[kBaseX] = d.a_max[kBaseY] = 2.5;

  d.collision_radius = 1.2;
  d.collision_height = 1.5;
  return d;
}

}  // namespace catchsim
