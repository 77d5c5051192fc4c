#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace catchsim {

// Joint ordering contract: six revolute arm joints (rad) followed by the
// two prismatic base coordinates x_b, y_b (m).
inline constexpr int kNumJoints = 8;
inline constexpr int kNumArmJoints = 6;
inline constexpr int kNumBaseJoints = 2;
inline constexpr int kBaseX = 6;
inline constexpr int kBaseY = 7;

using JointVector = Eigen::Matrix<double, kNumJoints, 1>;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Invalid configuration content (bad schema, inconsistent limits, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure (missing file, unreadable, unwritable).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace catchsim
