#include "catchsim/robot_io.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>

namespace catchsim {

namespace {

Eigen::Isometry3d parse_transform(const YAML::Node& node, const std::string& ctx) {
  if (!node || !node["translation"] || !node["rpy_deg"])
    throw ConfigError("robot description: " + ctx + " needs translation and rpy_deg");
  const auto tr = node["translation"].as<std::vector<double>>();
  const auto rpy = node["rpy_deg"].as<std::vector<double>>();
  if (tr.size() != 3 || rpy.size() != 3)
    throw ConfigError("robot description: " + ctx + " entries must have 3 components");
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.translate(Vec3(tr[0], tr[1], tr[2]));
  t.rotate(Eigen::AngleAxisd(deg2rad(rpy[2]), Vec3::UnitZ()) *
           Eigen::AngleAxisd(deg2rad(rpy[1]), Vec3::UnitY()) *
           Eigen::AngleAxisd(deg2rad(rpy[0]), Vec3::UnitX()));
  return t;
}

YAML::Node emit_transform(const Eigen::Isometry3d& t) {
  YAML::Node n;
  const Vec3 tr = t.translation();
  n["translation"] = std::vector<double>{tr.x(), tr.y(), tr.z()};
  // Recover Z-Y-X euler angles from the rotation matrix.
  const Mat3 r = t.linear();
  const double pitch = std::asin(-r(2, 0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  n["rpy_deg"] = std::vector<double>{rad2deg(roll), rad2deg(pitch), rad2deg(yaw)};
  return n;
}

std::vector<double> require_list(const YAML::Node& node, const std::string& key,
                                 std::size_t n) {
  if (!node[key]) throw ConfigError("robot description: missing limits." + key);
  auto v = node[key].as<std::vector<double>>();
  if (v.size() != n)
    throw ConfigError("robot description: limits." + key + " must have " +
                      std::to_string(n) + " entries");
  return v;
}

}  // namespace

RobotDescription load_robot_description(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw IoError("robot description file not found: " + path);
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw ConfigError("robot description: parse error in " + path + ": " + e.what());
  }

  RobotDescription d;
  if (!root["format_version"])
    throw ConfigError("robot description: missing format_version");
  d.format_version = root["format_version"].as<int>();
  d.name = root["name"] ? root["name"].as<std::string>() : "unnamed";

  const YAML::Node chain = root["arm_chain"];
  if (!chain || !chain.IsSequence() || chain.size() != kNumArmJoints)
    throw ConfigError("robot description: arm_chain must list 6 links");
  for (int i = 0; i < kNumArmJoints; ++i) {
    const YAML::Node link = chain[i];
    d.arm_chain[i].a = link["a"].as<double>();
    d.arm_chain[i].alpha = deg2rad(link["alpha_deg"].as<double>());
    d.arm_chain[i].d = link["d"].as<double>();
    d.arm_chain[i].theta0 = deg2rad(link["theta0_deg"].as<double>());
  }

  d.base_to_arm = parse_transform(root["base_to_arm"], "base_to_arm");
  d.ee_transform = parse_transform(root["ee_transform"], "ee_transform");

  const YAML::Node lim = root["limits"];
  if (!lim) throw ConfigError("robot description: missing limits table");
  const auto qp = require_list(lim, "arm_position_max_deg", kNumArmJoints);
  const auto qv = require_list(lim, "arm_velocity_max_deg_s", kNumArmJoints);
  const auto qa = require_list(lim, "arm_acceleration_max_deg_s2", kNumArmJoints);
  for (int i = 0; i < kNumArmJoints; ++i) {
    d.q_max[i] = deg2rad(qp[i]);
    d.v_max[i] = deg2rad(qv[i]);
    d.a_max[i] = deg2rad(qa[i]);
  }
  d.q_max[kBaseX] = d.q_max[kBaseY] = lim["base_position_max_m"].as<double>();
  d.v_max[kBaseX] = d.v_max[kBaseY] = lim["base_velocity_max_m_s"].as<double>();
  d.a_max[kBaseX] = d.a_max[kBaseY] = lim["base_acceleration_max_m_s2"].as<double>();

  const YAML::Node cyl = root["collision_cylinder"];
  if (!cyl) throw ConfigError("robot description: missing collision_cylinder table");
  d.collision_radius = cyl["radius_m"].as<double>();
  d.collision_height = cyl["height_m"].as<double>();

  validate(d);
  return d;
}

void save_robot_description(const RobotDescription& desc, const std::string& path) {
  YAML::Node root;
  root["format_version"] = desc.format_version;
  root["name"] = desc.name;
  for (const DhLink& link : desc.arm_chain) {
    YAML::Node n;
    n["a"] = link.a;
    n["alpha_deg"] = rad2deg(link.alpha);
    n["d"] = link.d;
    n["theta0_deg"] = rad2deg(link.theta0);
    root["arm_chain"].push_back(n);
  }
  root["base_to_arm"] = emit_transform(desc.base_to_arm);
  root["ee_transform"] = emit_transform(desc.ee_transform);

  YAML::Node lim;
  std::vector<double> qp, qv, qa;
  for (int i = 0; i < kNumArmJoints; ++i) {
    qp.push_back(rad2deg(desc.q_max[i]));
    qv.push_back(rad2deg(desc.v_max[i]));
    qa.push_back(rad2deg(desc.a_max[i]));
  }
  lim["arm_position_max_deg"] = qp;
  lim["arm_velocity_max_deg_s"] = qv;
  lim["arm_acceleration_max_deg_s2"] = qa;
  lim["base_position_max_m"] = desc.q_max[kBaseX];
  lim["base_velocity_max_m_s"] = desc.v_max[kBaseX];
  lim["base_acceleration_max_m_s2"] = desc.a_max[kBaseX];
  root["limits"] = lim;

  YAML::Node cyl;
  cyl["radius_m"] = desc.collision_radius;
  cyl["height_m"] = desc.collision_height;
  root["collision_cylinder"] = cyl;

  std::ofstream out(path);
  if (!out) throw IoError("cannot write robot description: " + path);
  out << root << "\n";
}

}  // namespace catchsim
