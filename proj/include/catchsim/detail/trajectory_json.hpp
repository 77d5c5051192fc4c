#pragma once

#include <json.hpp>

#include "catchsim/trajectory.hpp"

namespace catchsim::detail {

/// Shared (de)serialization of the waypoint grid so trajectory files and
/// embedded plan dumps cannot drift apart. Internal to the library.
nlohmann::json trajectory_to_json(const JointTrajectory& traj);
JointTrajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace catchsim::detail
