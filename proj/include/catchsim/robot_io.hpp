#pragma once

#include <string>

#include "catchsim/robot_model.hpp"

namespace catchsim {

/// Loads a robot description document. Angles are stored in degrees
/// (keys carry a _deg suffix), lengths in meters. Throws IoError on
/// filesystem problems, ConfigError on schema or value problems.
RobotDescription load_robot_description(const std::string& path);

/// Writes the description back in the same schema, format_version 1.
void save_robot_description(const RobotDescription& desc, const std::string& path);

}  // namespace catchsim
