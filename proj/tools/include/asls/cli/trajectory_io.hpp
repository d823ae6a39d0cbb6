#pragma once

#include <filesystem>

#include <json.hpp>

#include "asls/optimizer.hpp"

namespace asls::cli {

[[nodiscard]] nlohmann::json step_size_to_json(const StepSizeConfig& cfg);
[[nodiscard]] StepSizeConfig step_size_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json trajectory_to_json(const TrajectoryRecord& traj);
[[nodiscard]] TrajectoryRecord trajectory_from_json(const nlohmann::json& j);

void save_trajectory(const std::filesystem::path& path, const TrajectoryRecord& traj);
[[nodiscard]] TrajectoryRecord load_trajectory(const std::filesystem::path& path);

}  // namespace asls::cli
