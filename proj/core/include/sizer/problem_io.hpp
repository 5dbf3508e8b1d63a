// JSON representation of problem specifications.
#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "sizer/core.hpp"

namespace sizer {

void to_json(nlohmann::json& j, const ConstraintSpec& c);
void from_json(const nlohmann::json& j, ConstraintSpec& c);
void to_json(nlohmann::json& j, const Bounds& b);
void from_json(const nlohmann::json& j, Bounds& b);
void to_json(nlohmann::json& j, const ProblemSpec& p);
void from_json(const nlohmann::json& j, ProblemSpec& p);

ProblemSpec load_problem(const std::filesystem::path& path);
void save_problem(const ProblemSpec& p, const std::filesystem::path& path);

}  // namespace sizer
