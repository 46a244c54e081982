#pragma once

#include <filesystem>
#include <string>

#include "vfollow/control.hpp"
#include "vfollow/fusion.hpp"
#include "vfollow/sim.hpp"

namespace vfollow {

/// Everything a simulate or track run needs. The YAML file uses the
/// ScenarioConfig field names as top-level keys, plus optional `fusion` and
/// `controller` maps keyed by those structs' field names. Unknown keys are
/// rejected so typos do not silently fall back to defaults.
struct RunConfig {
  ScenarioConfig scenario;
  FusionConfig fusion;
  ControllerConfig controller;
};

RunConfig parse_run_config(const std::string& yaml_text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace vfollow
