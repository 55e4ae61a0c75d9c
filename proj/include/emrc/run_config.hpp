#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "emrc/collaboration.hpp"
#include "emrc/recruitment.hpp"

namespace emrc {

/// Everything a run needs, resolved in layers: built-in defaults, then the
/// config file, then command-line flags.
struct RunConfig {
  std::string pool_path;
  std::string table_path;
  std::string aliases_path;  // empty means the bundled alias set
  std::string out_dir = "runs";
  std::uint64_t seed = 0;
  std::size_t query_parallel = 1;
  RecruitmentConfig recruitment;
  CollabConfig collab;

  void validate() const;
};

/// Applies the file's fields on top of the given base. Unknown keys are
/// rejected so typos fail loudly.
RunConfig run_config_from_json(const nlohmann::json& value, RunConfig base = {});

nlohmann::json run_config_to_json(const RunConfig& config);

RunConfig load_run_config(const std::string& path, RunConfig base = {});

}  // namespace emrc
