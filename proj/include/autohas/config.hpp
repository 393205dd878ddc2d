#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "autohas/data.hpp"
#include "autohas/engine.hpp"
#include "autohas/space.hpp"

// The engine configuration document (JSON). Parsing is strict: unknown keys
// and out-of-range values are ValidationErrors.
namespace autohas {

struct DataConfig {
  std::string generator = "two_moons";  // two_moons | spirals | csv
  std::size_t n = 1000;
  double noise = 0.1;
  double turns = 1.5;
  std::filesystem::path csv;
  std::array<double, 3> fractions{0.6, 0.2, 0.2};
};

struct OutputConfig {
  std::filesystem::path log = "events.jsonl";
  std::filesystem::path checkpoint = "checkpoint.json";
  std::filesystem::path result = "result.json";
  std::uint64_t checkpoint_interval = 0;  // 0: only at the end
  bool record_timing = false;              // otherwise wall_ms is written as 0
};

struct EngineConfig {
  std::uint64_t seed = 0;
  SpaceConfig space;  // input_width and classes come from the data
  DataConfig data;
  SearchOptions search;
  RetrainOptions retrain;
  OutputConfig output;
  nlohmann::json source;  // the parsed document, for checkpoint echoes
};

// Relative paths resolve against `base_dir`.
EngineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
EngineConfig load_config(const std::filesystem::path& path);

Dataset load_dataset(const EngineConfig& config);
// Builds the search space once the data fixes input width and class count.
SearchSpace build_space_for(const EngineConfig& config, const Dataset& data);

}  // namespace autohas
