#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "autohas/config.hpp"
#include "autohas/engine.hpp"

namespace autohas {

struct SearchJobOptions {
  std::optional<std::filesystem::path> resume;  // checkpoint to continue from
  // Stop (after checkpointing) once this many meta-steps are done. The
  // schedule still follows the configured total, so a later resume
  // continues exactly where an uninterrupted run would be.
  std::optional<std::uint64_t> stop_after;
};

// Runs the configured search end to end: event log, periodic checkpoints,
// final checkpoint and result file. Returns the result of the steps run.
SearchResult run_search_job(const EngineConfig& config, const SearchJobOptions& options = {});

// Exit status: 0 success, 1 validation error, 2 runtime error.
int run_cli(int argc, char** argv);

}  // namespace autohas
