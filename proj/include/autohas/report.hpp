#pragma once

#include <filesystem>
#include <vector>

#include "autohas/engine.hpp"

namespace autohas {

// Writes, under `out_dir`:
//   decision_<dd>.csv meta_step,p0,p1,...  (one row per event, d zero-padded)
//   rewards.csv       meta_step,mean_reward,baseline
//   summary.csv       per-decision final argmax, max probability, entropy
void write_report(const std::vector<EventRecord>& events, const std::filesystem::path& out_dir);

}  // namespace autohas
