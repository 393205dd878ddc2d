#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "autohas/engine.hpp"
#include "autohas/supernet.hpp"
#include "autohas/trainstep.hpp"

// JSON / JSONL persistence. Key order is fixed, reals use round-trip decimal
// rendering and 64-bit digests are 16-digit lowercase hex strings.
namespace autohas {

inline constexpr int kCheckpointFormatVersion = 1;

std::string digest_hex(std::uint64_t digest);
std::uint64_t parse_digest_hex(const std::string& text);

// Writes `text` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

nlohmann::ordered_json event_to_json(const EventRecord& event);
EventRecord event_from_json(const nlohmann::json& j);
std::string event_line(const EventRecord& event);  // no trailing newline
std::vector<EventRecord> read_events(const std::filesystem::path& path);

// Append-only JSONL writer. Every record is flushed as one line.
class EventLog {
 public:
  // Starts a fresh log.
  explicit EventLog(const std::filesystem::path& path);
  // Keeps the first `keep` records of an existing log (used on resume).
  EventLog(const std::filesystem::path& path, std::uint64_t keep);

  void write(const EventRecord& event);

 private:
  std::ofstream out_;
};

nlohmann::ordered_json result_to_json(const SearchSpace& space, const SearchResult& result);
std::string result_text(const SearchSpace& space, const SearchResult& result);
// Reads back the derived configuration of a result file.
DerivedConfig derived_from_result(const nlohmann::ordered_json& result);

struct Checkpoint {
  nlohmann::json config;
  SearchState state;
  SuperModelWeights weights;
  SlotStore commit_slots;
};

std::string checkpoint_text(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Throws IoError on malformed JSON, an unknown format version, or when the
// stored digest does not match the stored tensors.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace autohas
