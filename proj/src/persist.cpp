#include "autohas/persist.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "autohas/error.hpp"

namespace autohas {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kJsonIndent = 1;

ordered_json tensor_to_json(const Tensor& t) {
  ordered_json j;
  j["shape"] = t.shape();
  j["values"] = t.data();
  return j;
}

Tensor tensor_from_json(const json& j) {
  return Tensor(j.at("shape").get<Shape>(), j.at("values").get<std::vector<double>>());
}

ordered_json optional_tensor(const std::optional<Tensor>& t) { return t ? tensor_to_json(*t) : ordered_json(nullptr); }

std::optional<Tensor> optional_tensor_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return tensor_from_json(j);
}

// Keys in lexicographic order of their text form.
template <class Map>
std::vector<typename Map::const_iterator> sorted_by_name(const Map& m) {
  std::vector<typename Map::const_iterator> its;
  for (auto it = m.begin(); it != m.end(); ++it) its.push_back(it);
  std::sort(its.begin(), its.end(), [](auto a, auto b) { return a->first.str() < b->first.str(); });
  return its;
}

ordered_json selection_json(const CandidateSelection& s) { return s.indices; }

ordered_json record_to_json(const RewardRecord& r) {
  ordered_json j;
  j["meta_step"] = r.meta_step;
  j["selection"] = selection_json(r.selection);
  j["accuracy"] = r.accuracy;
  j["cost"] = r.cost;
  j["reward"] = r.reward;
  j["baseline"] = r.baseline;
  return j;
}

RewardRecord record_from_json(const json& j) {
  RewardRecord r;
  r.meta_step = j.at("meta_step").get<std::uint64_t>();
  r.selection.indices = j.at("selection").get<std::vector<std::size_t>>();
  r.accuracy = j.at("accuracy").get<double>();
  r.cost = j.at("cost").get<double>();
  r.reward = j.at("reward").get<double>();
  r.baseline = j.at("baseline").get<double>();
  return r;
}

ordered_json hyper_value_json(const HyperValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return std::get<double>(v);
}

template <class Fn>
auto wrap_json_errors(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::string digest_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

std::uint64_t parse_digest_hex(const std::string& text) {
  if (text.size() != 16 || text.find_first_not_of("0123456789abcdef") != std::string::npos)
    throw IoError("malformed digest '" + text + "'");
  return std::stoull(text, nullptr, 16);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ordered_json event_to_json(const EventRecord& e) {
  ordered_json j;
  j["meta_step"] = e.meta_step;
  j["mean_reward"] = e.mean_reward;
  j["baseline"] = e.baseline;
  j["probabilities"] = e.probabilities;
  j["store_digest"] = digest_hex(e.store_digest);
  j["wall_ms"] = e.wall_ms;
  return j;
}

EventRecord event_from_json(const json& j) {
  return wrap_json_errors("event record", [&] {
    EventRecord e;
    e.meta_step = j.at("meta_step").get<std::uint64_t>();
    e.mean_reward = j.at("mean_reward").get<double>();
    e.baseline = j.at("baseline").get<double>();
    e.probabilities = j.at("probabilities").get<ProbabilityTable>();
    e.store_digest = parse_digest_hex(j.at("store_digest").get<std::string>());
    e.wall_ms = j.at("wall_ms").get<double>();
    return e;
  });
}

std::string event_line(const EventRecord& event) { return event_to_json(event).dump(); }

std::vector<EventRecord> read_events(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<EventRecord> events;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    events.push_back(event_from_json(j));
  }
  return events;
}

EventLog::EventLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot open event log " + path.string());
}

EventLog::EventLog(const std::filesystem::path& path, std::uint64_t keep) {
  std::string kept;
  if (std::filesystem::exists(path)) {
    std::istringstream in(read_file(path));
    std::string line;
    for (std::uint64_t n = 0; n < keep && std::getline(in, line);) {
      if (line.empty()) continue;
      kept += line;
      kept += '\n';
      ++n;
    }
  }
  write_file_atomic(path, kept);
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw IoError("cannot open event log " + path.string());
}

void EventLog::write(const EventRecord& event) {
  out_ << event_line(event) << '\n';
  out_.flush();
  if (!out_) throw IoError("failed writing event log");
}

ordered_json result_to_json(const SearchSpace& space, const SearchResult& r) {
  ordered_json derived;
  derived["arch"] = r.derived.arch_choice;
  ordered_json ops = ordered_json::array();
  for (std::size_t l = 0; l < r.derived.arch_choice.size(); ++l) {
    const OperationSpec& op = space.arch()[l].candidates[r.derived.arch_choice[l]];
    std::string name(to_string(op.kind));
    if (op.has_params()) name += "(" + std::to_string(op.width) + ")";
    ops.push_back(name);
  }
  derived["arch_ops"] = ops;
  ordered_json hyper = ordered_json::object();
  for (const auto& [name, value] : r.derived.hyper_values) hyper[name] = hyper_value_json(value);
  derived["hyperparameters"] = hyper;

  ordered_json names = ordered_json::array();
  for (std::size_t d = 0; d < space.decision_count(); ++d) names.push_back(space.decision_name(d));

  ordered_json j;
  j["derived"] = derived;
  j["decisions"] = names;
  j["final_probabilities"] = r.final_probabilities;
  j["wall_steps"] = r.wall_steps;
  j["store_digest"] = digest_hex(r.store_digest);
  ordered_json history = ordered_json::array();
  for (const RewardRecord& rec : r.reward_history) history.push_back(record_to_json(rec));
  j["reward_history"] = history;
  return j;
}

std::string result_text(const SearchSpace& space, const SearchResult& result) {
  return result_to_json(space, result).dump(kJsonIndent) + "\n";
}

DerivedConfig derived_from_result(const ordered_json& result) {
  return wrap_json_errors("result file", [&]() -> DerivedConfig {
    const ordered_json& d = result.at("derived");
    DerivedConfig out;
    out.arch_choice = d.at("arch").get<std::vector<std::size_t>>();
    for (const auto& [name, value] : d.at("hyperparameters").items()) {
      if (value.is_string())
        out.hyper_values.emplace_back(name, value.get<std::string>());
      else
        out.hyper_values.emplace_back(name, value.get<double>());
    }
    return out;
  });
}

std::string checkpoint_text(const Checkpoint& c) {
  ordered_json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["config"] = c.config;
  j["next_meta_step"] = c.state.next_meta_step;

  const ControllerState& ctl = c.state.controller;
  ordered_json controller;
  controller["logits"] = ctl.logits;
  controller["baseline"] = ctl.baseline;
  controller["baseline_initialized"] = ctl.baseline_initialized;
  controller["step"] = ctl.step;
  controller["adam_m"] = ctl.adam_m;
  controller["adam_v"] = ctl.adam_v;
  controller["adam_t"] = ctl.adam_t;
  j["controller"] = controller;

  ordered_json rng;
  rng["controller"] = {{"seed", c.state.controller_rng.seed()},
                       {"name", c.state.controller_rng.name()},
                       {"counter", c.state.controller_rng.counter()}};
  j["rng"] = rng;

  ordered_json tensors = ordered_json::object();
  for (auto it : sorted_by_name(c.weights.store)) tensors[it->first.str()] = tensor_to_json(it->second);
  j["store"] = {{"digest", digest_hex(store_digest(c.weights.store))}, {"tensors", tensors}};

  ordered_json slots = ordered_json::object();
  for (auto it : sorted_by_name(c.commit_slots)) {
    const OptimizerSlots& s = it->second;
    ordered_json sj;
    sj["velocity"] = optional_tensor(s.velocity);
    sj["adam_m"] = optional_tensor(s.adam_m);
    sj["adam_v"] = optional_tensor(s.adam_v);
    sj["adam_t"] = s.adam_t;
    sj["rms_sq"] = optional_tensor(s.rms_sq);
    slots[it->first.str()] = sj;
  }
  j["commit_slots"] = slots;

  ordered_json history = ordered_json::array();
  for (const RewardRecord& rec : c.state.reward_history) history.push_back(record_to_json(rec));
  j["reward_history"] = history;
  return j.dump(kJsonIndent) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("malformed checkpoint: ") + e.what());
  }
  return wrap_json_errors("checkpoint", [&] {
    if (j.at("format_version").get<int>() != kCheckpointFormatVersion)
      throw IoError("checkpoint format version " + j.at("format_version").dump() + " is not supported");
    Checkpoint c;
    c.config = j.at("config");
    c.state.next_meta_step = j.at("next_meta_step").get<std::uint64_t>();

    const json& ctl = j.at("controller");
    c.state.controller.logits = ctl.at("logits").get<LogitTable>();
    c.state.controller.baseline = ctl.at("baseline").get<double>();
    c.state.controller.baseline_initialized = ctl.at("baseline_initialized").get<bool>();
    c.state.controller.step = ctl.at("step").get<std::uint64_t>();
    c.state.controller.adam_m = ctl.at("adam_m").get<LogitTable>();
    c.state.controller.adam_v = ctl.at("adam_v").get<LogitTable>();
    c.state.controller.adam_t = ctl.at("adam_t").get<std::uint64_t>();

    const json& rng = j.at("rng").at("controller");
    c.state.controller_rng = RngStream(rng.at("seed").get<std::uint64_t>(), rng.at("name").get<std::string>(),
                                       rng.at("counter").get<std::uint64_t>());

    for (const auto& [key, t] : j.at("store").at("tensors").items())
      c.weights.store.emplace(ParamKey::parse(key), tensor_from_json(t));
    const std::uint64_t stored = parse_digest_hex(j.at("store").at("digest").get<std::string>());
    if (stored != store_digest(c.weights.store)) throw IoError("checkpoint store digest mismatch");

    for (const auto& [key, sj] : j.at("commit_slots").items()) {
      OptimizerSlots s;
      s.velocity = optional_tensor_from(sj.at("velocity"));
      s.adam_m = optional_tensor_from(sj.at("adam_m"));
      s.adam_v = optional_tensor_from(sj.at("adam_v"));
      s.adam_t = sj.at("adam_t").get<std::uint64_t>();
      s.rms_sq = optional_tensor_from(sj.at("rms_sq"));
      c.commit_slots.emplace(ParamKey::parse(key), std::move(s));
    }
    for (const json& rec : j.at("reward_history")) c.state.reward_history.push_back(record_from_json(rec));
    return c;
  });
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, checkpoint_text(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace autohas
