#include "autohas/report.hpp"

#include <charconv>
#include <cmath>

#include "autohas/error.hpp"
#include "autohas/persist.hpp"

namespace autohas {

namespace {

std::string num(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string pad2(std::size_t d) { return d < 10 ? "0" + std::to_string(d) : std::to_string(d); }

}  // namespace

void write_report(const std::vector<EventRecord>& events, const std::filesystem::path& out_dir) {
  if (events.empty()) throw ValidationError("event log is empty");
  const std::size_t decisions = events.front().probabilities.size();
  for (const EventRecord& e : events)
    if (e.probabilities.size() != decisions) throw IoError("event log records disagree on the decision count");

  std::filesystem::create_directories(out_dir);
  for (std::size_t d = 0; d < decisions; ++d) {
    const std::size_t n = events.front().probabilities[d].size();
    std::string csv = "meta_step";
    for (std::size_t j = 0; j < n; ++j) csv += ",p" + std::to_string(j);
    csv += '\n';
    for (const EventRecord& e : events) {
      if (e.probabilities[d].size() != n) throw IoError("event log records disagree on decision sizes");
      csv += std::to_string(e.meta_step);
      for (double p : e.probabilities[d]) csv += "," + num(p);
      csv += '\n';
    }
    write_file_atomic(out_dir / ("decision_" + pad2(d) + ".csv"), csv);
  }

  std::string rewards = "meta_step,mean_reward,baseline\n";
  for (const EventRecord& e : events)
    rewards += std::to_string(e.meta_step) + "," + num(e.mean_reward) + "," + num(e.baseline) + "\n";
  write_file_atomic(out_dir / "rewards.csv", rewards);

  std::string summary = "decision,candidates,final_argmax,final_max_probability,final_entropy\n";
  const ProbabilityTable& last = events.back().probabilities;
  for (std::size_t d = 0; d < decisions; ++d) {
    std::size_t best = 0;
    double entropy = 0.0;
    for (std::size_t j = 0; j < last[d].size(); ++j) {
      if (last[d][j] > last[d][best]) best = j;
      if (last[d][j] > 0.0) entropy -= last[d][j] * std::log(last[d][j]);
    }
    summary += std::to_string(d) + "," + std::to_string(last[d].size()) + "," + std::to_string(best) + "," +
               num(last[d][best]) + "," + num(entropy) + "\n";
  }
  write_file_atomic(out_dir / "summary.csv", summary);
}

}  // namespace autohas
