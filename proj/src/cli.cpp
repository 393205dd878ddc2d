#include "autohas/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <string_view>

#include "CLI11.hpp"

#include "autohas/error.hpp"
#include "autohas/persist.hpp"
#include "autohas/report.hpp"

namespace autohas {

namespace {

enum class Verbosity { quiet, info, debug };

Verbosity verbosity() {
  const char* env = std::getenv("AUTOHAS_LOG_LEVEL");
  if (!env) return Verbosity::info;
  const std::string_view v(env);
  if (v == "quiet") return Verbosity::quiet;
  if (v == "debug") return Verbosity::debug;
  return Verbosity::info;
}

void log(Verbosity level, const std::string& msg) {
  if (verbosity() >= level) std::cerr << "[autohas] " << msg << '\n';
}

struct Prepared {
  Dataset data;
  DataSplit split;
  SearchSpace space;
};

Prepared prepare(const EngineConfig& cfg) {
  Dataset data = load_dataset(cfg);
  DataSplit parts = split(data, cfg.data.fractions, cfg.seed);
  SearchSpace space = build_space_for(cfg, data);
  return Prepared{std::move(data), std::move(parts), std::move(space)};
}

nlohmann::ordered_json metrics_json(const RetrainMetrics& m) {
  nlohmann::ordered_json j;
  j["train_loss"] = m.train_loss;
  j["val_accuracy"] = m.val_accuracy;
  j["test_accuracy"] = m.test_accuracy;
  j["test_loss"] = m.test_loss;
  return j;
}

nlohmann::ordered_json trainer_json(const TrainerSpec& t) {
  nlohmann::ordered_json j;
  j["optimizer"] = std::string(to_string(t.optimizer));
  j["learning_rate"] = t.learning_rate;
  j["weight_decay"] = t.weight_decay;
  j["mixup_ratio"] = t.mixup_ratio;
  j["dropout_keep"] = t.dropout_keep;
  return j;
}

nlohmann::ordered_json config_json(const DerivedConfig& c) {
  nlohmann::ordered_json j;
  j["arch"] = c.arch_choice;
  nlohmann::ordered_json h = nlohmann::ordered_json::object();
  for (const auto& [name, v] : c.hyper_values) {
    if (const auto* s = std::get_if<std::string>(&v))
      h[name] = *s;
    else
      h[name] = std::get<double>(v);
  }
  j["hyperparameters"] = h;
  return j;
}

void emit(const nlohmann::ordered_json& j, const std::string& out) {
  const std::string text = j.dump(1) + "\n";
  if (out.empty())
    std::cout << text;
  else
    write_file_atomic(out, text);
}

int cmd_search(const std::string& config_path, const std::string& resume) {
  const EngineConfig cfg = load_config(config_path);
  SearchJobOptions opts;
  if (!resume.empty()) opts.resume = resume;
  const SearchResult r = run_search_job(cfg, opts);
  log(Verbosity::info, "search finished after " + std::to_string(r.wall_steps) + " meta-steps; result written to " +
                           cfg.output.result.string());
  return 0;
}

int cmd_retrain(const std::string& config_path, const std::string& result_path, const std::string& out) {
  const EngineConfig cfg = load_config(config_path);
  const Prepared p = prepare(cfg);
  nlohmann::ordered_json result;
  try {
    result = nlohmann::ordered_json::parse(read_file(result_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("result file " + result_path + " is not valid JSON: " + e.what());
  }
  const DerivedConfig derived = derived_from_result(result);
  const RetrainResult r = retrain(p.space, derived, p.split, cfg.retrain);

  nlohmann::ordered_json j;
  j["derived"] = config_json(derived);
  j["trainer"] = trainer_json(r.trainer);
  j["epochs"] = cfg.retrain.epochs;
  j["metrics"] = metrics_json(r.metrics);
  emit(j, out);
  return 0;
}

int cmd_baseline_random(const std::string& config_path, std::size_t budget, const std::string& out) {
  const EngineConfig cfg = load_config(config_path);
  const Prepared p = prepare(cfg);
  RetrainOptions opts = cfg.retrain;
  opts.include_val = false;
  const RandomSearchReport report = random_search_baseline(p.space, p.split, budget, opts, cfg.seed);

  nlohmann::ordered_json trials = nlohmann::ordered_json::array();
  for (const RandomTrial& t : report.trials) {
    nlohmann::ordered_json tj;
    tj["selection"] = t.selection.indices;
    tj["config"] = config_json(t.config);
    tj["metrics"] = metrics_json(t.metrics);
    trials.push_back(tj);
  }
  nlohmann::ordered_json j;
  j["budget"] = budget;
  j["best_trial"] = report.best;
  j["best"] = config_json(report.best_trial().config);
  j["trials"] = trials;
  emit(j, out);
  return 0;
}

int cmd_report(const std::string& log_path, const std::string& out_dir) {
  const std::vector<EventRecord> events = read_events(log_path);
  write_report(events, out_dir);
  log(Verbosity::info, "report for " + std::to_string(events.size()) + " meta-steps written to " + out_dir);
  return 0;
}

}  // namespace

SearchResult run_search_job(const EngineConfig& cfg, const SearchJobOptions& job) {
  const Prepared p = prepare(cfg);
  SupernetBackend backend(p.space, p.split, cfg.search);
  SearchState state = init_search_state(p.space, cfg.search);

  std::optional<EventLog> events;
  if (job.resume) {
    Checkpoint ckpt = load_checkpoint(*job.resume);
    if (ckpt.config != cfg.source) throw ValidationError("checkpoint " + job.resume->string() + " was written for a different config");
    backend.weights() = std::move(ckpt.weights);
    backend.commit_slots() = std::move(ckpt.commit_slots);
    state = std::move(ckpt.state);
    if (state.controller.logits.size() != p.space.decision_count())
      throw ValidationError("checkpoint controller does not match the search space");
    events.emplace(cfg.output.log, state.next_meta_step);
    log(Verbosity::info, "resuming at meta-step " + std::to_string(state.next_meta_step));
  } else {
    events.emplace(cfg.output.log);
  }

  auto checkpoint = [&] {
    save_checkpoint(cfg.output.checkpoint, Checkpoint{cfg.source, state, backend.weights(), backend.commit_slots()});
  };

  const std::uint64_t total = cfg.search.total_meta_steps;
  const std::uint64_t stop = job.stop_after ? std::min(*job.stop_after, total) : total;
  const std::uint64_t every = std::max<std::uint64_t>(1, total / 10);
  cfg.search.validate();
  while (state.next_meta_step < stop) {
    EventRecord ev = run_meta_step(p.space, state, backend, cfg.search);
    if (!cfg.output.record_timing) ev.wall_ms = 0.0;
    events->write(ev);
    const std::uint64_t done = state.next_meta_step;
    if (cfg.output.checkpoint_interval > 0 && done % cfg.output.checkpoint_interval == 0 && done < stop) checkpoint();
    if (done % every == 0 || verbosity() == Verbosity::debug)
      log(Verbosity::info, "meta-step " + std::to_string(done) + "/" + std::to_string(total) +
                               " mean reward " + std::to_string(ev.mean_reward) + " baseline " +
                               std::to_string(ev.baseline));
  }
  checkpoint();

  SearchResult result = make_result(p.space, state, backend.digest());
  if (state.next_meta_step == total) write_file_atomic(cfg.output.result, result_text(p.space, result));
  return result;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Joint architecture and hyperparameter search with a weight-sharing super-model"};
  app.require_subcommand(1);

  std::string config, resume, from_result, out, log_path, out_dir;
  std::size_t budget = 0;

  CLI::App* search = app.add_subcommand("search", "Run a search and write the result file");
  search->add_option("--config", config, "Engine config (JSON)")->required();
  search->add_option("--resume", resume, "Checkpoint to resume from");

  CLI::App* retrain_cmd = app.add_subcommand("retrain", "Retrain a derived configuration from scratch");
  retrain_cmd->add_option("--config", config, "Engine config (JSON)")->required();
  retrain_cmd->add_option("--from-result", from_result, "Result file written by search")->required();
  retrain_cmd->add_option("--out", out, "Write metrics here instead of stdout");

  CLI::App* baseline = app.add_subcommand("baseline", "Comparison baselines");
  baseline->require_subcommand(1);
  CLI::App* random = baseline->add_subcommand("random", "Random search, every trial trained from scratch");
  random->add_option("--config", config, "Engine config (JSON)")->required();
  random->add_option("--budget", budget, "Number of trials")->required()->check(CLI::PositiveNumber);
  random->add_option("--out", out, "Write the report here instead of stdout");

  CLI::App* report = app.add_subcommand("report", "Probability trajectories and summaries from an event log");
  report->add_option("--log", log_path, "Event log (JSONL)")->required();
  report->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*search) return cmd_search(config, resume);
    if (*retrain_cmd) return cmd_retrain(config, from_result, out);
    if (*random) return cmd_baseline_random(config, budget, out);
    if (*report) return cmd_report(log_path, out_dir);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace autohas
