#include "autohas/engine.hpp"

#include <chrono>
#include <cmath>
#include <exception>

#include "autohas/error.hpp"

namespace autohas {

namespace {

RngStream eval_stream(const SearchOptions& o, std::uint64_t meta_step, std::size_t index) {
  return RngStream(o.seed, "eval").child(meta_step).child(index);
}

RngStream commit_stream(const SearchOptions& o, std::uint64_t meta_step, std::size_t index) {
  return RngStream(o.seed, "commit").child(meta_step).child(index);
}

double mean_loss(const Tensor& logits, const Tensor& labels) {
  ad::Tape tape;
  return ad::softmax_cross_entropy(tape.constant(logits), labels).value().item();
}

}  // namespace

void RewardParams::validate() const {
  if (mode == RewardMode::plain) return;
  if (!std::isfinite(beta) || beta > 0.0) throw ValidationError("cost-aware reward needs beta <= 0");
  if (!(target_cost > 0.0) || !std::isfinite(target_cost)) throw ValidationError("cost-aware reward needs target_cost > 0");
}

double compute_reward(double accuracy, double cost, const RewardParams& params) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) throw ValidationError("accuracy must lie in [0, 1]");
  if (!(cost >= 0.0) || !std::isfinite(cost)) throw ValidationError("cost must be finite and >= 0");
  params.validate();
  if (params.mode == RewardMode::plain) return accuracy;
  return accuracy + params.beta * std::abs(cost / params.target_cost - 1.0);
}

double accuracy(const Tensor& logits, const Tensor& labels) {
  if (logits.shape() != labels.shape() || logits.rank() != 2) throw NumericsError("accuracy: shape mismatch");
  const std::size_t rows = logits.rows(), cols = logits.cols();
  std::size_t correct = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t pred = 0, truth = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (logits.at(r, c) > logits.at(r, pred)) pred = c;
      if (labels.at(r, c) > labels.at(r, truth)) truth = c;
    }
    if (pred == truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows);
}

RewardRecord evaluate_candidate(const SearchSpace& space, const SuperModelWeights& weights,
                                const CandidateSelection& selection, std::span<const Batch> train_batches,
                                const Batch& val_batch, RngStream& rng, const TrainerDefaults& defaults,
                                const RewardParams& reward) {
  const TrainerSpec spec = build_trainer(space, selection, defaults);
  const SubModelView view = sub_view(space, weights, selection);
  const TemporaryWeights tmp = make_temporary(space, weights, view, spec, train_batches, rng);
  const Tensor logits = predict(space, ParamLookup(weights.store, &tmp.overrides), selection, val_batch.features);

  RewardRecord rec;
  rec.selection = selection;
  rec.accuracy = accuracy(logits, val_batch.labels);
  rec.cost = static_cast<double>(cost(space, selection).total());
  rec.reward = compute_reward(rec.accuracy, rec.cost, reward);
  return rec;
}

void SearchOptions::validate() const {
  if (pairs_per_step < 1) throw ValidationError("pairs_per_step must be >= 1");
  if (train_batch_size < 1 || val_batch_size < 1) throw ValidationError("batch sizes must be >= 1");
  if (trainer.inner_steps < 1) throw ValidationError("inner_steps must be >= 1");
  if (!std::isfinite(trainer.learning_rate) || trainer.learning_rate < 0.0)
    throw ValidationError("default learning rate must be >= 0");
  meta.validate();
  reward.validate();
}

SupernetBackend::SupernetBackend(const SearchSpace& space, const DataSplit& data, const SearchOptions& options)
    : space_(space),
      data_(data),
      options_(options),
      weights_(init_weights(space, RngStream(options.seed, "init"))) {
  if (data.train.width() != space.input_width() || data.train.classes() != space.classes())
    throw ValidationError("data does not match the search space's input width or class count");
}

RewardRecord SupernetBackend::evaluate(const CandidateSelection& selection, std::uint64_t meta_step,
                                       std::size_t index) const {
  RngStream rng = eval_stream(options_, meta_step, index);
  std::vector<Batch> train;
  for (std::size_t s = 0; s < options_.trainer.inner_steps; ++s)
    train.push_back(sample_batch(data_.train, options_.train_batch_size, rng));
  const Batch val = sample_batch(data_.val, options_.val_batch_size, rng);
  RewardRecord rec = evaluate_candidate(space_, weights_, selection, train, val, rng, options_.trainer, options_.reward);
  rec.meta_step = meta_step;
  return rec;
}

void SupernetBackend::commit(const CandidateSelection& selection, std::uint64_t meta_step, std::size_t index,
                             std::size_t pairs) {
  RngStream rng = commit_stream(options_, meta_step, index);
  TrainerSpec spec = build_trainer(space_, selection, options_.trainer);
  spec.learning_rate /= static_cast<double>(pairs);
  const Batch batch = sample_batch(data_.train, options_.train_batch_size, rng);
  commit_step(space_, weights_, sub_view(space_, weights_, selection), spec, batch, commit_slots_, rng);
}

RewardRecord TabularBackend::evaluate(const CandidateSelection& selection, std::uint64_t meta_step,
                                      std::size_t /*index*/) const {
  RewardRecord rec;
  rec.meta_step = meta_step;
  rec.selection = selection;
  rec.accuracy = accuracy_(selection);
  rec.cost = cost_ ? cost_(selection) : 0.0;
  rec.reward = compute_reward(rec.accuracy, rec.cost, reward_);
  return rec;
}

SearchState init_search_state(const SearchSpace& space, const SearchOptions& options) {
  SearchState s;
  s.controller = init_controller(space, options.seed);
  s.controller_rng = RngStream(options.seed, "controller");
  return s;
}

EventRecord run_meta_step(const SearchSpace& space, SearchState& state, CandidateBackend& backend,
                          const SearchOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  MetaHyperparameters meta = options.meta;
  meta.total_meta_steps = options.total_meta_steps;
  const std::uint64_t step = state.next_meta_step;
  const std::size_t k = options.pairs_per_step;
  const std::size_t uniform_prefix = in_warmup(state.controller, meta) ? space.arch().size() : 0;

  // Controller phase: rewards from temporary weights.
  std::vector<CandidateSelection> picks;
  for (std::size_t i = 0; i < k; ++i)
    picks.push_back(sample(state.controller, state.controller_rng, uniform_prefix).selection);

  const std::uint64_t digest_before = options.verify_isolation ? backend.digest() : 0;
  std::vector<RewardRecord> records(k);
  std::vector<std::exception_ptr> errors(k);
  const auto n = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(static) if (options.parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      records[i] = backend.evaluate(picks[i], step, static_cast<std::size_t>(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  if (options.verify_isolation && backend.digest() != digest_before)
    throw Error("shared store changed during the controller phase");

  const double pre_baseline = state.controller.baseline_initialized ? state.controller.baseline : records[0].reward;
  std::vector<ScoredSample> scored;
  double mean_reward = 0.0;
  for (RewardRecord& r : records) {
    r.baseline = pre_baseline;
    scored.push_back(ScoredSample{r.selection, r.reward});
    mean_reward += r.reward;
  }
  mean_reward /= static_cast<double>(k);
  state.controller = reinforce_update(std::move(state.controller), scored, meta);

  // Weight phase: fresh samples, committed in order.
  const std::size_t commit_prefix = in_warmup(state.controller, meta) ? space.arch().size() : 0;
  for (std::size_t i = 0; i < k; ++i) {
    const CandidateSelection pick = sample(state.controller, state.controller_rng, commit_prefix).selection;
    backend.commit(pick, step, i, k);
  }

  state.reward_history.insert(state.reward_history.end(), records.begin(), records.end());
  state.next_meta_step = step + 1;

  EventRecord ev;
  ev.meta_step = step;
  ev.mean_reward = mean_reward;
  ev.baseline = state.controller.baseline;
  ev.probabilities = probabilities(state.controller);
  ev.store_digest = backend.digest();
  ev.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return ev;
}

SearchResult make_result(const SearchSpace& space, const SearchState& state, std::uint64_t digest) {
  SearchResult r;
  r.final_probabilities = probabilities(state.controller);
  r.derived = derive(space, r.final_probabilities);
  r.reward_history = state.reward_history;
  r.wall_steps = state.next_meta_step;
  r.store_digest = digest;
  return r;
}

SearchResult run_search(const SearchSpace& space, SearchState& state, CandidateBackend& backend,
                        const SearchOptions& options, const EventSink& sink) {
  options.validate();
  while (state.next_meta_step < options.total_meta_steps) {
    const EventRecord ev = run_meta_step(space, state, backend, options);
    if (sink) sink(ev, state);
  }
  return make_result(space, state, backend.digest());
}

RetrainResult retrain(const SearchSpace& space, const DerivedConfig& derived, const DataSplit& data,
                      const RetrainOptions& options) {
  if (options.batch_size == 0) throw ValidationError("retrain batch size must be >= 1");
  SearchSpace arch = restrict_architecture(space, derived.arch_choice);
  TrainerSpec spec = trainer_from_derived(arch, derived, options.trainer);
  const RngStream base(options.seed, "retrain");

  SuperModelWeights initial = init_weights(arch, base.child("init"));
  SuperModelWeights weights = initial;
  const CandidateSelection selection{std::vector<std::size_t>(arch.arch().size(), 0)};
  const SubModelView view = sub_view(arch, weights, selection);
  const Dataset fit = options.include_val ? concat(data.train, data.val) : data.train;

  SlotStore slots;
  double last_epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    RngStream rng = base.child("epoch").child(epoch);
    const std::vector<std::size_t> order = rng.permutation(fit.size());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      loss_sum += commit_step(arch, weights, view, spec, as_batch(subset(fit, rows)), slots, rng);
      ++batches;
    }
    last_epoch_loss = batches ? loss_sum / static_cast<double>(batches) : 0.0;
  }

  const ParamLookup lookup(weights.store);
  RetrainMetrics m;
  m.train_loss = last_epoch_loss;
  m.val_accuracy = accuracy(predict(arch, lookup, selection, data.val.features), data.val.labels);
  const Tensor test_logits = predict(arch, lookup, selection, data.test.features);
  m.test_accuracy = accuracy(test_logits, data.test.labels);
  m.test_loss = mean_loss(test_logits, data.test.labels);
  return RetrainResult{std::move(arch), std::move(weights), std::move(initial), std::move(spec), m};
}

RandomSearchReport random_search_baseline(const SearchSpace& space, const DataSplit& data, std::size_t budget,
                                          const RetrainOptions& options, std::uint64_t seed) {
  if (budget < 1) throw ValidationError("random search budget must be >= 1");
  RandomSearchReport report;
  const RngStream base(seed, "random_search");
  for (std::size_t t = 0; t < budget; ++t) {
    RngStream rng = base.child(t);
    RandomTrial trial;
    for (std::size_t d = 0; d < space.decision_count(); ++d) trial.selection.indices.push_back(rng.below(space.cardinality(d)));
    trial.config = config_from_selection(space, trial.selection);
    RetrainOptions opts = options;
    opts.seed = rng.next_u64();
    trial.metrics = retrain(space, trial.config, data, opts).metrics;
    if (trial.metrics.val_accuracy > (report.trials.empty() ? -1.0 : report.best_trial().metrics.val_accuracy))
      report.best = t;
    report.trials.push_back(std::move(trial));
  }
  return report;
}

}  // namespace autohas
