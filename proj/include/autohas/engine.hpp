#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "autohas/controller.hpp"
#include "autohas/data.hpp"
#include "autohas/rng.hpp"
#include "autohas/space.hpp"
#include "autohas/supernet.hpp"
#include "autohas/trainstep.hpp"

namespace autohas {

enum class RewardMode { plain, cost_aware };

struct RewardParams {
  RewardMode mode = RewardMode::plain;
  double beta = 0.0;         // <= 0
  double target_cost = 0.0;  // > 0 in cost-aware mode

  void validate() const;
};

// plain: accuracy. cost_aware: accuracy + beta * |cost / target - 1|.
double compute_reward(double accuracy, double cost, const RewardParams& params);

// Fraction of rows whose logit argmax matches the label argmax.
double accuracy(const Tensor& logits, const Tensor& labels);

struct RewardRecord {
  std::uint64_t meta_step = 0;
  CandidateSelection selection;
  double accuracy = 0.0;
  double cost = 0.0;
  double reward = 0.0;
  double baseline = 0.0;  // baseline the advantage was taken against

  friend bool operator==(const RewardRecord&, const RewardRecord&) = default;
};

// Scores (architecture, hyperparameters) with temporary weights: trains a
// copy of the sub-model on `train_batches`, then measures eval-mode accuracy
// on `val_batch`. The shared store is only read.
RewardRecord evaluate_candidate(const SearchSpace& space, const SuperModelWeights& weights,
                                const CandidateSelection& selection, std::span<const Batch> train_batches,
                                const Batch& val_batch, RngStream& rng, const TrainerDefaults& defaults,
                                const RewardParams& reward);

struct SearchOptions {
  std::uint64_t total_meta_steps = 100;
  std::size_t pairs_per_step = 4;  // K
  MetaHyperparameters meta;        // meta.total_meta_steps is kept in sync
  RewardParams reward;
  TrainerDefaults trainer;
  std::size_t train_batch_size = 64;
  std::size_t val_batch_size = 256;
  std::uint64_t seed = 0;
  bool parallel = true;            // evaluate the K candidates concurrently
  bool verify_isolation = false;   // check the store digest across the controller phase

  void validate() const;
};

// Where candidate quality comes from. evaluate() may run concurrently for
// distinct indices and must not modify shared state; commit() is serialized.
class CandidateBackend {
 public:
  virtual ~CandidateBackend() = default;
  virtual RewardRecord evaluate(const CandidateSelection& selection, std::uint64_t meta_step,
                                std::size_t index) const = 0;
  virtual void commit(const CandidateSelection& selection, std::uint64_t meta_step, std::size_t index,
                      std::size_t pairs) = 0;
  virtual std::uint64_t digest() const = 0;
};

// The weight-sharing super-model trained on a data split.
class SupernetBackend final : public CandidateBackend {
 public:
  SupernetBackend(const SearchSpace& space, const DataSplit& data, const SearchOptions& options);

  RewardRecord evaluate(const CandidateSelection& selection, std::uint64_t meta_step,
                        std::size_t index) const override;
  // One commit step with the sampled f_h at learning rate lr / pairs.
  void commit(const CandidateSelection& selection, std::uint64_t meta_step, std::size_t index,
              std::size_t pairs) override;
  std::uint64_t digest() const override { return store_digest(weights_.store); }

  SuperModelWeights& weights() { return weights_; }
  const SuperModelWeights& weights() const { return weights_; }
  SlotStore& commit_slots() { return commit_slots_; }
  const SlotStore& commit_slots() const { return commit_slots_; }

 private:
  SearchSpace space_;
  DataSplit data_;
  SearchOptions options_;
  SuperModelWeights weights_;
  SlotStore commit_slots_;
};

// Looks candidates up in a table instead of training anything.
class TabularBackend final : public CandidateBackend {
 public:
  using Table = std::function<double(const CandidateSelection&)>;
  TabularBackend(Table accuracy, Table cost, RewardParams reward)
      : accuracy_(std::move(accuracy)), cost_(std::move(cost)), reward_(reward) {}

  RewardRecord evaluate(const CandidateSelection& selection, std::uint64_t meta_step,
                        std::size_t index) const override;
  void commit(const CandidateSelection&, std::uint64_t, std::size_t, std::size_t) override {}
  std::uint64_t digest() const override { return 0; }

 private:
  Table accuracy_;
  Table cost_;
  RewardParams reward_;
};

struct EventRecord {
  std::uint64_t meta_step = 0;
  double mean_reward = 0.0;
  double baseline = 0.0;
  ProbabilityTable probabilities;
  std::uint64_t store_digest = 0;
  double wall_ms = 0.0;
};

// Everything about a search besides the backend that is needed to resume it.
struct SearchState {
  std::uint64_t next_meta_step = 0;
  ControllerState controller;
  RngStream controller_rng{0, "controller"};
  std::vector<RewardRecord> reward_history;
};

SearchState init_search_state(const SearchSpace& space, const SearchOptions& options);

// One meta-step: sample K pairs and score them (possibly in parallel), one
// REINFORCE update, then K fresh samples committed to the backend in order.
EventRecord run_meta_step(const SearchSpace& space, SearchState& state, CandidateBackend& backend,
                          const SearchOptions& options);

struct SearchResult {
  DerivedConfig derived;
  ProbabilityTable final_probabilities;
  std::vector<RewardRecord> reward_history;
  std::uint64_t wall_steps = 0;
  std::uint64_t store_digest = 0;
};

SearchResult make_result(const SearchSpace& space, const SearchState& state, std::uint64_t digest);

using EventSink = std::function<void(const EventRecord&, const SearchState&)>;

// Runs meta-steps until options.total_meta_steps, starting from `state`.
SearchResult run_search(const SearchSpace& space, SearchState& state, CandidateBackend& backend,
                        const SearchOptions& options, const EventSink& sink = {});

struct RetrainOptions {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  bool include_val = true;  // fit on train + val
  std::uint64_t seed = 0;
  TrainerDefaults trainer;
};

struct RetrainMetrics {
  double train_loss = 0.0;  // mean minibatch loss of the final epoch
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double test_loss = 0.0;

  friend bool operator==(const RetrainMetrics&, const RetrainMetrics&) = default;
};

struct RetrainResult {
  SearchSpace space;  // the derived architecture alone
  SuperModelWeights weights;
  SuperModelWeights initial_weights;
  TrainerSpec trainer;
  RetrainMetrics metrics;
};

// Trains fresh weights for the derived architecture with the derived
// hyperparameter values for `epochs` passes.
RetrainResult retrain(const SearchSpace& space, const DerivedConfig& derived, const DataSplit& data,
                      const RetrainOptions& options);

struct RandomTrial {
  CandidateSelection selection;
  DerivedConfig config;
  RetrainMetrics metrics;
};

struct RandomSearchReport {
  std::vector<RandomTrial> trials;
  std::size_t best = 0;  // highest val accuracy, lowest index on ties

  const RandomTrial& best_trial() const { return trials.at(best); }
};

// `budget` selections drawn uniformly, each trained from scratch on the
// train part and scored on val.
RandomSearchReport random_search_baseline(const SearchSpace& space, const DataSplit& data, std::size_t budget,
                                          const RetrainOptions& options, std::uint64_t seed);

}  // namespace autohas
