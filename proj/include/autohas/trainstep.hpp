#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "autohas/rng.hpp"
#include "autohas/space.hpp"
#include "autohas/supernet.hpp"
#include "autohas/tensor.hpp"

// Turning a sampled hyperparameter basis into a concrete training step.
namespace autohas {

enum class OptimizerKind { sgd, momentum, adam, rmsprop };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct TrainerSpec {
  OptimizerKind optimizer = OptimizerKind::sgd;
  double learning_rate = 0.05;
  double weight_decay = 0.0;
  double mixup_ratio = 0.0;
  std::vector<double> dropout_keep;  // per layer, empty = 1 everywhere
  std::size_t inner_steps = 1;

  // Throws ValidationError on any out-of-range field.
  void validate() const;
};

// Values used for hyperparameters the space does not search.
struct TrainerDefaults {
  double learning_rate = 0.05;
  std::size_t inner_steps = 1;
};

TrainerSpec build_trainer(const SearchSpace& space, const CandidateSelection& selection,
                          const TrainerDefaults& defaults = {});
// Same mapping for a derived configuration; continuous values are used as is.
TrainerSpec trainer_from_derived(const SearchSpace& space, const DerivedConfig& derived,
                                 const TrainerDefaults& defaults = {});

struct Batch {
  Tensor features;  // (n x d)
  Tensor labels;    // (n x classes), rows on the simplex
};

// lambda ~ Beta(ratio, ratio) once per batch; each row is mixed with a
// random permutation partner. ratio == 0 returns the batch unchanged.
Batch apply_mixup(const Batch& batch, double ratio, RngStream& rng);
// x' = lambda x + (1 - lambda) x[partner], same for labels.
Batch mix_batch(const Batch& batch, double lambda, std::span<const std::size_t> partner);

// Per-key optimizer state. Each family's slots are created on first use and
// kept independently, so switching families does not clobber another's state.
struct OptimizerSlots {
  std::optional<Tensor> velocity;  // momentum
  std::optional<Tensor> adam_m;
  std::optional<Tensor> adam_v;
  std::uint64_t adam_t = 0;
  std::optional<Tensor> rms_sq;

  friend bool operator==(const OptimizerSlots&, const OptimizerSlots&) = default;
};

using SlotStore = std::map<ParamKey, OptimizerSlots>;

inline constexpr double kMomentum = 0.9;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;
inline constexpr double kRmsRho = 0.9;
inline constexpr double kRmsEps = 1e-8;

// Decoupled decay p <- p (1 - lr wd), then the selected update rule.
// Throws NumericsError on a non-finite gradient or mismatched shapes.
void optimizer_step(Tensor& param, const Tensor& grad, OptimizerSlots& slots, const TrainerSpec& spec);

// One mixup -> train-mode forward -> loss -> backward -> update pass over
// `params`, which must hold exactly the view's keys. Returns the loss.
double train_step(const SearchSpace& space, const SubModelView& view, ParamStore& params, SlotStore& slots,
                  const TrainerSpec& spec, const Batch& batch, RngStream& rng);

// Discardable copy of a sub-model after `spec.inner_steps` training steps
// with fresh optimizer state. Never aliases the shared store.
struct TemporaryWeights {
  ParamStore overrides;
  SlotStore slots;
};

TemporaryWeights make_temporary(const SearchSpace& space, const SuperModelWeights& weights, const SubModelView& view,
                                const TrainerSpec& spec, std::span<const Batch> train_batches, RngStream& rng);

// One training step written through `view` into the shared store, with
// optimizer state that persists in `slots` across commits.
double commit_step(const SearchSpace& space, SuperModelWeights& weights, const SubModelView& view,
                   const TrainerSpec& spec, const Batch& batch, SlotStore& slots, RngStream& rng);

}  // namespace autohas
