#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "autohas/space.hpp"

// Independent multinomial distributions over every decision, trained with
// REINFORCE against a moving-average reward baseline.
namespace autohas {

using LogitTable = std::vector<std::vector<double>>;

struct MetaHyperparameters {
  double meta_lr = 0.05;
  double baseline_momentum = 0.95;
  double warmup_fraction = 0.3;
  std::uint64_t total_meta_steps = 0;
  double entropy_weight = 0.0;

  void validate() const;
};

struct ControllerState {
  LogitTable logits;
  double baseline = 0.0;
  bool baseline_initialized = false;
  std::uint64_t step = 0;
  // Adam state of the meta-optimizer, shaped like `logits`.
  LogitTable adam_m;
  LogitTable adam_v;
  std::uint64_t adam_t = 0;

  friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

// All logits zero, i.e. uniform distributions. The seed does not influence
// the initial state; it is accepted so every component is seeded uniformly.
ControllerState init_controller(const SearchSpace& space, std::uint64_t seed = 0);
ControllerState init_controller(const std::vector<std::size_t>& cardinalities);

ProbabilityTable probabilities(const ControllerState& state);

bool in_warmup(const ControllerState& state, const MetaHyperparameters& meta);

template <class T>
concept UniformSource = requires(T& source) {
  { source.uniform() } -> std::convertible_to<double>;
};

struct Sample {
  CandidateSelection selection;
  double log_prob = 0.0;  // under the controller's distributions
};

// Inverse-CDF draw of one candidate from `p` given u in [0, 1).
std::size_t inverse_cdf(const std::vector<double>& p, double u);

// Draws each decision independently. The first `uniform_prefix` decisions
// are drawn uniformly instead (architecture warm-up); the reported
// log-probability is always under the controller's distributions.
template <UniformSource Rng>
Sample sample(const ControllerState& state, Rng& rng, std::size_t uniform_prefix = 0) {
  const ProbabilityTable probs = probabilities(state);
  Sample out;
  out.selection.indices.reserve(probs.size());
  for (std::size_t d = 0; d < probs.size(); ++d) {
    const double u = static_cast<double>(rng.uniform());
    std::size_t idx;
    if (d < uniform_prefix) {
      idx = std::min(static_cast<std::size_t>(u * static_cast<double>(probs[d].size())), probs[d].size() - 1);
    } else {
      idx = inverse_cdf(probs[d], u);
    }
    out.selection.indices.push_back(idx);
    out.log_prob += std::log(probs[d][idx]);
  }
  return out;
}

struct ScoredSample {
  CandidateSelection selection;
  double reward = 0.0;
};

// Gradient of the surrogate loss -(1/K) sum_i (r_i - baseline) log p(s_i)
// with respect to the logits.
LogitTable policy_loss_gradient(const ControllerState& state, std::span<const ScoredSample> samples, double baseline);

// One REINFORCE step: advantages against the pre-update baseline, one Adam
// step on the logits (skipped during warm-up), then the baseline absorbs
// each reward in order. The first reward ever seen initialises the baseline.
ControllerState reinforce_update(ControllerState state, std::span<const ScoredSample> samples,
                                 const MetaHyperparameters& meta);

using RewardFn = std::function<double(const CandidateSelection&)>;

// Exact gradient of E[reward] with respect to the logits, by enumerating the
// whole space. Uses d E / d z_dj = p_dj (E[r | s_d = j] - E[r]).
// Throws ValidationError when the space has more than 10^6 selections.
LogitTable expected_reward_gradient_oracle(const ControllerState& state, const RewardFn& reward);

// Calls `fn` on every selection of the space described by `cardinalities`,
// in lexicographic order.
void for_each_selection(const std::vector<std::size_t>& cardinalities,
                        const std::function<void(const CandidateSelection&)>& fn);

}  // namespace autohas
