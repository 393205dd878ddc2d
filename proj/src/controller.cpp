#include "autohas/controller.hpp"

#include <algorithm>

#include "autohas/error.hpp"

namespace autohas {

namespace {

constexpr double kMetaBeta1 = 0.9;
constexpr double kMetaBeta2 = 0.999;
constexpr double kMetaEps = 1e-8;
constexpr std::uint64_t kMaxEnumerable = 1000000;

std::vector<double> softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += (p[i] = std::exp(z[i] - mx));
  for (double& v : p) v /= total;
  return p;
}

LogitTable zeros_like(const LogitTable& t) {
  LogitTable out(t.size());
  for (std::size_t d = 0; d < t.size(); ++d) out[d].assign(t[d].size(), 0.0);
  return out;
}

std::vector<std::size_t> cardinalities_of(const ControllerState& state) {
  std::vector<std::size_t> c;
  for (const auto& z : state.logits) c.push_back(z.size());
  return c;
}

}  // namespace

void MetaHyperparameters::validate() const {
  if (!(meta_lr > 0.0) || !std::isfinite(meta_lr)) throw ValidationError("meta_lr must be positive");
  if (!(baseline_momentum >= 0.0 && baseline_momentum < 1.0))
    throw ValidationError("baseline_momentum must lie in [0, 1)");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) throw ValidationError("warmup_fraction must lie in [0, 1)");
  if (!std::isfinite(entropy_weight) || entropy_weight < 0.0) throw ValidationError("entropy_weight must be >= 0");
}

ControllerState init_controller(const std::vector<std::size_t>& cardinalities) {
  ControllerState s;
  for (std::size_t n : cardinalities) {
    if (n == 0) throw ValidationError("decision with no candidates");
    s.logits.emplace_back(n, 0.0);
  }
  s.adam_m = zeros_like(s.logits);
  s.adam_v = zeros_like(s.logits);
  return s;
}

ControllerState init_controller(const SearchSpace& space, std::uint64_t /*seed*/) {
  std::vector<std::size_t> c;
  for (std::size_t d = 0; d < space.decision_count(); ++d) c.push_back(space.cardinality(d));
  return init_controller(c);
}

ProbabilityTable probabilities(const ControllerState& state) {
  ProbabilityTable p;
  p.reserve(state.logits.size());
  for (const auto& z : state.logits) p.push_back(softmax(z));
  return p;
}

bool in_warmup(const ControllerState& state, const MetaHyperparameters& meta) {
  return static_cast<double>(state.step) < meta.warmup_fraction * static_cast<double>(meta.total_meta_steps);
}

std::size_t inverse_cdf(const std::vector<double>& p, double u) {
  double cum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    cum += p[i];
    if (u < cum) return i;
  }
  // u landed past the rounded total: take the last candidate with mass.
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return i;
  return p.size() - 1;
}

LogitTable policy_loss_gradient(const ControllerState& state, std::span<const ScoredSample> samples, double baseline) {
  if (samples.empty()) throw ValidationError("REINFORCE needs at least one sample");
  const ProbabilityTable probs = probabilities(state);
  LogitTable grad = zeros_like(state.logits);
  const double inv_k = 1.0 / static_cast<double>(samples.size());
  for (const ScoredSample& s : samples) {
    if (s.selection.indices.size() != probs.size()) throw ValidationError("sample does not match controller shape");
    const double advantage = s.reward - baseline;
    for (std::size_t d = 0; d < probs.size(); ++d) {
      const std::size_t chosen = s.selection.indices[d];
      if (chosen >= probs[d].size()) throw ValidationError("sample index out of range");
      // d log p(chosen) / d z_j = [j == chosen] - p_j
      for (std::size_t j = 0; j < probs[d].size(); ++j) {
        const double dlogp = (j == chosen ? 1.0 : 0.0) - probs[d][j];
        grad[d][j] -= inv_k * advantage * dlogp;
      }
    }
  }
  return grad;
}

ControllerState reinforce_update(ControllerState state, std::span<const ScoredSample> samples,
                                 const MetaHyperparameters& meta) {
  if (samples.empty()) throw ValidationError("REINFORCE needs at least one sample");
  for (const ScoredSample& s : samples)
    if (!std::isfinite(s.reward)) throw ValidationError("non-finite reward");

  const double baseline = state.baseline_initialized ? state.baseline : samples.front().reward;

  if (!in_warmup(state, meta)) {
    LogitTable grad = policy_loss_gradient(state, samples, baseline);
    if (meta.entropy_weight > 0.0) {
      // Loss gains -w H; dH/dz_j = -p_j (log p_j + H).
      const ProbabilityTable probs = probabilities(state);
      for (std::size_t d = 0; d < probs.size(); ++d) {
        double entropy = 0.0;
        for (double p : probs[d]) entropy -= p * std::log(p);
        for (std::size_t j = 0; j < probs[d].size(); ++j)
          grad[d][j] += meta.entropy_weight * probs[d][j] * (std::log(probs[d][j]) + entropy);
      }
    }
    const auto t = static_cast<double>(++state.adam_t);
    const double c1 = 1.0 - std::pow(kMetaBeta1, t);
    const double c2 = 1.0 - std::pow(kMetaBeta2, t);
    for (std::size_t d = 0; d < grad.size(); ++d) {
      for (std::size_t j = 0; j < grad[d].size(); ++j) {
        double& m = state.adam_m[d][j];
        double& v = state.adam_v[d][j];
        m = kMetaBeta1 * m + (1.0 - kMetaBeta1) * grad[d][j];
        v = kMetaBeta2 * v + (1.0 - kMetaBeta2) * grad[d][j] * grad[d][j];
        state.logits[d][j] -= meta.meta_lr * (m / c1) / (std::sqrt(v / c2) + kMetaEps);
      }
    }
  }

  for (const ScoredSample& s : samples) {
    if (!state.baseline_initialized) {
      state.baseline = s.reward;
      state.baseline_initialized = true;
    } else {
      // Incremental form: a reward equal to the baseline leaves it bitwise unchanged.
      state.baseline += (1.0 - meta.baseline_momentum) * (s.reward - state.baseline);
    }
  }
  ++state.step;
  return state;
}

void for_each_selection(const std::vector<std::size_t>& cardinalities,
                        const std::function<void(const CandidateSelection&)>& fn) {
  CandidateSelection sel;
  sel.indices.assign(cardinalities.size(), 0);
  for (std::size_t n : cardinalities)
    if (n == 0) return;
  for (;;) {
    fn(sel);
    std::size_t d = cardinalities.size();
    while (d > 0) {
      --d;
      if (++sel.indices[d] < cardinalities[d]) break;
      sel.indices[d] = 0;
      if (d == 0) return;
    }
    if (cardinalities.empty()) return;
  }
}

LogitTable expected_reward_gradient_oracle(const ControllerState& state, const RewardFn& reward) {
  const std::vector<std::size_t> card = cardinalities_of(state);
  std::uint64_t total = 1;
  for (std::size_t n : card) {
    total *= n;
    if (total > kMaxEnumerable) throw ValidationError("space too large to enumerate");
  }

  const ProbabilityTable probs = probabilities(state);
  LogitTable conditional = zeros_like(state.logits);  // sum of p(s) r(s) over s with s_d = j
  double expected = 0.0;
  for_each_selection(card, [&](const CandidateSelection& s) {
    double p = 1.0;
    for (std::size_t d = 0; d < card.size(); ++d) p *= probs[d][s.indices[d]];
    const double pr = p * reward(s);
    expected += pr;
    for (std::size_t d = 0; d < card.size(); ++d) conditional[d][s.indices[d]] += pr;
  });

  LogitTable grad = zeros_like(state.logits);
  for (std::size_t d = 0; d < card.size(); ++d)
    for (std::size_t j = 0; j < card[d]; ++j) grad[d][j] = conditional[d][j] - probs[d][j] * expected;
  return grad;
}

}  // namespace autohas
