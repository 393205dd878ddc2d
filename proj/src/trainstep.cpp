#include "autohas/trainstep.hpp"

#include <cmath>
#include <string>

#include "autohas/error.hpp"

namespace autohas {

namespace {

void apply_hyper(TrainerSpec& spec, std::string_view name, const HyperValue& value) {
  if (name == "optimizer") {
    spec.optimizer = optimizer_from_string(std::get<std::string>(value));
    return;
  }
  const double x = std::get<double>(value);
  if (name == "learning_rate") {
    spec.learning_rate = x;
  } else if (name == "weight_decay") {
    spec.weight_decay = x;
  } else if (name == "mixup_ratio") {
    spec.mixup_ratio = x;
  } else if (name == "dropout_keep") {
    for (double& k : spec.dropout_keep) k = x;
  } else if (name.starts_with("dropout_keep.")) {
    const std::size_t layer = std::stoul(std::string(name.substr(13)));
    if (layer >= spec.dropout_keep.size()) throw ValidationError("dropout layer out of range: " + std::string(name));
    spec.dropout_keep[layer] = x;
  } else {
    throw ValidationError("unknown hyperparameter '" + std::string(name) + "'");
  }
}

TrainerSpec defaults_for(const SearchSpace& space, const TrainerDefaults& defaults) {
  TrainerSpec spec;
  spec.learning_rate = defaults.learning_rate;
  spec.inner_steps = defaults.inner_steps;
  spec.dropout_keep.assign(space.arch().size(), 1.0);
  return spec;
}

void require_same_shape(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw NumericsError("optimizer shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

Tensor& slot(std::optional<Tensor>& s, const Tensor& like) {
  if (!s) s = Tensor::zeros(like.shape());
  return *s;
}

}  // namespace

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::momentum: return "momentum";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::rmsprop: return "rmsprop";
  }
  return "?";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  for (OptimizerKind k : {OptimizerKind::sgd, OptimizerKind::momentum, OptimizerKind::adam, OptimizerKind::rmsprop})
    if (to_string(k) == name) return k;
  throw ValidationError("unknown optimizer '" + std::string(name) + "'");
}

void TrainerSpec::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("trainer " + what); };
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) fail("learning_rate must be finite and >= 0");
  if (!std::isfinite(weight_decay) || weight_decay < 0.0) fail("weight_decay must be finite and >= 0");
  if (!(mixup_ratio >= 0.0 && mixup_ratio <= 1.0)) fail("mixup_ratio must lie in [0, 1]");
  for (double k : dropout_keep)
    if (!(k > 0.0 && k <= 1.0)) fail("dropout_keep must lie in (0, 1]");
  if (inner_steps < 1) fail("inner_steps must be >= 1");
}

TrainerSpec build_trainer(const SearchSpace& space, const CandidateSelection& selection,
                          const TrainerDefaults& defaults) {
  validate_selection(space, selection);
  TrainerSpec spec = defaults_for(space, defaults);
  const std::size_t layers = space.arch().size();
  for (std::size_t h = 0; h < space.hyper().size(); ++h) {
    const HyperDecision& hd = space.hyper()[h];
    apply_hyper(spec, hd.name, hd.basis[selection.indices[layers + h]]);
  }
  spec.validate();
  return spec;
}

TrainerSpec trainer_from_derived(const SearchSpace& space, const DerivedConfig& derived,
                                 const TrainerDefaults& defaults) {
  TrainerSpec spec = defaults_for(space, defaults);
  for (const auto& [name, value] : derived.hyper_values) apply_hyper(spec, name, value);
  spec.validate();
  return spec;
}

Batch mix_batch(const Batch& batch, double lambda, std::span<const std::size_t> partner) {
  const std::size_t n = batch.features.rows();
  if (partner.size() != n) throw NumericsError("mixup partner list has wrong length");
  auto mix = [&](const Tensor& t) {
    const std::size_t cols = t.cols();
    std::vector<double> out(t.size());
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        out[r * cols + c] = lambda * t.at(r, c) + (1.0 - lambda) * t.at(partner[r], c);
    return Tensor(t.shape(), std::move(out));
  };
  return Batch{mix(batch.features), mix(batch.labels)};
}

Batch apply_mixup(const Batch& batch, double ratio, RngStream& rng) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ValidationError("mixup ratio must lie in [0, 1]");
  if (ratio == 0.0) return batch;
  const double lambda = rng.beta(ratio, ratio);
  const std::vector<std::size_t> partner = rng.permutation(batch.features.rows());
  return mix_batch(batch, lambda, partner);
}

void optimizer_step(Tensor& param, const Tensor& grad, OptimizerSlots& slots, const TrainerSpec& spec) {
  require_same_shape(param, grad);
  grad.require_finite("gradient");
  const double lr = spec.learning_rate;
  auto p = param.mutable_values();
  auto g = grad.values();

  if (spec.weight_decay != 0.0) {
    const double shrink = 1.0 - lr * spec.weight_decay;
    for (double& v : p) v *= shrink;
  }

  switch (spec.optimizer) {
    case OptimizerKind::sgd:
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
      break;
    case OptimizerKind::momentum: {
      auto v = slot(slots.velocity, param).mutable_values();
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = kMomentum * v[i] + g[i];
        p[i] -= lr * v[i];
      }
      break;
    }
    case OptimizerKind::adam: {
      auto m = slot(slots.adam_m, param).mutable_values();
      auto v = slot(slots.adam_v, param).mutable_values();
      const auto t = static_cast<double>(++slots.adam_t);
      const double c1 = 1.0 - std::pow(kAdamBeta1, t);
      const double c2 = 1.0 - std::pow(kAdamBeta2, t);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g[i];
        v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kAdamEps);
      }
      break;
    }
    case OptimizerKind::rmsprop: {
      auto s = slot(slots.rms_sq, param).mutable_values();
      for (std::size_t i = 0; i < p.size(); ++i) {
        s[i] = kRmsRho * s[i] + (1.0 - kRmsRho) * g[i] * g[i];
        p[i] -= lr * g[i] / (std::sqrt(s[i]) + kRmsEps);
      }
      break;
    }
  }
  param.require_finite("optimizer update");
}

double train_step(const SearchSpace& space, const SubModelView& view, ParamStore& params, SlotStore& slots,
                  const TrainerSpec& spec, const Batch& batch, RngStream& rng) {
  const Batch mixed = apply_mixup(batch, spec.mixup_ratio, rng);

  ad::Tape tape;
  const BoundParams bound = bind_parameters(tape, view, ParamLookup(params));
  ForwardOptions options{ForwardMode::train, spec.dropout_keep, &rng};
  const ad::Var logits = forward(tape, space, bound, view.selection, tape.constant(mixed.features), options);
  const ad::Var loss = ad::softmax_cross_entropy(logits, mixed.labels);
  const ad::Gradients grads = tape.backward(loss);

  for (const auto& [key, var] : bound) {
    auto it = params.find(key);
    if (it == params.end()) throw ValidationError("train_step: parameter " + key.str() + " not in the working set");
    optimizer_step(it->second, grads.of(var), slots[key], spec);
  }
  return loss.value().item();
}

TemporaryWeights make_temporary(const SearchSpace& space, const SuperModelWeights& weights, const SubModelView& view,
                                const TrainerSpec& spec, std::span<const Batch> train_batches, RngStream& rng) {
  if (train_batches.size() < spec.inner_steps)
    throw ValidationError("make_temporary needs " + std::to_string(spec.inner_steps) + " train batches, got " +
                          std::to_string(train_batches.size()));
  TemporaryWeights tmp;
  for (const ParamKey& k : view.all_keys()) tmp.overrides.emplace(k, weights.store.at(k));
  for (std::size_t s = 0; s < spec.inner_steps; ++s)
    train_step(space, view, tmp.overrides, tmp.slots, spec, train_batches[s], rng);
  return tmp;
}

double commit_step(const SearchSpace& space, SuperModelWeights& weights, const SubModelView& view,
                   const TrainerSpec& spec, const Batch& batch, SlotStore& slots, RngStream& rng) {
  ParamStore working;
  for (const ParamKey& k : view.all_keys()) working.emplace(k, weights.store.at(k));
  const double loss = train_step(space, view, working, slots, spec, batch, rng);
  for (auto& [k, t] : working) weights.store.at(k) = std::move(t);
  return loss;
}

}  // namespace autohas
