#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "autohas/data.hpp"
#include "autohas/rng.hpp"
#include "autohas/space.hpp"
#include "autohas/trainstep.hpp"

// Hand-rolled generators shared by the property tests and the acceptance
// binary. Everything is driven by a named RngStream, so a failing case is
// reproduced by its seed alone.
namespace autohas::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed, std::string name = "gen") : rng_(seed, std::move(name)) {}

  // Inclusive range.
  std::size_t range(std::size_t lo, std::size_t hi) { return lo + rng_.below(hi - lo + 1); }
  double real(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  bool coin(double p = 0.5) { return rng_.uniform() < p; }
  double normal() { return rng_.normal(); }
  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[rng_.below(items.size())];
  }
  RngStream& stream() { return rng_; }

 private:
  RngStream rng_;
};

inline OperationSpec random_op(Gen& g) {
  static const std::vector<OpKind> kinds{OpKind::identity, OpKind::affine, OpKind::affine_relu, OpKind::affine_tanh};
  OperationSpec op;
  op.kind = g.pick(kinds);
  op.width = op.has_params() ? g.range(1, 6) : 0;
  return op;
}

inline std::vector<double> increasing_basis(Gen& g, std::size_t count, double lo, double hi) {
  std::vector<double> v;
  double x = g.real(lo, hi);
  for (std::size_t i = 0; i < count; ++i) {
    v.push_back(x);
    x *= g.real(1.5, 4.0);
  }
  return v;
}

inline HyperConfig real_hyper(const std::string& name, const std::vector<double>& values) {
  HyperConfig h;
  h.name = name;
  h.kind = HyperKind::continuous;
  for (double v : values) h.basis.emplace_back(v);
  return h;
}

inline HyperConfig symbol_hyper(const std::string& name, const std::vector<std::string>& values) {
  HyperConfig h;
  h.name = name;
  h.kind = HyperKind::categorical;
  for (const auto& v : values) h.basis.emplace_back(v);
  return h;
}

// 1..3 layers of 1..4 random candidates (zero-padded when widths differ)
// and a random subset of the searchable hyperparameters.
inline SpaceConfig random_space_config(Gen& g, std::size_t input_width, std::size_t classes) {
  SpaceConfig cfg;
  cfg.input_width = input_width;
  cfg.classes = classes;
  std::size_t in = input_width;
  const std::size_t layers = g.range(1, 3);
  for (std::size_t l = 0; l < layers; ++l) {
    LayerConfig layer;
    const std::size_t n = g.range(1, 4);
    std::size_t widest = 0;
    bool uniform = true;
    for (std::size_t i = 0; i < n; ++i) {
      layer.candidates.push_back(random_op(g));
      const std::size_t w = layer.candidates.back().native_width(in);
      if (i > 0 && w != widest) uniform = false;
      widest = std::max(widest, w);
    }
    if (!uniform || g.coin(0.2)) {
      layer.adapter = ShapeAdapter::zero_pad;
      layer.width = widest + (g.coin(0.3) ? 1 : 0);
    }
    in = layer.width.value_or(widest);
    cfg.layers.push_back(layer);
  }

  if (g.coin(0.7)) cfg.hyperparameters.push_back(real_hyper("learning_rate", increasing_basis(g, g.range(1, 4), 0.001, 0.05)));
  if (g.coin(0.5)) cfg.hyperparameters.push_back(real_hyper("weight_decay", increasing_basis(g, g.range(1, 3), 1e-4, 1e-2)));
  if (g.coin(0.5)) cfg.hyperparameters.push_back(real_hyper("mixup_ratio", {0.0, 0.2, 0.5}));
  if (g.coin(0.5)) {
    std::vector<std::string> all{"sgd", "momentum", "adam", "rmsprop"};
    std::vector<std::string> chosen;
    for (const auto& s : all)
      if (g.coin()) chosen.push_back(s);
    if (chosen.empty()) chosen.push_back("sgd");
    cfg.hyperparameters.push_back(symbol_hyper("optimizer", chosen));
  }
  if (g.coin(0.4)) cfg.hyperparameters.push_back(real_hyper("dropout_keep", {0.5, 0.8, 1.0}));
  return cfg;
}

inline SearchSpace random_space(Gen& g) {
  return build_space(random_space_config(g, g.range(1, 4), g.range(2, 3)));
}

inline CandidateSelection random_selection(Gen& g, const SearchSpace& space) {
  CandidateSelection s;
  for (std::size_t d = 0; d < space.decision_count(); ++d) s.indices.push_back(g.range(0, space.cardinality(d) - 1));
  return s;
}

inline Batch random_batch(Gen& g, std::size_t rows, std::size_t width, std::size_t classes) {
  Tensor x({rows, width});
  Tensor y({rows, classes});
  for (double& v : x.mutable_values()) v = g.normal();
  for (std::size_t r = 0; r < rows; ++r) y.at(r, g.range(0, classes - 1)) = 1.0;
  return Batch{x, y};
}

// Layers of interchangeable identity candidates: a space whose decisions
// carry no weights at all, for table-driven searches.
inline SearchSpace tabular_space(std::size_t decisions, std::size_t candidates) {
  SpaceConfig cfg;
  cfg.input_width = 2;
  cfg.classes = 2;
  for (std::size_t d = 0; d < decisions; ++d) {
    LayerConfig layer;
    layer.candidates.assign(candidates, OperationSpec{OpKind::identity, 0});
    cfg.layers.push_back(layer);
  }
  return build_space(cfg);
}

// A random point on the simplex; with `ties`, some maxima are duplicated.
inline std::vector<double> random_simplex(Gen& g, std::size_t n, bool ties) {
  std::vector<double> p(n);
  for (double& v : p) v = -std::log(1.0 - g.real(0.0, 1.0));
  if (ties && n > 1) {
    const auto top = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    std::size_t other = g.range(0, n - 1);
    if (other == top) other = (top + 1) % n;
    p[other] = p[top];
  }
  double total = 0.0;
  for (double v : p) total += v;
  for (double& v : p) v /= total;
  return p;
}

}  // namespace autohas::testing
