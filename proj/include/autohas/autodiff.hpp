#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autohas/rng.hpp"
#include "autohas/tensor.hpp"

// Minimal reverse-mode automatic differentiation over dense tensors.
//
// A Tape records every operation in execution order. backward() walks the
// records in exact reverse order and accumulates input gradients in the
// order each backward rule returns them, so for a fixed tape the gradients
// are bitwise reproducible.
namespace autohas::ad {

class Tape;

// Handle to a node on a tape. The tape must outlive (and not move under)
// every Var that refers to it.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Gradients {
 public:
  Gradients(std::vector<std::optional<Tensor>> grads, std::vector<Shape> shapes)
      : grads_(std::move(grads)), shapes_(std::move(shapes)) {}

  // Gradient of the loss with respect to `v`; zeros when `v` did not
  // contribute to the loss.
  Tensor of(Var v) const;
  bool reached(Var v) const { return grads_.at(v.id).has_value(); }

 private:
  std::vector<std::optional<Tensor>> grads_;
  std::vector<Shape> shapes_;
};

class Tape {
 public:
  // Maps the gradient of a node's output to one gradient per input, in the
  // same order as the inputs were given to record().
  using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor value);
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  std::size_t size() const { return nodes_.size(); }
  bool is_parameter(Var v) const { return nodes_.at(v.id).parameter; }

  // Throws NumericsError unless `loss` holds exactly one element.
  Gradients backward(Var loss) const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool parameter = false;
  };
  void check_owner(Var v) const;

  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add_bias(Var x, Var bias);  // x: (rows x n), bias: (n)
Var add(Var a, Var b);
Var mul(Var a, Var b);          // elementwise
Var scale(Var x, double factor);
Var sum(Var x);                 // scalar
Var relu(Var x);
Var tanh(Var x);
// Inverted dropout: survivors are scaled by 1/keep_prob. keep_prob == 1
// returns `x` itself.
Var dropout(Var x, double keep_prob, RngStream& rng);
// Right-pads each row with zeros up to `width` columns. Returns `x` when the
// width already matches.
Var zero_pad(Var x, std::size_t width);
// Mean over rows of -sum_c y_c log softmax(z)_c. Label rows must lie on the
// probability simplex (tolerance 1e-6).
Var softmax_cross_entropy(Var logits, const Tensor& soft_labels);

// Row-wise softmax of a plain tensor (no taping).
Tensor softmax_rows(const Tensor& logits);

// Builds a scalar on a fresh tape from parameter leaves holding `params`.
using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

// Compares backward() against central differences with step `eps` and
// returns the largest entrywise |a-b| / max(|a|, |b|, 1e-8).
// Throws NumericsError when eps is not positive.
double finite_difference_check(const ScalarFn& fn, const std::vector<Tensor>& params, double eps);

}  // namespace autohas::ad
