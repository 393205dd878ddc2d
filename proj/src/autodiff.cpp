#include "autohas/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "autohas/error.hpp"
#include "autohas/kernels.hpp"

namespace autohas::ad {

namespace {

void accumulate(std::optional<Tensor>& slot, Tensor grad) {
  if (!slot) {
    slot = std::move(grad);
    return;
  }
  auto dst = slot->mutable_values();
  auto src = grad.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) throw NumericsError("operands recorded on different tapes");
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw NumericsError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
}

}  // namespace

const Tensor& Var::value() const { return tape->value(*this); }

Tensor Gradients::of(Var v) const {
  const auto& g = grads_.at(v.id);
  return g ? *g : Tensor::zeros(shapes_.at(v.id));
}

void Tape::check_owner(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) throw NumericsError("variable does not belong to this tape");
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node{std::move(value), {}, std::move(backward), false};
  node.inputs.reserve(inputs.size());
  for (Var in : inputs) {
    check_owner(in);
    node.inputs.push_back(in.id);
  }
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Gradients Tape::backward(Var loss) const {
  check_owner(loss);
  if (nodes_[loss.id].value.size() != 1)
    throw NumericsError("backward() needs a scalar loss, got shape " + shape_string(nodes_[loss.id].value.shape()));

  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[loss.id] = Tensor::filled(nodes_[loss.id].value.shape(), 1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!grads[i] || !node.backward) continue;
    std::vector<Tensor> in_grads = node.backward(*grads[i]);
    if (in_grads.size() != node.inputs.size()) throw NumericsError("backward rule returned wrong arity");
    for (std::size_t k = 0; k < in_grads.size(); ++k) {
      if (in_grads[k].shape() != nodes_[node.inputs[k]].value.shape())
        throw NumericsError("backward rule returned mis-shaped gradient");
      accumulate(grads[node.inputs[k]], std::move(in_grads[k]));
    }
  }

  std::vector<Shape> shapes;
  shapes.reserve(nodes_.size());
  for (const Node& n : nodes_) shapes.push_back(n.value.shape());
  return Gradients(std::move(grads), std::move(shapes));
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  if (av.cols() != bv.rows())
    throw NumericsError("matmul shape mismatch " + shape_string(av.shape()) + " * " + shape_string(bv.shape()));
  const kernels::MatDims d{av.rows(), av.cols(), bv.cols()};
  std::vector<double> out(d.rows * d.cols);
  kernels::matmul(av.values(), bv.values(), out, d);

  Tape* tape = a.tape;
  return tape->record(Tensor({d.rows, d.cols}, std::move(out)), {a, b},
                      [tape, a, b, d](const Tensor& g) {
                        const Tensor& av = tape->value(a);
                        const Tensor& bv = tape->value(b);
                        std::vector<double> ga(d.rows * d.inner), gb(d.inner * d.cols);
                        // dA = G * B^T, dB = A^T * G
                        kernels::matmul_bt(g.values(), bv.values(), ga, {d.rows, d.cols, d.inner});
                        kernels::matmul_at(av.values(), g.values(), gb, {d.inner, d.rows, d.cols});
                        return std::vector<Tensor>{Tensor({d.rows, d.inner}, std::move(ga)),
                                                   Tensor({d.inner, d.cols}, std::move(gb))};
                      });
}

Var add_bias(Var x, Var bias) {
  require_same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_matrix(xv, "add_bias");
  if (bv.rank() != 1 || bv.size() != xv.cols())
    throw NumericsError("add_bias shape mismatch " + shape_string(xv.shape()) + " + " + shape_string(bv.shape()));
  const std::size_t rows = xv.rows(), cols = xv.cols();
  std::vector<double> out(xv.data());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  return x.tape->record(Tensor(xv.shape(), std::move(out)), {x, bias}, [rows, cols](const Tensor& g) {
    std::vector<double> gb(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) gb[c] += g.at(r, c);
    return std::vector<Tensor>{g, Tensor({cols}, std::move(gb))};
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  if (a.shape() != b.shape())
    throw NumericsError("add shape mismatch " + shape_string(a.shape()) + " + " + shape_string(b.shape()));
  std::vector<double> out(a.value().data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape->record(Tensor(a.shape(), std::move(out)), {a, b},
                        [](const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  if (a.shape() != b.shape())
    throw NumericsError("mul shape mismatch " + shape_string(a.shape()) + " * " + shape_string(b.shape()));
  std::vector<double> out(a.value().data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  Tape* tape = a.tape;
  return tape->record(Tensor(a.shape(), std::move(out)), {a, b}, [tape, a, b](const Tensor& g) {
    const Tensor& av = tape->value(a);
    const Tensor& bv = tape->value(b);
    std::vector<double> ga(g.size()), gb(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] = g[i] * bv[i];
      gb[i] = g[i] * av[i];
    }
    return std::vector<Tensor>{Tensor(av.shape(), std::move(ga)), Tensor(bv.shape(), std::move(gb))};
  });
}

Var scale(Var x, double factor) {
  std::vector<double> out(x.value().data());
  for (double& v : out) v *= factor;
  return x.tape->record(Tensor(x.shape(), std::move(out)), {x}, [factor](const Tensor& g) {
    std::vector<double> gx(g.data());
    for (double& v : gx) v *= factor;
    return std::vector<Tensor>{Tensor(g.shape(), std::move(gx))};
  });
}

Var sum(Var x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  const Shape shape = x.shape();
  return x.tape->record(Tensor::scalar(acc), {x}, [shape](const Tensor& g) {
    return std::vector<Tensor>{Tensor::filled(shape, g.item())};
  });
}

Var relu(Var x) {
  std::vector<double> out(x.value().data());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  Tape* tape = x.tape;
  return tape->record(Tensor(x.shape(), std::move(out)), {x}, [tape, x](const Tensor& g) {
    const Tensor& xv = tape->value(x);
    std::vector<double> gx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = xv[i] > 0.0 ? g[i] : 0.0;
    return std::vector<Tensor>{Tensor(g.shape(), std::move(gx))};
  });
}

Var tanh(Var x) {
  std::vector<double> out(x.value().data());
  for (double& v : out) v = std::tanh(v);
  Tensor y(x.shape(), std::move(out));
  std::vector<double> y_copy(y.data());
  return x.tape->record(std::move(y), {x}, [y = std::move(y_copy)](const Tensor& g) {
    std::vector<double> gx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * (1.0 - y[i] * y[i]);
    return std::vector<Tensor>{Tensor(g.shape(), std::move(gx))};
  });
}

Var dropout(Var x, double keep_prob, RngStream& rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0))
    throw NumericsError("dropout keep_prob must lie in (0, 1], got " + std::to_string(keep_prob));
  if (keep_prob == 1.0) return x;
  const double inv = 1.0 / keep_prob;
  std::vector<double> mask(x.value().size());
  for (double& m : mask) m = rng.uniform() < keep_prob ? inv : 0.0;
  std::vector<double> out(x.value().data());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return x.tape->record(Tensor(x.shape(), std::move(out)), {x}, [mask = std::move(mask)](const Tensor& g) {
    std::vector<double> gx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * mask[i];
    return std::vector<Tensor>{Tensor(g.shape(), std::move(gx))};
  });
}

Var zero_pad(Var x, std::size_t width) {
  const Tensor& xv = x.value();
  require_matrix(xv, "zero_pad");
  const std::size_t rows = xv.rows(), cols = xv.cols();
  if (width == cols) return x;
  if (width < cols) throw NumericsError("zero_pad cannot shrink " + std::to_string(cols) + " columns to " + std::to_string(width));
  std::vector<double> out(rows * width, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(&xv.values()[r * cols], cols, &out[r * width]);
  return x.tape->record(Tensor({rows, width}, std::move(out)), {x}, [rows, cols, width](const Tensor& g) {
    std::vector<double> gx(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(&g.values()[r * width], cols, &gx[r * cols]);
    return std::vector<Tensor>{Tensor({rows, cols}, std::move(gx))};
  });
}

Tensor softmax_rows(const Tensor& logits) {
  require_matrix(logits, "softmax_rows");
  const std::size_t rows = logits.rows(), cols = logits.cols();
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = logits.at(r, 0);
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, logits.at(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (out[r * cols + c] = std::exp(logits.at(r, c) - mx));
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= z;
  }
  return Tensor({rows, cols}, std::move(out));
}

Var softmax_cross_entropy(Var logits, const Tensor& soft_labels) {
  const Tensor& z = logits.value();
  require_matrix(z, "softmax_cross_entropy");
  if (soft_labels.shape() != z.shape())
    throw NumericsError("label shape " + shape_string(soft_labels.shape()) + " does not match logits " +
                        shape_string(z.shape()));
  const std::size_t rows = z.rows(), cols = z.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (soft_labels.at(r, c) < 0.0) throw NumericsError("negative soft label");
      s += soft_labels.at(r, c);
    }
    if (std::abs(s - 1.0) > 1e-6) throw NumericsError("soft label row " + std::to_string(r) + " does not sum to 1");
  }

  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = z.at(r, 0);
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, z.at(r, c));
    double sum_exp = 0.0;
    for (std::size_t c = 0; c < cols; ++c) sum_exp += std::exp(z.at(r, c) - mx);
    const double lse = mx + std::log(sum_exp);
    for (std::size_t c = 0; c < cols; ++c) {
      const double y = soft_labels.at(r, c);
      if (y != 0.0) loss -= y * (z.at(r, c) - lse);
    }
  }
  loss /= static_cast<double>(rows);

  Tape* tape = logits.tape;
  return tape->record(Tensor::scalar(loss), {logits}, [tape, logits, soft_labels, rows](const Tensor& g) {
    Tensor p = softmax_rows(tape->value(logits));
    const double factor = g.item() / static_cast<double>(rows);
    auto pv = p.mutable_values();
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = (pv[i] - soft_labels[i]) * factor;
    return std::vector<Tensor>{std::move(p)};
  });
}

double finite_difference_check(const ScalarFn& fn, const std::vector<Tensor>& params, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw NumericsError("finite_difference_check needs eps > 0");

  auto evaluate = [&](const std::vector<Tensor>& ps) {
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& p : ps) leaves.push_back(tape.parameter(p));
    return fn(tape, leaves).value().item();
  };

  Tape tape;
  std::vector<Var> leaves;
  for (const Tensor& p : params) leaves.push_back(tape.parameter(p));
  const Gradients grads = tape.backward(fn(tape, leaves));

  double worst = 0.0;
  std::vector<Tensor> probe = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor analytic = grads.of(leaves[k]);
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      const double orig = params[k][i];
      probe[k][i] = orig + eps;
      const double up = evaluate(probe);
      probe[k][i] = orig - eps;
      const double down = evaluate(probe);
      probe[k][i] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace autohas::ad
