#include "autohas/space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "autohas/error.hpp"

namespace autohas {

namespace {

constexpr std::string_view kOptimizers[] = {"sgd", "momentum", "adam", "rmsprop"};
constexpr std::string_view kDropoutPrefix = "dropout_keep.";

std::string layer_name(std::size_t i) { return "layer" + std::to_string(i); }

void check_probabilities(const std::vector<double>& p, std::size_t expected, const std::string& what) {
  if (p.size() != expected)
    throw ValidationError(what + ": expected " + std::to_string(expected) + " probabilities, got " +
                          std::to_string(p.size()));
  double total = 0.0;
  for (double v : p) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError(what + ": probabilities must be finite and >= 0");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) throw ValidationError(what + ": probabilities sum to " + std::to_string(total));
}

std::size_t argmax_lowest(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

void check_range(std::string_view name, double x, const std::string& ctx) {
  if (name == "mixup_ratio" && !(x >= 0.0 && x <= 1.0)) throw ValidationError(ctx + " values must lie in [0, 1]");
  if (name.starts_with("dropout_keep") && !(x > 0.0 && x <= 1.0))
    throw ValidationError(ctx + " values must lie in (0, 1]");
  if ((name == "learning_rate" || name == "weight_decay") && x < 0.0) throw ValidationError(ctx + " values must be >= 0");
}

void validate_hyper(const HyperConfig& h, std::size_t layers) {
  const std::string ctx = "hyperparameter '" + h.name + "'";
  if (!is_known_hyperparameter(h.name)) throw ValidationError("unknown " + ctx);
  if (h.name.starts_with(kDropoutPrefix)) {
    const std::size_t layer = std::stoul(h.name.substr(kDropoutPrefix.size()));
    if (layer >= layers) throw ValidationError(ctx + " names a layer that does not exist");
  }
  if (h.basis.empty()) throw ValidationError(ctx + " has an empty basis");
  if (h.default_index >= h.basis.size()) throw ValidationError(ctx + " default_index out of range");

  const bool symbolic = h.name == "optimizer";
  for (const BasisValue& v : h.basis) {
    if (symbolic) {
      const auto* sym = std::get_if<std::string>(&v);
      if (!sym || !is_known_optimizer(*sym)) throw ValidationError(ctx + " basis values must be optimizer symbols");
    } else {
      const auto* x = std::get_if<double>(&v);
      if (!x || !std::isfinite(*x)) throw ValidationError(ctx + " basis values must be finite reals");
      check_range(h.name, *x, ctx);
    }
  }
  if (symbolic && h.kind != HyperKind::categorical) throw ValidationError(ctx + " must be categorical");

  if (h.kind == HyperKind::continuous) {
    for (std::size_t i = 1; i < h.basis.size(); ++i)
      if (!(std::get<double>(h.basis[i - 1]) < std::get<double>(h.basis[i])))
        throw ValidationError(ctx + " continuous basis must be strictly increasing");
  } else {
    for (std::size_t i = 0; i < h.basis.size(); ++i)
      for (std::size_t j = i + 1; j < h.basis.size(); ++j)
        if (h.basis[i] == h.basis[j]) throw ValidationError(ctx + " categorical basis values must be distinct");
  }
}

}  // namespace

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::identity: return "identity";
    case OpKind::affine: return "affine";
    case OpKind::affine_relu: return "affine-relu";
    case OpKind::affine_tanh: return "affine-tanh";
  }
  return "?";
}

OpKind op_kind_from_string(std::string_view name) {
  for (OpKind k : {OpKind::identity, OpKind::affine, OpKind::affine_relu, OpKind::affine_tanh})
    if (to_string(k) == name) return k;
  throw ValidationError("unknown operation kind '" + std::string(name) + "'");
}

std::vector<Shape> OperationSpec::param_shapes(std::size_t in_width) const {
  if (!has_params()) return {};
  return {Shape{in_width, width}, Shape{width}};
}

bool is_known_optimizer(std::string_view symbol) {
  return std::find(std::begin(kOptimizers), std::end(kOptimizers), symbol) != std::end(kOptimizers);
}

bool is_known_hyperparameter(std::string_view name) {
  if (name == "optimizer" || name == "learning_rate" || name == "weight_decay" || name == "mixup_ratio" ||
      name == "dropout_keep")
    return true;
  if (!name.starts_with(kDropoutPrefix)) return false;
  const std::string_view digits = name.substr(kDropoutPrefix.size());
  return !digits.empty() && digits.size() < 7 &&
         std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::size_t SearchSpace::cardinality(std::size_t decision) const {
  if (decision < arch_.size()) return arch_[decision].candidates.size();
  return hyper_.at(decision - arch_.size()).basis.size();
}

std::string SearchSpace::decision_name(std::size_t decision) const {
  if (decision < arch_.size()) return layer_name(decision);
  return hyper_.at(decision - arch_.size()).name;
}

std::optional<std::size_t> SearchSpace::find_hyper(std::string_view name) const {
  for (std::size_t i = 0; i < hyper_.size(); ++i)
    if (hyper_[i].name == name) return i;
  return std::nullopt;
}

SearchSpace build_space(const SpaceConfig& config) {
  if (config.input_width == 0) throw ValidationError("input width must be positive");
  if (config.classes < 2) throw ValidationError("need at least two classes");
  if (config.layers.empty() && config.hyperparameters.empty())
    throw ValidationError("search space has no decisions");

  std::vector<ArchDecision> arch;
  std::size_t in = config.input_width;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    const LayerConfig& layer = config.layers[l];
    const std::string ctx = layer_name(l);
    if (layer.candidates.empty()) throw ValidationError(ctx + " has no candidate operations");
    for (const OperationSpec& op : layer.candidates)
      if (op.has_params() && op.width == 0) throw ValidationError(ctx + " has an operation of width 0");

    std::size_t out = 0;
    if (layer.adapter == ShapeAdapter::zero_pad) {
      if (!layer.width) throw ValidationError(ctx + " uses the zero_pad adapter but declares no width");
      out = *layer.width;
      for (const OperationSpec& op : layer.candidates)
        if (op.native_width(in) > out)
          throw ValidationError(ctx + " candidate " + std::string(to_string(op.kind)) + " is wider than the layer");
    } else {
      out = layer.width.value_or(layer.candidates.front().native_width(in));
      for (const OperationSpec& op : layer.candidates)
        if (op.native_width(in) != out)
          throw ValidationError(ctx + " candidates have mismatched output widths and no shape adapter");
    }
    if (out == 0) throw ValidationError(ctx + " has zero width");
    arch.push_back(ArchDecision{l, in, out, layer.adapter, layer.candidates});
    in = out;
  }

  std::vector<HyperDecision> hyper;
  std::set<std::string> names;
  bool global_dropout = false, layer_dropout = false;
  for (const HyperConfig& h : config.hyperparameters) {
    validate_hyper(h, config.layers.size());
    if (!names.insert(h.name).second) throw ValidationError("duplicate hyperparameter '" + h.name + "'");
    if (h.name == "dropout_keep") global_dropout = true;
    if (h.name.starts_with(kDropoutPrefix)) layer_dropout = true;
    hyper.push_back(HyperDecision{h.name, h.kind, h.basis, h.default_index});
  }
  if (global_dropout && layer_dropout)
    throw ValidationError("dropout_keep and dropout_keep.<layer> cannot be searched together");

  return SearchSpace(config.input_width, config.classes, std::move(arch), std::move(hyper));
}

std::vector<double> make_continuous_basis(double default_value, std::size_t count, double span) {
  if (count < 2) throw ValidationError("a continuous basis needs at least 2 values");
  if (!(span > 1.0) || !std::isfinite(span)) throw ValidationError("basis span must be > 1");
  if (!(default_value > 0.0) || !std::isfinite(default_value))
    throw ValidationError("basis default must be positive and finite");
  const double lo = std::log(default_value) - std::log(span);
  const double step = 2.0 * std::log(span) / static_cast<double>(count - 1);
  std::vector<double> basis(count);
  for (std::size_t i = 0; i < count; ++i) basis[i] = std::exp(lo + step * static_cast<double>(i));
  // Pin the centre exactly when it is on the grid.
  if (count % 2 == 1) basis[count / 2] = default_value;
  return basis;
}

Cardinality space_cardinality(const SearchSpace& space) {
  constexpr std::uint64_t kMax = static_cast<std::uint64_t>(INT64_MAX);
  Cardinality result{1, false};
  for (std::size_t d = 0; d < space.decision_count(); ++d) {
    const std::uint64_t n = space.cardinality(d);
    if (result.count > kMax / n) return Cardinality{kMax, true};
    result.count *= n;
  }
  return result;
}

void validate_selection(const SearchSpace& space, const CandidateSelection& selection) {
  if (selection.indices.size() != space.decision_count())
    throw ValidationError("selection has " + std::to_string(selection.indices.size()) + " indices, space has " +
                          std::to_string(space.decision_count()) + " decisions");
  for (std::size_t d = 0; d < selection.indices.size(); ++d)
    if (selection.indices[d] >= space.cardinality(d))
      throw ValidationError("selection index " + std::to_string(selection.indices[d]) + " out of range for " +
                            space.decision_name(d));
}

const HyperValue* DerivedConfig::find(std::string_view name) const {
  for (const auto& [n, v] : hyper_values)
    if (n == name) return &v;
  return nullptr;
}

DerivedConfig derive(const SearchSpace& space, const ProbabilityTable& probs) {
  if (probs.size() != space.decision_count())
    throw ValidationError("derive: expected " + std::to_string(space.decision_count()) + " probability vectors");
  for (std::size_t d = 0; d < probs.size(); ++d) check_probabilities(probs[d], space.cardinality(d), space.decision_name(d));

  DerivedConfig out;
  const std::size_t layers = space.arch().size();
  for (std::size_t l = 0; l < layers; ++l) out.arch_choice.push_back(argmax_lowest(probs[l]));
  for (std::size_t h = 0; h < space.hyper().size(); ++h) {
    const HyperDecision& hd = space.hyper()[h];
    const std::vector<double>& p = probs[layers + h];
    if (hd.kind == HyperKind::categorical) {
      out.hyper_values.emplace_back(hd.name, hd.basis[argmax_lowest(p)]);
      continue;
    }
    double value = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) value += p[i] * hd.real(i);
    // Rounding in the sum can step a hair outside the basis hull.
    value = std::clamp(value, hd.real(0), hd.real(hd.basis.size() - 1));
    out.hyper_values.emplace_back(hd.name, value);
  }
  return out;
}

DerivedConfig config_from_selection(const SearchSpace& space, const CandidateSelection& selection) {
  validate_selection(space, selection);
  DerivedConfig out;
  const std::size_t layers = space.arch().size();
  out.arch_choice.assign(selection.indices.begin(), selection.indices.begin() + static_cast<std::ptrdiff_t>(layers));
  for (std::size_t h = 0; h < space.hyper().size(); ++h) {
    const HyperDecision& hd = space.hyper()[h];
    out.hyper_values.emplace_back(hd.name, hd.basis[selection.indices[layers + h]]);
  }
  return out;
}

SearchSpace restrict_architecture(const SearchSpace& space, const std::vector<std::size_t>& arch_choice) {
  if (arch_choice.size() != space.arch().size()) throw ValidationError("architecture choice has wrong length");
  std::vector<ArchDecision> arch = space.arch();
  for (std::size_t l = 0; l < arch.size(); ++l) {
    if (arch_choice[l] >= arch[l].candidates.size()) throw ValidationError("architecture choice out of range");
    arch[l].candidates = {arch[l].candidates[arch_choice[l]]};
  }
  return SearchSpace(space.input_width(), space.classes(), std::move(arch), {});
}

}  // namespace autohas
