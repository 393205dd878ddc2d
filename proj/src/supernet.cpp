#include "autohas/supernet.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "autohas/error.hpp"

namespace autohas {

namespace {

std::string_view name_of(ParamName n) { return n == ParamName::weight ? "weight" : "bias"; }

Tensor init_affine_weight(std::size_t fan_in, std::size_t width, RngStream rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> w(fan_in * width);
  for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * limit;
  return Tensor({fan_in, width}, std::move(w));
}

std::uint32_t parse_u32(std::string_view s, std::string_view text) {
  std::uint32_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw IoError("malformed parameter key '" + std::string(text) + "'");
  return v;
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

std::string ParamKey::str() const {
  if (is_head()) return "head/" + std::string(name_of(name));
  return "layer" + std::to_string(layer) + "/op" + std::to_string(op) + "/" + std::string(name_of(name));
}

ParamKey ParamKey::parse(std::string_view text) {
  const auto slash = text.rfind('/');
  if (slash == std::string_view::npos) throw IoError("malformed parameter key '" + std::string(text) + "'");
  const std::string_view tail = text.substr(slash + 1);
  ParamName name;
  if (tail == "weight")
    name = ParamName::weight;
  else if (tail == "bias")
    name = ParamName::bias;
  else
    throw IoError("malformed parameter key '" + std::string(text) + "'");

  const std::string_view head = text.substr(0, slash);
  if (head == "head") return ParamKey::head(name);
  const auto mid = head.find("/op");
  if (!head.starts_with("layer") || mid == std::string_view::npos)
    throw IoError("malformed parameter key '" + std::string(text) + "'");
  return ParamKey{parse_u32(head.substr(5, mid - 5), text), parse_u32(head.substr(mid + 3), text), name};
}

std::vector<ParamKey> SuperModelWeights::op_keys() const {
  std::vector<ParamKey> keys;
  for (const auto& [k, _] : store)
    if (!k.is_head()) keys.push_back(k);
  return keys;
}

SuperModelWeights init_weights(const SearchSpace& space, const RngStream& rng) {
  SuperModelWeights w;
  for (const ArchDecision& layer : space.arch()) {
    for (std::size_t o = 0; o < layer.candidates.size(); ++o) {
      const OperationSpec& op = layer.candidates[o];
      if (!op.has_params()) continue;
      const ParamKey wk{static_cast<std::uint32_t>(layer.layer_id), static_cast<std::uint32_t>(o), ParamName::weight};
      const ParamKey bk{wk.layer, wk.op, ParamName::bias};
      w.store.emplace(wk, init_affine_weight(layer.input_width, op.width, rng.child(wk.str())));
      w.store.emplace(bk, Tensor::zeros({op.width}));
    }
  }
  const ParamKey hw = ParamKey::head(ParamName::weight);
  w.store.emplace(hw, init_affine_weight(space.feature_width(), space.classes(), rng.child(hw.str())));
  w.store.emplace(ParamKey::head(ParamName::bias), Tensor::zeros({space.classes()}));
  return w;
}

std::vector<ParamKey> SubModelView::all_keys() const {
  std::vector<ParamKey> out = keys;
  out.insert(out.end(), head_keys.begin(), head_keys.end());
  return out;
}

SubModelView sub_view(const SearchSpace& space, const SuperModelWeights& weights, const CandidateSelection& selection) {
  validate_selection(space, selection);
  SubModelView view{selection, {}, {ParamKey::head(ParamName::weight), ParamKey::head(ParamName::bias)}};
  for (std::size_t l = 0; l < space.arch().size(); ++l) {
    const ArchDecision& layer = space.arch()[l];
    const std::size_t o = selection.indices[l];
    if (!layer.candidates[o].has_params()) continue;
    for (ParamName n : {ParamName::weight, ParamName::bias})
      view.keys.push_back(ParamKey{static_cast<std::uint32_t>(layer.layer_id), static_cast<std::uint32_t>(o), n});
  }
  for (const ParamKey& k : view.all_keys())
    if (!weights.store.contains(k)) throw ValidationError("super-model has no parameter " + k.str());
  return view;
}

const Tensor& ParamLookup::at(const ParamKey& key) const {
  if (overrides_) {
    if (auto it = overrides_->find(key); it != overrides_->end()) return it->second;
  }
  auto it = base_->find(key);
  if (it == base_->end()) throw ValidationError("missing parameter " + key.str());
  return it->second;
}

BoundParams bind_parameters(ad::Tape& tape, const SubModelView& view, const ParamLookup& lookup) {
  BoundParams bound;
  for (const ParamKey& k : view.all_keys()) bound.emplace(k, tape.parameter(lookup.at(k)));
  return bound;
}

ad::Var forward(ad::Tape& tape, const SearchSpace& space, const BoundParams& params,
                const CandidateSelection& selection, ad::Var features, const ForwardOptions& options) {
  if (features.tape != &tape) throw NumericsError("features are not on the forward tape");
  if (features.value().rank() != 2 || features.value().cols() != space.input_width())
    throw NumericsError("batch features " + shape_string(features.shape()) + " do not match input width " +
                        std::to_string(space.input_width()));
  if (selection.indices.size() < space.arch().size()) throw ValidationError("selection is missing layer choices");

  auto param = [&](ParamKey k) {
    auto it = params.find(k);
    if (it == params.end()) throw ValidationError("parameter " + k.str() + " is not bound");
    return it->second;
  };

  ad::Var h = features;
  for (std::size_t l = 0; l < space.arch().size(); ++l) {
    const ArchDecision& layer = space.arch()[l];
    const std::size_t o = selection.indices[l];
    if (o >= layer.candidates.size()) throw ValidationError("selection index out of range for layer" + std::to_string(l));
    const OperationSpec& op = layer.candidates[o];
    if (op.has_params()) {
      const auto lid = static_cast<std::uint32_t>(layer.layer_id);
      const auto oid = static_cast<std::uint32_t>(o);
      h = ad::add_bias(ad::matmul(h, param({lid, oid, ParamName::weight})), param({lid, oid, ParamName::bias}));
      if (op.kind == OpKind::affine_relu) h = ad::relu(h);
      if (op.kind == OpKind::affine_tanh) h = ad::tanh(h);
    }
    if (layer.adapter == ShapeAdapter::zero_pad) h = ad::zero_pad(h, layer.output_width);

    if (options.mode == ForwardMode::train && l < options.dropout_keep.size() && options.dropout_keep[l] < 1.0) {
      if (!options.rng) throw ValidationError("train-mode dropout needs an rng stream");
      h = ad::dropout(h, options.dropout_keep[l], *options.rng);
    }
  }
  return ad::add_bias(ad::matmul(h, param(ParamKey::head(ParamName::weight))), param(ParamKey::head(ParamName::bias)));
}

Tensor predict(const SearchSpace& space, const ParamLookup& params, const CandidateSelection& selection,
               const Tensor& features) {
  ad::Tape tape;
  BoundParams bound;
  auto bind = [&](ParamKey k) { bound.emplace(k, tape.constant(params.at(k))); };
  for (std::size_t l = 0; l < space.arch().size(); ++l) {
    const ArchDecision& layer = space.arch()[l];
    const std::size_t o = selection.indices.at(l);
    if (o >= layer.candidates.size() || !layer.candidates[o].has_params()) continue;
    for (ParamName n : {ParamName::weight, ParamName::bias})
      bind({static_cast<std::uint32_t>(layer.layer_id), static_cast<std::uint32_t>(o), n});
  }
  bind(ParamKey::head(ParamName::weight));
  bind(ParamKey::head(ParamName::bias));
  return forward(tape, space, bound, selection, tape.constant(features), {}).value();
}

MacCount cost(const SearchSpace& space, const CandidateSelection& selection) {
  if (selection.indices.size() < space.arch().size()) throw ValidationError("selection is missing layer choices");
  MacCount macs;
  for (std::size_t l = 0; l < space.arch().size(); ++l) {
    const ArchDecision& layer = space.arch()[l];
    const OperationSpec& op = layer.candidates.at(selection.indices[l]);
    if (op.has_params()) macs.layers += static_cast<std::uint64_t>(layer.input_width) * op.width;
  }
  macs.head = static_cast<std::uint64_t>(space.feature_width()) * space.classes();
  return macs;
}

std::string canonical_store_text(const ParamStore& store) {
  std::vector<std::pair<std::string, const Tensor*>> entries;
  entries.reserve(store.size());
  for (const auto& [k, t] : store) entries.emplace_back(k.str(), &t);
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::string out;
  for (const auto& [name, t] : entries) {
    out += name;
    out += ' ';
    out += shape_string(t->shape());
    for (double v : t->values()) {
      out += ' ';
      append_double(out, v);
    }
    out += '\n';
  }
  return out;
}

std::uint64_t store_digest(const ParamStore& store) { return fnv1a64(canonical_store_text(store)); }

}  // namespace autohas
