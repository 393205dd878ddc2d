#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "autohas/autodiff.hpp"
#include "autohas/rng.hpp"
#include "autohas/space.hpp"
#include "autohas/tensor.hpp"

namespace autohas {

enum class ParamName : std::uint8_t { weight, bias };

// Address of one parameter tensor. Candidate operations own keys
// (layer, op, name); the shared classification head uses layer == kHead.
struct ParamKey {
  static constexpr std::uint32_t kHead = UINT32_MAX;

  std::uint32_t layer = 0;
  std::uint32_t op = 0;
  ParamName name = ParamName::weight;

  static ParamKey head(ParamName name) { return ParamKey{kHead, 0, name}; }
  bool is_head() const { return layer == kHead; }

  // "layer<L>/op<O>/weight" or "head/bias".
  std::string str() const;
  static ParamKey parse(std::string_view text);

  friend auto operator<=>(const ParamKey&, const ParamKey&) = default;
};

using ParamStore = std::map<ParamKey, Tensor>;

// The super-model: every parameter of every candidate op of every layer,
// plus the classification head shared by all sub-models.
struct SuperModelWeights {
  ParamStore store;

  std::vector<ParamKey> op_keys() const;
  friend bool operator==(const SuperModelWeights&, const SuperModelWeights&) = default;
};

// Affine weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero. Each
// tensor draws from its own child stream of `rng`, named by its key.
SuperModelWeights init_weights(const SearchSpace& space, const RngStream& rng);

// The parameters a sampled architecture addresses inside the shared store.
struct SubModelView {
  CandidateSelection selection;
  std::vector<ParamKey> keys;       // selected ops' parameters
  std::vector<ParamKey> head_keys;  // always part of every sub-model

  std::vector<ParamKey> all_keys() const;
};

SubModelView sub_view(const SearchSpace& space, const SuperModelWeights& weights, const CandidateSelection& selection);

// Resolves keys against optional overrides first, then the shared store.
class ParamLookup {
 public:
  explicit ParamLookup(const ParamStore& base, const ParamStore* overrides = nullptr)
      : base_(&base), overrides_(overrides) {}
  const Tensor& at(const ParamKey& key) const;

 private:
  const ParamStore* base_;
  const ParamStore* overrides_;
};

using BoundParams = std::map<ParamKey, ad::Var>;

// Registers the view's tensors as parameter leaves on `tape`.
BoundParams bind_parameters(ad::Tape& tape, const SubModelView& view, const ParamLookup& lookup);

enum class ForwardMode { train, eval };

struct ForwardOptions {
  ForwardMode mode = ForwardMode::eval;
  std::vector<double> dropout_keep;  // per layer; empty means keep everything
  RngStream* rng = nullptr;          // needed in train mode when any keep < 1
};

// Records the selected sub-model on `tape` and returns (batch x classes) logits.
ad::Var forward(ad::Tape& tape, const SearchSpace& space, const BoundParams& params,
                const CandidateSelection& selection, ad::Var features, const ForwardOptions& options);

// Eval-mode logits without keeping a tape around.
Tensor predict(const SearchSpace& space, const ParamLookup& params, const CandidateSelection& selection,
               const Tensor& features);

struct MacCount {
  std::uint64_t layers = 0;  // searchable layers only
  std::uint64_t head = 0;

  std::uint64_t total() const { return layers + head; }
};

MacCount cost(const SearchSpace& space, const CandidateSelection& selection);

// 64-bit FNV-1a over the canonical text form of a store: keys in
// lexicographic order of ParamKey::str(), shapes, and shortest round-trip
// decimal values.
std::uint64_t store_digest(const ParamStore& store);
std::string canonical_store_text(const ParamStore& store);

}  // namespace autohas
