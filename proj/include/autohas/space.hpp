#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "autohas/tensor.hpp"

// The joint architecture/hyperparameter search space: an ordered list of
// independent decisions whose Cartesian product is the search domain.
namespace autohas {

enum class OpKind { identity, affine, affine_relu, affine_tanh };

std::string_view to_string(OpKind kind);
OpKind op_kind_from_string(std::string_view name);

struct OperationSpec {
  OpKind kind = OpKind::identity;
  std::size_t width = 0;  // output features; ignored for identity

  bool has_params() const { return kind != OpKind::identity; }
  std::size_t native_width(std::size_t in_width) const { return has_params() ? width : in_width; }
  // Empty for identity; {weight (in x width), bias (width)} otherwise.
  std::vector<Shape> param_shapes(std::size_t in_width) const;

  friend bool operator==(const OperationSpec&, const OperationSpec&) = default;
};

// How candidates of one layer are reconciled to a common output width.
// `zero_pad` right-pads narrower candidate outputs with zeros.
enum class ShapeAdapter { none, zero_pad };

struct ArchDecision {
  std::size_t layer_id = 0;
  std::size_t input_width = 0;
  std::size_t output_width = 0;
  ShapeAdapter adapter = ShapeAdapter::none;
  std::vector<OperationSpec> candidates;
};

enum class HyperKind { categorical, continuous };

// Real number or symbol.
using BasisValue = std::variant<double, std::string>;

struct HyperDecision {
  std::string name;
  HyperKind kind = HyperKind::continuous;
  std::vector<BasisValue> basis;
  std::size_t default_index = 0;

  double real(std::size_t i) const { return std::get<double>(basis.at(i)); }
};

// Searchable hyperparameter names: optimizer, learning_rate, weight_decay,
// mixup_ratio, dropout_keep (all layers) and dropout_keep.<layer>.
bool is_known_hyperparameter(std::string_view name);
// Closed registry of optimizer symbols.
bool is_known_optimizer(std::string_view symbol);

struct LayerConfig {
  std::vector<OperationSpec> candidates;
  std::optional<std::size_t> width;  // required with the zero_pad adapter
  ShapeAdapter adapter = ShapeAdapter::none;
};

struct HyperConfig {
  std::string name;
  HyperKind kind = HyperKind::continuous;
  std::vector<BasisValue> basis;
  std::size_t default_index = 0;
};

struct SpaceConfig {
  std::size_t input_width = 0;
  std::size_t classes = 0;
  std::vector<LayerConfig> layers;
  std::vector<HyperConfig> hyperparameters;
};

class SearchSpace {
 public:
  SearchSpace(std::size_t input_width, std::size_t classes, std::vector<ArchDecision> arch,
              std::vector<HyperDecision> hyper)
      : input_width_(input_width), classes_(classes), arch_(std::move(arch)), hyper_(std::move(hyper)) {}

  std::size_t input_width() const { return input_width_; }
  std::size_t classes() const { return classes_; }
  // Width fed to the classification head.
  std::size_t feature_width() const { return arch_.empty() ? input_width_ : arch_.back().output_width; }

  const std::vector<ArchDecision>& arch() const { return arch_; }
  const std::vector<HyperDecision>& hyper() const { return hyper_; }

  // Decisions are ordered: every layer, then every hyperparameter.
  std::size_t decision_count() const { return arch_.size() + hyper_.size(); }
  std::size_t cardinality(std::size_t decision) const;
  std::string decision_name(std::size_t decision) const;
  // Index of the hyperparameter decision called `name`, if any.
  std::optional<std::size_t> find_hyper(std::string_view name) const;

 private:
  std::size_t input_width_;
  std::size_t classes_;
  std::vector<ArchDecision> arch_;
  std::vector<HyperDecision> hyper_;
};

// Throws ValidationError on: empty candidate lists, candidates of differing
// output widths without an adapter, continuous bases that are not strictly
// increasing, duplicate or unknown hyperparameter names, bad symbols.
SearchSpace build_space(const SpaceConfig& config);

// `count` values on a geometric grid centred in log space on `default_value`
// and reaching a factor of `span` on either side.
std::vector<double> make_continuous_basis(double default_value, std::size_t count, double span);

struct Cardinality {
  std::uint64_t count = 0;  // saturates at 2^63 - 1
  bool overflow = false;
};
Cardinality space_cardinality(const SearchSpace& space);

// One basis index per decision, in decision order.
struct CandidateSelection {
  std::vector<std::size_t> indices;

  friend bool operator==(const CandidateSelection&, const CandidateSelection&) = default;
};

// Throws ValidationError when the length or any index is out of range.
void validate_selection(const SearchSpace& space, const CandidateSelection& selection);

using HyperValue = std::variant<double, std::string>;

struct DerivedConfig {
  std::vector<std::size_t> arch_choice;
  // In hyperparameter declaration order.
  std::vector<std::pair<std::string, HyperValue>> hyper_values;

  const HyperValue* find(std::string_view name) const;
  friend bool operator==(const DerivedConfig&, const DerivedConfig&) = default;
};

using ProbabilityTable = std::vector<std::vector<double>>;

// Layers and categorical hyperparameters take the most probable candidate
// (lowest index on ties); continuous hyperparameters take the
// probability-weighted sum of their basis. Probability vectors must lie on
// the simplex within 1e-6.
DerivedConfig derive(const SearchSpace& space, const ProbabilityTable& probs);

// The configuration a selection denotes, without any weighting.
DerivedConfig config_from_selection(const SearchSpace& space, const CandidateSelection& selection);

// A space with a single candidate per layer (the chosen one) and no
// hyperparameter decisions; used to train a derived architecture alone.
SearchSpace restrict_architecture(const SearchSpace& space, const std::vector<std::size_t>& arch_choice);

}  // namespace autohas
