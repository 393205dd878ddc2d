#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "autohas/error.hpp"
#include "autohas/supernet.hpp"
#include "support.hpp"

namespace autohas {
namespace {

using testing::Gen;

SearchSpace eight_sixteen_space() {
  SpaceConfig cfg;
  cfg.input_width = 2;
  cfg.classes = 2;
  for (int l = 0; l < 2; ++l) {
    LayerConfig layer;
    layer.candidates = {{OpKind::affine, 8}, {OpKind::affine, 16}};
    layer.adapter = ShapeAdapter::zero_pad;
    layer.width = 16;
    cfg.layers.push_back(layer);
  }
  return build_space(cfg);
}

SearchSpace chain_space() {
  SpaceConfig cfg;
  cfg.input_width = 2;
  cfg.classes = 2;
  LayerConfig a, b;
  a.candidates = {{OpKind::affine, 8}, {OpKind::identity, 0}};
  a.adapter = ShapeAdapter::zero_pad;
  a.width = 8;
  b.candidates = {{OpKind::identity, 0}, {OpKind::affine, 16}};
  b.adapter = ShapeAdapter::zero_pad;
  b.width = 16;
  cfg.layers = {a, b};
  return build_space(cfg);
}

TEST(ParamKey, StringRoundTrip) {
  for (const ParamKey k : {ParamKey{0, 0, ParamName::weight}, ParamKey{12, 3, ParamName::bias},
                           ParamKey::head(ParamName::weight), ParamKey::head(ParamName::bias)})
    EXPECT_EQ(ParamKey::parse(k.str()), k);
  EXPECT_EQ(ParamKey({1, 2, ParamName::bias}).str(), "layer1/op2/bias");
  EXPECT_THROW(ParamKey::parse("layer1/opx/bias"), IoError);
  EXPECT_THROW(ParamKey::parse("layer1/op2/gain"), IoError);
}

TEST(InitWeights, KeySetEnumeratedByHand) {
  const SuperModelWeights w = init_weights(eight_sixteen_space(), RngStream(1, "init"));
  const std::vector<ParamKey> expected{{0, 0, ParamName::weight}, {0, 0, ParamName::bias}, {0, 1, ParamName::weight},
                                       {0, 1, ParamName::bias},   {1, 0, ParamName::weight}, {1, 0, ParamName::bias},
                                       {1, 1, ParamName::weight}, {1, 1, ParamName::bias}};
  EXPECT_EQ(w.op_keys(), expected);
  EXPECT_EQ(w.store.size(), 10u);  // plus the head pair
  EXPECT_EQ(w.store.at({1, 0, ParamName::weight}).shape(), (Shape{16, 8}));
  EXPECT_EQ(w.store.at(ParamKey::head(ParamName::weight)).shape(), (Shape{16, 2}));
}

TEST(InitWeights, IdentityOwnsNoKeys) {
  const SearchSpace s = testing::tabular_space(3, 4);
  EXPECT_TRUE(init_weights(s, RngStream(1, "init")).op_keys().empty());
}

TEST(InitWeights, DeterministicAndBounded) {
  const SearchSpace s = eight_sixteen_space();
  const auto a = init_weights(s, RngStream(5, "init"));
  EXPECT_EQ(a, init_weights(s, RngStream(5, "init")));
  EXPECT_NE(store_digest(a.store), store_digest(init_weights(s, RngStream(6, "init")).store));
  for (const auto& [k, t] : a.store) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(t.shape()[0]));
    for (double v : t.values()) {
      if (k.name == ParamName::bias)
        EXPECT_EQ(v, 0.0);
      else
        EXPECT_LE(std::abs(v), limit);
    }
  }
}

TEST(SubView, KeysOfTheChosenOps) {
  const SearchSpace s = eight_sixteen_space();
  const auto w = init_weights(s, RngStream(1, "init"));
  const SubModelView v = sub_view(s, w, {{0, 1}});
  const std::vector<ParamKey> expected{
      {0, 0, ParamName::weight}, {0, 0, ParamName::bias}, {1, 1, ParamName::weight}, {1, 1, ParamName::bias}};
  EXPECT_EQ(v.keys, expected);
  EXPECT_EQ(v.all_keys().size(), 6u);
  EXPECT_THROW(sub_view(s, w, {{0, 2}}), ValidationError);
}

TEST(SubView, AllIdentityIsEmpty) {
  const SearchSpace s = testing::tabular_space(2, 3);
  EXPECT_TRUE(sub_view(s, init_weights(s, RngStream(1, "init")), {{2, 1}}).keys.empty());
}

TEST(Forward, IdentityPathIsTheHeadOnRawInput) {
  const SearchSpace s = testing::tabular_space(1, 2);
  const auto w = init_weights(s, RngStream(3, "init"));
  const Tensor x = Tensor::matrix(2, 2, {0.5, -1.0, 2.0, 0.25});
  const Tensor& hw = w.store.at(ParamKey::head(ParamName::weight));
  const Tensor logits = predict(s, ParamLookup(w.store), {{1}}, x);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(logits.at(r, c), x.at(r, 0) * hw.at(0, c) + x.at(r, 1) * hw.at(1, c));
}

TEST(Forward, HandComputedTwoLayerNet) {
  SpaceConfig cfg;
  cfg.input_width = 1;
  cfg.classes = 2;
  LayerConfig relu, tanh;
  relu.candidates = {{OpKind::affine_relu, 2}};
  tanh.candidates = {{OpKind::affine_tanh, 1}};
  cfg.layers = {relu, tanh};
  const SearchSpace s = build_space(cfg);
  SuperModelWeights w;
  w.store.emplace(ParamKey{0, 0, ParamName::weight}, Tensor::matrix(1, 2, {1.0, -1.0}));
  w.store.emplace(ParamKey{0, 0, ParamName::bias}, Tensor::vector({0.5, 0.5}));
  w.store.emplace(ParamKey{1, 0, ParamName::weight}, Tensor::matrix(2, 1, {2.0, 3.0}));
  w.store.emplace(ParamKey{1, 0, ParamName::bias}, Tensor::vector({-1.0}));
  w.store.emplace(ParamKey::head(ParamName::weight), Tensor::matrix(1, 2, {1.0, -2.0}));
  w.store.emplace(ParamKey::head(ParamName::bias), Tensor::vector({0.0, 0.1}));
  const Tensor out = predict(s, ParamLookup(w.store), {{0, 0}}, Tensor::matrix(1, 1, {2.0}));
  // relu(2 + .5, -2 + .5) = (2.5, 0); tanh(5 - 1) = tanh 4.
  const double h = std::tanh(4.0);
  EXPECT_DOUBLE_EQ(out.at(0, 0), h);
  EXPECT_DOUBLE_EQ(out.at(0, 1), -2.0 * h + 0.1);
}

TEST(Forward, EvalIsDeterministicAndTrainWithoutDropoutMatches) {
  Gen g(4);
  const SearchSpace s = eight_sixteen_space();
  const auto w = init_weights(s, RngStream(1, "init"));
  const Batch b = testing::random_batch(g, 5, 2, 2);
  const CandidateSelection sel{{1, 0}};
  const Tensor e1 = predict(s, ParamLookup(w.store), sel, b.features);
  EXPECT_TRUE(bitwise_equal(e1, predict(s, ParamLookup(w.store), sel, b.features)));

  ad::Tape tape;
  const SubModelView v = sub_view(s, w, sel);
  const BoundParams bound = bind_parameters(tape, v, ParamLookup(w.store));
  RngStream rng(1, "drop");
  const ForwardOptions train{ForwardMode::train, {1.0, 1.0}, &rng};
  EXPECT_TRUE(bitwise_equal(forward(tape, s, bound, sel, tape.constant(b.features), train).value(), e1));
}

TEST(Forward, OverridesTakePrecedence) {
  const SearchSpace s = eight_sixteen_space();
  const auto w = init_weights(s, RngStream(1, "init"));
  ParamStore over;
  over.emplace(ParamKey::head(ParamName::bias), Tensor::vector({10.0, -10.0}));
  const Tensor logits = predict(s, ParamLookup(w.store, &over), {{0, 0}}, Tensor::zeros({1, 2}));
  EXPECT_EQ(logits, Tensor::matrix(1, 2, {10.0, -10.0}));
}

TEST(Forward, RejectsWrongInputWidth) {
  const SearchSpace s = eight_sixteen_space();
  const auto w = init_weights(s, RngStream(1, "init"));
  EXPECT_THROW(predict(s, ParamLookup(w.store), {{0, 0}}, Tensor::zeros({1, 3})), NumericsError);
}

TEST(Cost, MacCounts) {
  SpaceConfig cfg;
  cfg.input_width = 2;
  cfg.classes = 2;
  LayerConfig a, b;
  a.candidates = {{OpKind::affine, 8}};
  b.candidates = {{OpKind::affine, 16}};
  cfg.layers = {a};
  EXPECT_EQ(cost(build_space(cfg), {{0}}).layers, 16u);
  cfg.layers = {a, b};
  const MacCount m = cost(build_space(cfg), {{0, 0}});
  EXPECT_EQ(m.layers, 16u + 128u);
  EXPECT_EQ(m.head, 32u);
  EXPECT_EQ(m.total(), 176u);
  EXPECT_EQ(cost(testing::tabular_space(3, 2), {{0, 1, 0}}).layers, 0u);
}

TEST(Cost, PaddedLayersChargeTheirInputWidth) {
  // affine(2 -> 8) padded to 8, then affine(8 -> 16): identical to the chain.
  EXPECT_EQ(cost(chain_space(), {{0, 1}}).total(), 16u + 128u + 32u);
  EXPECT_EQ(cost(chain_space(), {{1, 0}}).total(), 32u);
}

TEST(Digest, CanonicalTextIsSortedAndExact) {
  ParamStore s;
  s.emplace(ParamKey{10, 0, ParamName::weight}, Tensor::vector({0.1}));
  s.emplace(ParamKey{2, 0, ParamName::weight}, Tensor::vector({1.0 / 3.0}));
  const std::string text = canonical_store_text(s);
  EXPECT_EQ(text, "layer10/op0/weight (1) 0.1\nlayer2/op0/weight (1) 0.3333333333333333\n");
  EXPECT_EQ(store_digest(s), fnv1a64(text));
}

// Property: forward reads only the view, and every key belongs to some view.
TEST(SupernetProperty, ForwardIgnoresParametersOutsideTheView) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Gen g(seed, "locality");
    const SearchSpace s = testing::random_space(g);
    SuperModelWeights w = init_weights(s, RngStream(seed, "init"));
    const CandidateSelection sel = testing::random_selection(g, s);
    const Batch b = testing::random_batch(g, 3, s.input_width(), s.classes());
    const Tensor before = predict(s, ParamLookup(w.store), sel, b.features);

    const SubModelView v = sub_view(s, w, sel);
    const std::set<ParamKey> inside(v.keys.begin(), v.keys.end());
    for (auto& [k, t] : w.store)
      if (!k.is_head() && !inside.contains(k))
        for (double& x : t.mutable_values()) x += g.normal();
    EXPECT_TRUE(bitwise_equal(before, predict(s, ParamLookup(w.store), sel, b.features))) << "seed " << seed;
  }
}

TEST(SupernetProperty, KeySetIsTheUnionOfViews) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Gen g(seed, "union");
    const SearchSpace s = testing::random_space(g);
    const SuperModelWeights w = init_weights(s, RngStream(seed, "init"));
    std::set<ParamKey> seen;
    std::vector<std::size_t> card;
    for (const auto& layer : s.arch()) card.push_back(layer.candidates.size());
    // Every layer choice, with hyperparameter indices at zero.
    std::vector<std::size_t> idx(s.decision_count(), 0);
    std::function<void(std::size_t)> walk = [&](std::size_t l) {
      if (l == card.size()) {
        const SubModelView v = sub_view(s, w, {idx});
        seen.insert(v.keys.begin(), v.keys.end());
        seen.insert(v.head_keys.begin(), v.head_keys.end());
        return;
      }
      for (std::size_t o = 0; o < card[l]; ++o) {
        idx[l] = o;
        walk(l + 1);
      }
    };
    walk(0);
    std::set<ParamKey> all;
    for (const auto& [k, _] : w.store) all.insert(k);
    EXPECT_EQ(seen, all) << "seed " << seed;
  }
}

}  // namespace
}  // namespace autohas
