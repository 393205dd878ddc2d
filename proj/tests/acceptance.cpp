// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "autohas/cli.hpp"
#include "autohas/config.hpp"
#include "autohas/controller.hpp"
#include "autohas/engine.hpp"
#include "autohas/persist.hpp"
#include "support.hpp"

using namespace autohas;
using testing::Gen;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Tensor random_tensor(Gen& g, Shape shape) {
  Tensor t(std::move(shape));
  for (double& v : t.mutable_values()) v = g.normal();
  return t;
}

Tensor scaled(Tensor t, std::size_t fan_in) {
  for (double& v : t.mutable_values()) v /= std::sqrt(static_cast<double>(fan_in));
  return t;
}

// Keeps every entry at least 0.05 away from the ReLU kink.
Tensor off_kink(Tensor t) {
  for (double& v : t.mutable_values())
    if (std::abs(v) < 0.05) v = v < 0.0 ? -0.05 - std::abs(v) : 0.05 + v;
  return t;
}

std::vector<std::size_t> cards_of(const ControllerState& st) {
  std::vector<std::size_t> c;
  for (const auto& z : st.logits) c.push_back(z.size());
  return c;
}

// E_s[(r(s) - b) grad log p(s)] by enumeration, as an ascent direction.
LogitTable enumerated_reinforce(const ControllerState& st, const RewardFn& reward, double baseline) {
  const ProbabilityTable p = probabilities(st);
  const auto card = cards_of(st);
  LogitTable out;
  for (std::size_t n : card) out.emplace_back(n, 0.0);
  for_each_selection(card, [&](const CandidateSelection& s) {
    double prob = 1.0;
    for (std::size_t d = 0; d < card.size(); ++d) prob *= p[d][s.indices[d]];
    const ScoredSample one{s, reward(s)};
    const LogitTable g = policy_loss_gradient(st, std::span(&one, 1), baseline);
    for (std::size_t d = 0; d < card.size(); ++d)
      for (std::size_t j = 0; j < card[d]; ++j) out[d][j] -= prob * g[d][j];
  });
  return out;
}

std::size_t argmax(const std::vector<double>& p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

Outcome a1_simplex() {
  std::size_t updates = 0;
  double worst = 0.0;
  bool negative = false;
  for (std::uint64_t chain = 0; chain < 100; ++chain) {
    Gen g(chain, "a1");
    std::vector<std::size_t> card(g.range(1, 5));
    for (auto& n : card) n = g.range(1, 6);
    ControllerState st = init_controller(card);
    MetaHyperparameters meta;
    meta.total_meta_steps = 100;
    meta.meta_lr = g.real(0.01, 0.5);
    meta.warmup_fraction = g.real(0.0, 0.3);
    for (int step = 0; step < 100; ++step, ++updates) {
      std::vector<ScoredSample> xs;
      for (std::size_t k = 0, n = g.range(1, 8); k < n; ++k) {
        CandidateSelection s;
        for (std::size_t c : card) s.indices.push_back(g.range(0, c - 1));
        xs.push_back({s, g.real(0.0, 1.0)});
      }
      st = reinforce_update(std::move(st), xs, meta);
      for (const auto& p : probabilities(st)) {
        double total = 0.0;
        for (double v : p) {
          total += v;
          negative = negative || v < 0.0 || !std::isfinite(v);
        }
        worst = std::max(worst, std::abs(total - 1.0));
      }
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu updates, max |sum-1| = %.2e, negative entries: %s", updates, worst,
                negative ? "yes" : "no");
  return {updates == 10000 && worst <= 1e-6 && !negative, buf};
}

Outcome a2_bandit() {
  const SearchSpace space = testing::tabular_space(3, 4);
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Gen g(seed, "a2-planted");
    const std::vector<std::size_t> planted{g.range(0, 3), g.range(0, 3), g.range(0, 3)};
    TabularBackend backend(
        [&](const CandidateSelection& s) {
          double miss = 0.0;
          for (std::size_t d = 0; d < 3; ++d) miss += s.indices[d] != planted[d];
          return 1.0 - miss / 3.0;
        },
        {}, {});
    SearchOptions o;
    o.total_meta_steps = 2000;
    o.pairs_per_step = 4;
    o.meta.meta_lr = 0.05;
    o.meta.baseline_momentum = 0.95;
    o.meta.warmup_fraction = 0.3;
    o.seed = seed;
    o.parallel = false;
    SearchState st = init_search_state(space, o);
    const SearchResult r = run_search(space, st, backend, o);
    bool ok = true;
    for (std::size_t d = 0; d < 3; ++d) ok = ok && argmax(r.final_probabilities[d]) == planted[d];
    hits += ok;
  }
  return {hits >= 18, std::to_string(hits) + "/20 seeds recover the planted optimum (need >= 18)"};
}

Outcome a3_unbiased() {
  double worst_zero = 0.0, worst_shift = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Gen g(seed, "a3");
    std::vector<std::size_t> card(g.range(1, 3));
    for (auto& n : card) n = g.range(1, 4);
    ControllerState st = init_controller(card);
    for (auto& z : st.logits)
      for (double& v : z) v = g.normal();
    std::map<std::vector<std::size_t>, double> table;
    for_each_selection(card, [&](const CandidateSelection& s) { table[s.indices] = g.real(0.0, 1.0); });
    const RewardFn r = [&](const CandidateSelection& s) { return table.at(s.indices); };
    const LogitTable exact = expected_reward_gradient_oracle(st, r);
    const LogitTable zero = enumerated_reinforce(st, r, 0.0);
    const LogitTable shifted = enumerated_reinforce(st, r, g.real(-3.0, 3.0));
    for (std::size_t d = 0; d < card.size(); ++d)
      for (std::size_t j = 0; j < card[d]; ++j) {
        worst_zero = std::max(worst_zero, std::abs(zero[d][j] - exact[d][j]));
        worst_shift = std::max(worst_shift, std::abs(shifted[d][j] - exact[d][j]));
      }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "50 spaces, max error %.2e (zero baseline), %.2e (constant baseline)", worst_zero,
                worst_shift);
  return {worst_zero <= 1e-9 && worst_shift <= 1e-9, buf};
}

Outcome a4_autodiff() {
  double worst = 0.0;
  std::size_t checks = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Gen g(seed, "a4");
    const std::size_t r = g.range(1, 4), k = g.range(1, 4), c = g.range(1, 4);
    const Tensor a = random_tensor(g, {r, k}), b = random_tensor(g, {k, c}), bias = random_tensor(g, {c});
    const Tensor m = random_tensor(g, {r, c});
    const Tensor labels = testing::random_batch(g, r, 1, c).labels;
    const double f = g.real(-2.0, 2.0);
    const std::size_t pad = c + g.range(0, 2);
    using Fn = ad::ScalarFn;
    std::vector<std::pair<Fn, std::vector<Tensor>>> cases{
        {[](ad::Tape&, std::span<const ad::Var> p) { return ad::sum(ad::matmul(p[0], p[1])); }, {a, b}},
        {[](ad::Tape&, std::span<const ad::Var> p) { return ad::sum(ad::mul(ad::add_bias(p[0], p[1]), p[2])); },
         {m, bias, m}},
        {[](ad::Tape&, std::span<const ad::Var> p) { return ad::sum(ad::mul(ad::add(p[0], p[1]), p[0])); }, {m, m}},
        {[f](ad::Tape&, std::span<const ad::Var> p) { return ad::sum(ad::mul(ad::scale(p[0], f), p[0])); }, {m}},
        {[](ad::Tape&, std::span<const ad::Var> p) { return ad::sum(ad::mul(ad::relu(p[0]), p[0])); }, {off_kink(m)}},
        {[](ad::Tape&, std::span<const ad::Var> p) { return ad::sum(ad::tanh(p[0])); }, {m}},
        {[pad](ad::Tape&, std::span<const ad::Var> p) {
           const ad::Var y = ad::zero_pad(p[0], pad);
           return ad::sum(ad::mul(y, y));
         },
         {m}},
        {[&labels](ad::Tape&, std::span<const ad::Var> p) { return ad::softmax_cross_entropy(p[0], labels); }, {m}},
        {[seed](ad::Tape&, std::span<const ad::Var> p) {
           RngStream rng(seed, "a4-drop");
           const ad::Var y = ad::dropout(p[0], 0.6, rng);
           return ad::sum(ad::mul(y, y));
         },
         {m}},
    };

    // Three layers: relu, tanh, zero-padded affine, then the loss.
    const std::size_t n = g.range(2, 5), in = g.range(1, 4), h1 = g.range(2, 5), h2 = g.range(2, 5);
    const std::size_t classes = g.range(2, 3);
    // Redraw until no first-layer pre-activation sits within 0.01 of the ReLU kink.
    Tensor x;
    std::vector<Tensor> params;
    for (bool near_kink = true; near_kink;) {
      x = random_tensor(g, {n, in});
      // Weights at fan-in scale, as the network itself initialises them.
      params = {scaled(random_tensor(g, {in, h1}), in), random_tensor(g, {h1}), scaled(random_tensor(g, {h1, h2}), h1),
                random_tensor(g, {h2}), scaled(random_tensor(g, {h2 + 1, classes}), h2 + 1),
                random_tensor(g, {classes})};
      ad::Tape tape;
      const ad::Var pre = ad::add_bias(ad::matmul(tape.constant(x), tape.constant(params[0])), tape.constant(params[1]));
      near_kink = false;
      for (double v : pre.value().values()) near_kink = near_kink || std::abs(v) < 0.01;
    }
    const Tensor y = testing::random_batch(g, n, 1, classes).labels;
    cases.push_back({[x, y, h2](ad::Tape& t, std::span<const ad::Var> p) {
                       const ad::Var l1 = ad::relu(ad::add_bias(ad::matmul(t.constant(x), p[0]), p[1]));
                       const ad::Var l2 = ad::tanh(ad::add_bias(ad::matmul(l1, p[2]), p[3]));
                       const ad::Var l3 = ad::add_bias(ad::matmul(ad::zero_pad(l2, h2 + 1), p[4]), p[5]);
                       return ad::softmax_cross_entropy(l3, y);
                     },
                     params});
    for (const auto& [fn, ps] : cases) {
      worst = std::max(worst, ad::finite_difference_check(fn, ps, 1e-3));
      ++checks;
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu finite-difference checks, max relative error %.2e (limit 1e-4)", checks, worst);
  return {worst <= 1e-4 && checks >= 180, buf};
}

TrainerSpec random_spec(Gen& g, const SearchSpace& space, const CandidateSelection& sel) {
  TrainerDefaults d;
  d.inner_steps = g.range(1, 3);
  d.learning_rate = g.real(0.0, 0.5);
  return build_trainer(space, sel, d);
}

Outcome a5_isolation() {
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Gen g(seed, "a5");
    const SearchSpace space = testing::random_space(g);
    const SuperModelWeights w = init_weights(space, RngStream(seed, "init"));
    const CandidateSelection sel = testing::random_selection(g, space);
    TrainerDefaults d;
    d.inner_steps = g.range(1, 3);
    d.learning_rate = g.real(0.0, 0.5);
    std::vector<Batch> train;
    for (std::size_t s = 0; s < d.inner_steps; ++s)
      train.push_back(testing::random_batch(g, g.range(1, 8), space.input_width(), space.classes()));
    const Batch val = testing::random_batch(g, g.range(1, 8), space.input_width(), space.classes());
    const std::uint64_t before = store_digest(w.store);
    RngStream rng(seed, "a5-eval");
    evaluate_candidate(space, w, sel, train, val, rng, d, {});
    violations += store_digest(w.store) != before;
  }
  return {violations == 0, "200 fuzzed evaluations, " + std::to_string(violations) + " changed the shared store"};
}

Outcome a6_locality() {
  int violations = 0, touched = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Gen g(seed, "a6");
    const SearchSpace space = testing::random_space(g);
    SuperModelWeights w = init_weights(space, RngStream(seed, "init"));
    const CandidateSelection sel = testing::random_selection(g, space);
    const TrainerSpec spec = random_spec(g, space, sel);
    const SubModelView view = sub_view(space, w, sel);
    const Batch batch = testing::random_batch(g, g.range(1, 8), space.input_width(), space.classes());
    const SuperModelWeights before = w;
    SlotStore slots;
    RngStream rng(seed, "a6-commit");
    commit_step(space, w, view, spec, batch, slots, rng);
    const auto keys = view.all_keys();
    const std::set<ParamKey> inside(keys.begin(), keys.end());
    for (const auto& [key, t] : before.store) {
      const Tensor& now = w.store.at(key);
      const bool same = now.shape() == t.shape() && std::equal(now.values().begin(), now.values().end(),
                                                               t.values().begin(), [](double a, double b) {
                                                                 return std::bit_cast<std::uint64_t>(a) ==
                                                                        std::bit_cast<std::uint64_t>(b);
                                                               });
      if (!inside.count(key)) violations += !same;
      else touched += !same;
    }
    violations += w.store.size() != before.store.size();
  }
  return {violations == 0, "200 fuzzed commits, " + std::to_string(violations) + " out-of-view changes (" +
                               std::to_string(touched) + " in-view tensors updated)"};
}

json example_config() {
  std::ifstream in(fs::path(AUTOHAS_CONFIG_DIR) / "two_moons.json");
  return json::parse(in);
}

Outcome a7_efficacy() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    json doc = example_config();
    doc["seed"] = seed;
    const EngineConfig cfg = parse_config(doc, fs::temp_directory_path());
    const Dataset data = load_dataset(cfg);
    const DataSplit parts = split(data, cfg.data.fractions, cfg.seed);
    const SearchSpace space = build_space_for(cfg, data);
    SupernetBackend backend(space, parts, cfg.search);
    SearchState st = init_search_state(space, cfg.search);
    const SearchResult r = run_search(space, st, backend, cfg.search);

    // Both sides fit on train only and are compared on val.
    RetrainOptions ro = cfg.retrain;
    ro.include_val = false;
    ro.seed = seed;
    const double derived = retrain(space, r.derived, parts, ro).metrics.val_accuracy;
    const RandomSearchReport rs = random_search_baseline(space, parts, 16, ro, seed);
    std::vector<double> v;
    for (const auto& t : rs.trials) v.push_back(t.metrics.val_accuracy);
    std::sort(v.begin(), v.end());
    const double median = 0.5 * (v[7] + v[8]);
    wins += derived >= median;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s%.3f vs %.3f", detail.empty() ? "" : ", ", derived, median);
    detail += buf;
  }
  return {wins >= 4, std::to_string(wins) + "/5 seeds at or above the random-search median (" + detail + ")"};
}

Outcome a8_determinism() {
  const fs::path root = fs::temp_directory_path() / "autohas_acceptance_a8";
  fs::remove_all(root);
  const auto run_in = [&](const std::string& name, const SearchJobOptions& opts = {}) {
    const EngineConfig cfg = parse_config(example_config(), root / name);
    run_search_job(cfg, opts);
    return cfg;
  };
  const EngineConfig a = run_in("a"), b = run_in("b");
  const std::string expected = read_file(a.output.result);
  bool ok = expected == read_file(b.output.result);
  std::string detail = ok ? "repeat run byte-identical" : "repeat run differs";
  const std::uint64_t digest = parse_digest_hex(json::parse(expected).at("store_digest").get<std::string>());

  int resumed = 0, matched = 0;
  for (std::uint64_t stop : {1u, 37u, 149u, 150u, 333u, 499u}) {
    const std::string name = "resume_" + std::to_string(stop);
    const EngineConfig cfg = run_in(name, {.resume = std::nullopt, .stop_after = stop});
    run_search_job(cfg, {.resume = cfg.output.checkpoint, .stop_after = std::nullopt});
    const std::string text = read_file(cfg.output.result);
    const std::uint64_t d = parse_digest_hex(json::parse(text).at("store_digest").get<std::string>());
    ++resumed;
    matched += d == digest && text == expected;
  }
  ok = ok && matched == resumed;
  detail += ", " + std::to_string(matched) + "/" + std::to_string(resumed) + " resumed runs reproduce digest " +
            digest_hex(digest);
  fs::remove_all(root);
  return {ok, detail};
}

Outcome a9_derivation() {
  int violations = 0, vectors = 0;
  for (std::uint64_t seed = 0; vectors < 1000; ++seed) {
    Gen g(seed, "a9");
    const SearchSpace space = testing::random_space(g);
    ProbabilityTable probs;
    for (std::size_t d = 0; d < space.decision_count(); ++d, ++vectors)
      probs.push_back(testing::random_simplex(g, space.cardinality(d), g.coin(0.3)));
    const DerivedConfig out = derive(space, probs);
    const std::size_t arch = space.arch().size();
    for (std::size_t d = 0; d < space.decision_count(); ++d) {
      const auto& p = probs[d];
      if (d < arch) {
        violations += out.arch_choice[d] != argmax(p);  // first maximum wins
        continue;
      }
      const HyperDecision& h = space.hyper()[d - arch];
      const HyperValue& v = out.hyper_values[d - arch].second;
      if (h.kind == HyperKind::categorical) {
        violations += std::get<std::string>(v) != std::get<std::string>(h.basis[argmax(p)]);
      } else {
        const double x = std::get<double>(v);
        violations += x < h.real(0) || x > h.real(h.basis.size() - 1);
      }
    }
    // One-hot round trip.
    const CandidateSelection sel = testing::random_selection(g, space);
    ProbabilityTable one_hot;
    for (std::size_t d = 0; d < space.decision_count(); ++d) {
      one_hot.emplace_back(space.cardinality(d), 0.0);
      one_hot.back()[sel.indices[d]] = 1.0;
    }
    violations += derive(space, one_hot) != config_from_selection(space, sel);
  }
  return {violations == 0, std::to_string(vectors) + " fuzzed probability vectors, " + std::to_string(violations) +
                               " violations"};
}

Outcome a10_cost_aware() {
  const std::vector<double> candidate_cost{5.0, 10.0, 15.0, 30.0};
  const SearchSpace space = testing::tabular_space(3, 4);
  const auto total_cost = [&](const CandidateSelection& s) {
    double c = 0.0;
    for (std::size_t i : s.indices) c += candidate_cost[i];
    return c;
  };
  std::vector<double> costs;
  for_each_selection({4, 4, 4}, [&](const CandidateSelection& s) { costs.push_back(total_cost(s)); });
  std::sort(costs.begin(), costs.end());
  const double target = 0.5 * (costs[31] + costs[32]);
  const CandidateSelection planted{{2, 2, 2}}, decoy{{3, 3, 3}};
  // Per-candidate accuracy contributions, averaged over decisions.
  const std::vector<double> acc{0.5, 0.5, 0.80, 0.86};
  const auto accuracy_of = [&](const CandidateSelection& s) {
    double a = 0.0;
    for (std::size_t i : s.indices) a += acc[i];
    return a / 3.0;
  };
  const RewardParams params{RewardMode::cost_aware, -0.1, target};

  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    TabularBackend backend(accuracy_of, total_cost, params);
    SearchOptions o;
    o.total_meta_steps = 2000;
    o.pairs_per_step = 4;
    o.meta.meta_lr = 0.05;
    o.meta.baseline_momentum = 0.95;
    o.meta.warmup_fraction = 0.3;
    o.reward = params;
    o.seed = seed;
    o.parallel = false;
    SearchState st = init_search_state(space, o);
    const SearchResult r = run_search(space, st, backend, o);
    hits += r.derived.arch_choice == planted.indices;
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "target %.0f, planted acc %.2f cost %.0f, decoy acc %.2f cost %.0f; %d/20 seeds pick the planted "
                "optimum (need >= 18)",
                target, accuracy_of(planted), total_cost(planted), accuracy_of(decoy), total_cost(decoy), hits);
  const bool setup = total_cost(planted) == target && accuracy_of(decoy) > accuracy_of(planted) &&
                     compute_reward(accuracy_of(decoy), total_cost(decoy), params) <
                         compute_reward(accuracy_of(planted), total_cost(planted), params);
  return {setup && hits >= 18, buf};
}

}  // namespace

int main() {
  setenv("AUTOHAS_LOG_LEVEL", "quiet", 0);
  // Runtime limits in seconds; 0 means none.
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double limit;
  };
  const std::vector<Criterion> criteria{
      {"A1 simplex", a1_simplex, 30.0},
      {"A2 tabular bandit", a2_bandit, 120.0},
      {"A3 reinforce unbiased", a3_unbiased, 0.0},
      {"A4 autodiff", a4_autodiff, 60.0},
      {"A5 temporary isolation", a5_isolation, 0.0},
      {"A6 sharing locality", a6_locality, 0.0},
      {"A7 end-to-end efficacy", a7_efficacy, 600.0},
      {"A8 determinism/resume", a8_determinism, 0.0},
      {"A9 derivation", a9_derivation, 0.0},
      {"A10 cost-aware reward", a10_cost_aware, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char timing[64];
    if (c.limit > 0.0)
      std::snprintf(timing, sizeof timing, "%.1fs, limit %.0fs", secs, c.limit);
    else
      std::snprintf(timing, sizeof timing, "%.1fs", secs);
    if (c.limit > 0.0 && secs > c.limit) o.pass = false;
    std::printf("%s %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), timing);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
