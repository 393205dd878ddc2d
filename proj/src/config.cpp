#include "autohas/config.hpp"

#include <fstream>
#include <set>

#include "autohas/error.hpp"

namespace autohas {

namespace {

using nlohmann::json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& ctx) {
  if (!obj.is_object()) throw ValidationError(ctx + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.contains(key)) throw ValidationError("unknown key '" + key + "' in " + ctx);
}

template <class T>
T get(const json& obj, const char* key, const std::string& ctx, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(ctx + "." + key + " has the wrong type");
  }
}

double get_real(const json& obj, const char* key, const std::string& ctx, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) throw ValidationError(ctx + "." + key + " must be a number");
  return obj.at(key).get<double>();
}

std::uint64_t get_count(const json& obj, const char* key, const std::string& ctx, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ValidationError(ctx + "." + key + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

LayerConfig parse_layer(const json& j, const std::string& ctx) {
  check_keys(j, {"candidates", "width", "adapter"}, ctx);
  LayerConfig layer;
  if (!j.contains("candidates") || !j.at("candidates").is_array()) throw ValidationError(ctx + ".candidates must be a list");
  std::size_t i = 0;
  for (const json& c : j.at("candidates")) {
    const std::string cctx = ctx + ".candidates[" + std::to_string(i++) + "]";
    check_keys(c, {"op", "width"}, cctx);
    OperationSpec op;
    op.kind = op_kind_from_string(get<std::string>(c, "op", cctx, ""));
    op.width = get_count(c, "width", cctx, 0);
    if (op.has_params() && op.width == 0) throw ValidationError(cctx + " needs a positive width");
    layer.candidates.push_back(op);
  }
  if (j.contains("width")) layer.width = get_count(j, "width", ctx, 0);
  const std::string adapter = get<std::string>(j, "adapter", ctx, "none");
  if (adapter == "zero_pad")
    layer.adapter = ShapeAdapter::zero_pad;
  else if (adapter != "none")
    throw ValidationError(ctx + ".adapter must be 'none' or 'zero_pad'");
  return layer;
}

HyperConfig parse_hyper(const json& j, const std::string& ctx) {
  check_keys(j, {"name", "kind", "basis", "grid", "default_index"}, ctx);
  HyperConfig h;
  h.name = get<std::string>(j, "name", ctx, "");
  const std::string kind = get<std::string>(j, "kind", ctx, "");
  if (kind == "continuous")
    h.kind = HyperKind::continuous;
  else if (kind == "categorical")
    h.kind = HyperKind::categorical;
  else
    throw ValidationError(ctx + ".kind must be 'continuous' or 'categorical'");

  if (j.contains("basis") == j.contains("grid")) throw ValidationError(ctx + " needs exactly one of basis or grid");
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    check_keys(g, {"default", "count", "span"}, ctx + ".grid");
    const std::size_t count = get_count(g, "count", ctx + ".grid", 10);
    for (double v : make_continuous_basis(get_real(g, "default", ctx + ".grid", 0.0), count,
                                          get_real(g, "span", ctx + ".grid", 10.0)))
      h.basis.emplace_back(v);
    h.default_index = count / 2;
  } else {
    if (!j.at("basis").is_array()) throw ValidationError(ctx + ".basis must be a list");
    for (const json& v : j.at("basis")) {
      if (v.is_number())
        h.basis.emplace_back(v.get<double>());
      else if (v.is_string())
        h.basis.emplace_back(v.get<std::string>());
      else
        throw ValidationError(ctx + ".basis entries must be numbers or strings");
    }
  }
  h.default_index = get_count(j, "default_index", ctx, h.default_index);
  return h;
}

}  // namespace

EngineConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, {"seed", "space", "data", "search", "retrain", "output"}, "config");
  EngineConfig cfg;
  cfg.source = doc;
  cfg.seed = get_count(doc, "seed", "config", 0);

  if (!doc.contains("space")) throw ValidationError("config.space is required");
  const json& space = doc.at("space");
  check_keys(space, {"layers", "hyperparameters"}, "space");
  if (space.contains("layers")) {
    std::size_t i = 0;
    for (const json& l : space.at("layers")) cfg.space.layers.push_back(parse_layer(l, "space.layers[" + std::to_string(i++) + "]"));
  }
  if (space.contains("hyperparameters")) {
    std::size_t i = 0;
    for (const json& h : space.at("hyperparameters"))
      cfg.space.hyperparameters.push_back(parse_hyper(h, "space.hyperparameters[" + std::to_string(i++) + "]"));
  }

  if (doc.contains("data")) {
    const json& d = doc.at("data");
    check_keys(d, {"generator", "n", "noise", "turns", "csv", "fractions"}, "data");
    cfg.data.generator = get<std::string>(d, "generator", "data", cfg.data.generator);
    cfg.data.n = get_count(d, "n", "data", cfg.data.n);
    cfg.data.noise = get_real(d, "noise", "data", cfg.data.noise);
    cfg.data.turns = get_real(d, "turns", "data", cfg.data.turns);
    if (d.contains("csv")) cfg.data.csv = resolve(base_dir, get<std::string>(d, "csv", "data", ""));
    if (d.contains("fractions")) {
      const auto f = get<std::vector<double>>(d, "fractions", "data", {});
      if (f.size() != 3) throw ValidationError("data.fractions needs three entries (train, val, test)");
      cfg.data.fractions = {f[0], f[1], f[2]};
    }
    if (cfg.data.generator != "two_moons" && cfg.data.generator != "spirals" && cfg.data.generator != "csv")
      throw ValidationError("data.generator must be two_moons, spirals or csv");
    if (cfg.data.generator == "csv" && cfg.data.csv.empty()) throw ValidationError("data.csv is required for the csv generator");
  }
  double total = 0.0;
  for (double f : cfg.data.fractions) {
    if (!(f > 0.0)) throw ValidationError("data.fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("data.fractions must sum to 1");

  SearchOptions& s = cfg.search;
  if (doc.contains("search")) {
    const json& j = doc.at("search");
    check_keys(j, {"total_meta_steps", "pairs_per_step", "warmup_fraction", "meta_lr", "baseline_momentum",
                   "entropy_weight", "reward", "inner_steps", "val_batch_size", "train_batch_size",
                   "default_learning_rate", "parallel"},
               "search");
    s.total_meta_steps = get_count(j, "total_meta_steps", "search", s.total_meta_steps);
    s.pairs_per_step = get_count(j, "pairs_per_step", "search", s.pairs_per_step);
    s.meta.warmup_fraction = get_real(j, "warmup_fraction", "search", s.meta.warmup_fraction);
    s.meta.meta_lr = get_real(j, "meta_lr", "search", s.meta.meta_lr);
    s.meta.baseline_momentum = get_real(j, "baseline_momentum", "search", s.meta.baseline_momentum);
    s.meta.entropy_weight = get_real(j, "entropy_weight", "search", s.meta.entropy_weight);
    s.trainer.inner_steps = get_count(j, "inner_steps", "search", s.trainer.inner_steps);
    s.trainer.learning_rate = get_real(j, "default_learning_rate", "search", s.trainer.learning_rate);
    s.val_batch_size = get_count(j, "val_batch_size", "search", s.val_batch_size);
    s.train_batch_size = get_count(j, "train_batch_size", "search", s.train_batch_size);
    s.parallel = get<bool>(j, "parallel", "search", s.parallel);
    if (j.contains("reward")) {
      const json& r = j.at("reward");
      check_keys(r, {"mode", "beta", "target_cost"}, "search.reward");
      const std::string mode = get<std::string>(r, "mode", "search.reward", "plain");
      if (mode == "cost_aware")
        s.reward.mode = RewardMode::cost_aware;
      else if (mode != "plain")
        throw ValidationError("search.reward.mode must be 'plain' or 'cost_aware'");
      s.reward.beta = get_real(r, "beta", "search.reward", s.reward.beta);
      s.reward.target_cost = get_real(r, "target_cost", "search.reward", s.reward.target_cost);
    }
  }
  s.seed = cfg.seed;
  s.meta.total_meta_steps = s.total_meta_steps;
  s.validate();

  RetrainOptions& rt = cfg.retrain;
  if (doc.contains("retrain")) {
    const json& j = doc.at("retrain");
    check_keys(j, {"epochs", "batch_size"}, "retrain");
    rt.epochs = get_count(j, "epochs", "retrain", rt.epochs);
    rt.batch_size = get_count(j, "batch_size", "retrain", rt.batch_size);
  }
  if (rt.batch_size == 0) throw ValidationError("retrain.batch_size must be >= 1");
  rt.seed = cfg.seed;
  rt.trainer = s.trainer;

  OutputConfig& o = cfg.output;
  if (doc.contains("output")) {
    const json& j = doc.at("output");
    check_keys(j, {"log", "checkpoint", "result", "checkpoint_interval", "record_timing"}, "output");
    o.log = get<std::string>(j, "log", "output", o.log.string());
    o.checkpoint = get<std::string>(j, "checkpoint", "output", o.checkpoint.string());
    o.result = get<std::string>(j, "result", "output", o.result.string());
    o.checkpoint_interval = get_count(j, "checkpoint_interval", "output", o.checkpoint_interval);
    o.record_timing = get<bool>(j, "record_timing", "output", o.record_timing);
  }
  o.log = resolve(base_dir, o.log.string());
  o.checkpoint = resolve(base_dir, o.checkpoint.string());
  o.result = resolve(base_dir, o.result.string());

  // Layer shapes depend on the data's width, so build_space_for() finishes
  // the space checks.
  for (const HyperConfig& h : cfg.space.hyperparameters)
    if (!is_known_hyperparameter(h.name)) throw ValidationError("unknown hyperparameter '" + h.name + "'");
  return cfg;
}

EngineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

Dataset load_dataset(const EngineConfig& config) {
  const DataConfig& d = config.data;
  if (d.generator == "two_moons") return two_moons(d.n, d.noise, config.seed);
  if (d.generator == "spirals") return spirals(d.n, d.turns, d.noise, config.seed);
  return load_csv(d.csv);
}

SearchSpace build_space_for(const EngineConfig& config, const Dataset& data) {
  SpaceConfig sc = config.space;
  sc.input_width = data.width();
  sc.classes = data.classes();
  return build_space(sc);
}

}  // namespace autohas
