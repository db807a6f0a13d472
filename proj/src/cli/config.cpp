#include "rankrobust/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <utility>

namespace rankrobust {

using nlohmann::json;

namespace {

// Strict reader over one JSON object: unknown keys and wrong types are
// config errors naming the offending field.
class Fields {
 public:
  Fields(const json& j, std::string where, std::set<std::string> known) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ConfigError(where_ + ": expected an object");
    for (const auto& [key, _] : j.items())
      if (!known.count(key)) throw ConfigError(where_ + ": unknown field '" + key + "'");
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string path(const char* key) const { return where_ + "." + key; }

  template <class T>
  void get(const char* key, T& dst) const {
    if (!j_.contains(key)) return;
    try {
      dst = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key) + ": wrong type");
    }
  }

  template <class E, class Parse>
  void get_enum(const char* key, E& dst, Parse parse) const {
    if (!j_.contains(key)) return;
    std::string s;
    get(key, s);
    try {
      dst = parse(s);
    } catch (const std::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

 private:
  const json& j_;
  std::string where_;
};

void check_name(const std::string& name, const std::string& where) {
  static const std::regex ok("[A-Za-z0-9_-]+");
  if (!std::regex_match(name, ok))
    throw ConfigError(where + ": '" + name + "' must be non-empty letters, digits, '_' or '-'");
}

DatasetConfig dataset_from_json(const json& j) {
  const Fields f(j, "dataset",
                 {"source", "path", "label_column", "n_features", "n_samples", "separation", "signal_features",
                  "noise", "seed", "split", "split_seed", "standardize"});
  DatasetConfig d;
  f.get("source", d.source);
  f.get("path", d.path);
  f.get("label_column", d.label_column);
  f.get("n_features", d.n_features);
  f.get("n_samples", d.n_samples);
  f.get("separation", d.separation);
  f.get("signal_features", d.signal_features);
  f.get("noise", d.noise);
  f.get("seed", d.seed);
  f.get("split", d.split);
  f.get("split_seed", d.split_seed);
  f.get("standardize", d.standardize);
  return d;
}

json dataset_to_json(const DatasetConfig& d) {
  return {{"source", d.source},          {"path", d.path},
          {"label_column", d.label_column}, {"n_features", d.n_features},
          {"n_samples", d.n_samples},    {"separation", d.separation},
          {"signal_features", d.signal_features}, {"noise", d.noise},
          {"seed", d.seed},              {"split", d.split},
          {"split_seed", d.split_seed},  {"standardize", d.standardize}};
}

MethodConfig method_from_json(const json& j, std::size_t index, std::size_t k) {
  const std::string where = "methods[" + std::to_string(index) + "]";
  const Fields f(j, where, {"name", "spec", "retrain_from_method"});
  MethodConfig m;
  json spec = f.has("spec") ? f.at("spec") : json::object();
  if (!spec.is_object()) throw ConfigError(f.path("spec") + ": expected an object");
  if (!spec.contains("k")) spec["k"] = k;
  if (!spec.contains("k_prime")) spec["k_prime"] = std::min(TrainSpec{}.k_prime, spec["k"].is_number_unsigned() ? spec["k"].get<std::size_t>() : k);
  try {
    m.spec = train_spec_from_json(spec);
  } catch (const ConfigError& e) {
    throw ConfigError(f.path("spec") + ": " + e.what());
  }
  m.name = to_string(m.spec.method);
  f.get("name", m.name);
  f.get("retrain_from_method", m.retrain_from_method);
  return m;
}

AttackEntry attack_from_json(const json& j, std::size_t index) {
  const std::string where = "attacks[" + std::to_string(index) + "]";
  const Fields f(j, where,
                 {"name", "kind", "step", "max_iters", "epsilon", "linf_cap", "scheme", "multiplier_rate", "seed",
                  "kappa", "eps_f", "delta1", "eta", "gamma", "crit_tol", "min_radius", "adjacent_pairs",
                  "objective_scale"});
  AttackEntry a;
  f.get_enum("kind", a.kind, parse_attack_kind);
  a.name = to_string(a.kind);
  f.get("name", a.name);
  AttackConfig& c = a.config;
  f.get("step", c.step);
  f.get("max_iters", c.max_iters);
  f.get("epsilon", c.epsilon);
  f.get("linf_cap", c.linf_cap);
  f.get_enum("scheme", c.scheme, parse_scheme);
  f.get("multiplier_rate", c.multiplier_rate);
  f.get("seed", c.seed);
  f.get("kappa", c.kappa);
  TrMooConfig& t = a.tr_moo;
  f.get("eps_f", t.eps_f);
  f.get("delta1", t.delta1);
  f.get("eta", t.eta);
  f.get("gamma", t.gamma);
  f.get("crit_tol", t.crit_tol);
  f.get("min_radius", t.min_radius);
  f.get("adjacent_pairs", t.adjacent_pairs);
  f.get("objective_scale", t.objective_scale);
  if (a.kind == AttackKind::tr_moo) {
    t.epsilon = c.epsilon;
    t.max_iters = f.has("max_iters") ? c.max_iters : t.max_iters;
    c.max_iters = t.max_iters;
  }
  return a;
}

json attack_to_json(const AttackEntry& a) {
  const AttackConfig& c = a.config;
  json j = {{"name", a.name},         {"kind", to_string(a.kind)},
            {"step", c.step},         {"max_iters", c.max_iters},
            {"epsilon", c.epsilon},   {"linf_cap", c.linf_cap},
            {"scheme", to_string(c.scheme)}, {"multiplier_rate", c.multiplier_rate},
            {"seed", c.seed},         {"kappa", c.kappa}};
  if (a.kind == AttackKind::tr_moo) {
    const TrMooConfig& t = a.tr_moo;
    j["eps_f"] = t.eps_f;
    j["delta1"] = t.delta1;
    j["eta"] = t.eta;
    j["gamma"] = t.gamma;
    j["crit_tol"] = t.crit_tol;
    j["min_radius"] = t.min_radius;
    j["adjacent_pairs"] = t.adjacent_pairs;
    j["objective_scale"] = t.objective_scale;
  }
  return j;
}

ThicknessConfig thickness_from_json(const json& j) {
  const Fields f(j, "thickness", {"neighborhood", "radius", "sigma", "m1", "m2", "seed", "estimator", "attack"});
  ThicknessConfig t;
  f.get_enum("neighborhood", t.neighborhood.kind, parse_neighborhood);
  f.get("radius", t.neighborhood.radius);
  f.get("sigma", t.neighborhood.sigma);
  f.get("m1", t.neighborhood.m1);
  f.get("m2", t.neighborhood.m2);
  f.get("seed", t.neighborhood.seed);
  f.get_enum("estimator", t.estimator, parse_estimator);
  f.get("attack", t.attack);
  return t;
}

json thickness_to_json(const ThicknessConfig& t) {
  const NeighborhoodSpec& n = t.neighborhood;
  return {{"neighborhood", to_string(n.kind)}, {"radius", n.radius}, {"sigma", n.sigma},
          {"m1", n.m1}, {"m2", n.m2}, {"seed", n.seed},
          {"estimator", to_string(t.estimator)}, {"attack", t.attack}};
}

ExplainerSpec explainer_from_json(const json& j) {
  const Fields f(j, "explainer", {"kind", "samples", "sigma", "steps", "seed"});
  ExplainerSpec e;
  f.get_enum("kind", e.kind, parse_explainer);
  f.get("samples", e.samples);
  f.get("sigma", e.sigma);
  f.get("steps", e.steps);
  f.get("seed", e.seed);
  return e;
}

json explainer_to_json(const ExplainerSpec& e) {
  return {{"kind", to_string(e.kind)}, {"samples", e.samples}, {"sigma", e.sigma}, {"steps", e.steps},
          {"seed", e.seed}};
}

SweepConfig sweep_from_json(const json& j) {
  const Fields f(j, "sweep", {"method", "lambdas", "kappas"});
  SweepConfig s;
  f.get("method", s.method);
  f.get("lambdas", s.lambdas);
  f.get("kappas", s.kappas);
  return s;
}

}  // namespace

std::string to_string(AttackKind k) {
  switch (k) {
    case AttackKind::er:
      return "er";
    case AttackKind::mse:
      return "mse";
    case AttackKind::tr_moo:
      return "tr_moo";
  }
  return "er";
}

AttackKind parse_attack_kind(const std::string& s) {
  if (s == "er") return AttackKind::er;
  if (s == "mse") return AttackKind::mse;
  if (s == "tr_moo") return AttackKind::tr_moo;
  throw ConfigError("unknown attack kind '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (dataset.source != "synthetic" && dataset.source != "csv")
    throw ConfigError("dataset.source: expected 'synthetic' or 'csv'");
  if (dataset.source == "csv" && dataset.path.empty()) throw ConfigError("dataset.path: required for csv");
  if (methods.empty()) throw ConfigError("methods: at least one method is required");
  if (attacks.empty()) throw ConfigError("attacks: at least one attack is required");
  if (k == 0) throw ConfigError("k: must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
  if (trace_stride == 0) throw ConfigError("trace_stride: must be positive");

  std::set<std::string> seen;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const MethodConfig& m = methods[i];
    const std::string where = "methods[" + std::to_string(i) + "]";
    check_name(m.name, where + ".name");
    if (!seen.insert(m.name).second) throw ConfigError(where + ".name: duplicate '" + m.name + "'");
    try {
      m.spec.validate();
    } catch (const std::exception& e) {
      throw ConfigError(where + ".spec: " + e.what());
    }
    if (!m.retrain_from_method.empty()) {
      if (!seen.count(m.retrain_from_method) || m.retrain_from_method == m.name)
        throw ConfigError(where + ".retrain_from_method: '" + m.retrain_from_method +
                          "' must name an earlier method");
      if (!m.spec.retrain_from.empty())
        throw ConfigError(where + ": retrain_from and retrain_from_method are exclusive");
    }
  }
  seen.clear();
  for (std::size_t i = 0; i < attacks.size(); ++i) {
    const AttackEntry& a = attacks[i];
    const std::string where = "attacks[" + std::to_string(i) + "]";
    check_name(a.name, where + ".name");
    if (!seen.insert(a.name).second) throw ConfigError(where + ".name: duplicate '" + a.name + "'");
    try {
      a.config.validate();
      if (a.kind == AttackKind::tr_moo) a.tr_moo.validate();
    } catch (const std::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  if (thickness.neighborhood.m1 == 0 || thickness.neighborhood.m2 == 0)
    throw ConfigError("thickness: m1 and m2 must be positive");
  if (thickness.neighborhood.kind == NeighborhoodKind::adversarial && attack(thickness.attack).kind != AttackKind::er)
    throw ConfigError("thickness.attack: '" + thickness.attack + "' must be an er attack");
}

const MethodConfig& ExperimentConfig::method(const std::string& name) const {
  for (const auto& m : methods)
    if (m.name == name) return m;
  throw ConfigError("no method named '" + name + "'");
}

const AttackEntry& ExperimentConfig::attack(const std::string& name) const {
  for (const auto& a : attacks)
    if (a.name == name) return a;
  throw ConfigError("no attack named '" + name + "'");
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  MethodConfig vanilla;
  vanilla.name = "vanilla";
  vanilla.spec.seed = 3;
  MethodConfig r2et;
  r2et.name = "r2et";
  r2et.spec.method = Method::r2et;
  r2et.spec.seed = 3;
  r2et.spec.max_epochs = 10;
  r2et.retrain_from_method = "vanilla";
  c.methods = {vanilla, r2et};

  AttackEntry er;
  er.name = "er";
  AttackEntry mse;
  mse.name = "mse";
  mse.kind = AttackKind::mse;
  c.attacks = {er, mse};

  c.thickness.neighborhood.kind = NeighborhoodKind::adversarial;
  c.thickness.neighborhood.m1 = 1;
  c.thickness.neighborhood.m2 = 10;
  return c;
}

ExperimentConfig config_from_json(const json& j) {
  const Fields f(j, "config",
                 {"dataset", "methods", "attacks", "thickness", "explainer", "k", "output_dir", "seed",
                  "eval_samples", "trace_stride", "sweep"});
  const ExperimentConfig defaults = default_config();
  ExperimentConfig c;
  f.get("k", c.k);
  f.get("output_dir", c.output_dir);
  f.get("seed", c.seed);
  f.get("eval_samples", c.eval_samples);
  f.get("trace_stride", c.trace_stride);
  if (f.has("dataset")) c.dataset = dataset_from_json(f.at("dataset"));
  if (f.has("methods")) {
    if (!f.at("methods").is_array()) throw ConfigError("methods: expected an array");
    for (std::size_t i = 0; i < f.at("methods").size(); ++i)
      c.methods.push_back(method_from_json(f.at("methods")[i], i, c.k));
  } else {
    c.methods = defaults.methods;
    for (auto& m : c.methods) {
      m.spec.k = c.k;
      m.spec.k_prime = std::min(m.spec.k_prime, c.k);
    }
  }
  if (f.has("attacks")) {
    if (!f.at("attacks").is_array()) throw ConfigError("attacks: expected an array");
    for (std::size_t i = 0; i < f.at("attacks").size(); ++i) c.attacks.push_back(attack_from_json(f.at("attacks")[i], i));
  } else {
    c.attacks = defaults.attacks;
  }
  c.thickness = f.has("thickness") ? thickness_from_json(f.at("thickness")) : defaults.thickness;
  if (f.has("explainer")) c.explainer = explainer_from_json(f.at("explainer"));
  if (f.has("sweep")) c.sweep = sweep_from_json(f.at("sweep"));
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (const auto& m : c.methods)
    methods.push_back({{"name", m.name}, {"spec", to_json(m.spec)}, {"retrain_from_method", m.retrain_from_method}});
  json attacks = json::array();
  for (const auto& a : c.attacks) attacks.push_back(attack_to_json(a));
  return {{"dataset", dataset_to_json(c.dataset)},
          {"methods", methods},
          {"attacks", attacks},
          {"thickness", thickness_to_json(c.thickness)},
          {"explainer", explainer_to_json(c.explainer)},
          {"k", c.k},
          {"output_dir", c.output_dir},
          {"seed", c.seed},
          {"eval_samples", c.eval_samples},
          {"trace_stride", c.trace_stride},
          {"sweep", {{"method", c.sweep.method}, {"lambdas", c.sweep.lambdas}, {"kappas", c.sweep.kappas}}}};
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("config not found: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

json config_schema() {
  static const std::vector<std::pair<std::string, std::string>> docs = {
      {"/dataset/source", "synthetic (two Gaussian clusters) or csv"},
      {"/dataset/path", "CSV file with a header row, csv only"},
      {"/dataset/label_column", "name of the 0/1 label column"},
      {"/dataset/n_features", "synthetic: input dimension"},
      {"/dataset/n_samples", "synthetic: balanced sample count"},
      {"/dataset/separation", "synthetic: distance between the class means"},
      {"/dataset/signal_features", "synthetic: features carrying the mean shift"},
      {"/dataset/noise", "synthetic: per-coordinate standard deviation"},
      {"/dataset/seed", "synthetic: generator seed"},
      {"/dataset/split", "train, validation and test fractions"},
      {"/dataset/split_seed", "shuffle seed of the split"},
      {"/dataset/standardize", "fit mean and scale on train and apply to all rows"},
      {"/methods", "methods to compare; each has name, spec (training fields) and retrain_from_method"},
      {"/attacks", "attacks run on every method; kind is er, mse or tr_moo (tr_moo adds eps_f, delta1, eta, "
                   "gamma, crit_tol, min_radius, adjacent_pairs, objective_scale)"},
      {"/thickness/neighborhood", "uniform_ball, gaussian or adversarial"},
      {"/thickness/radius", "uniform_ball radius"},
      {"/thickness/sigma", "gaussian standard deviation"},
      {"/thickness/m1", "segments per sample"},
      {"/thickness/m2", "midpoint nodes per segment"},
      {"/thickness/seed", "endpoint seed"},
      {"/thickness/estimator", "indicator (fraction kept) or relaxed (mean gap)"},
      {"/thickness/attack", "er attack whose endpoint closes each adversarial segment"},
      {"/explainer/kind", "simple, smoothgrad or integrated_gradients, for the faithfulness metrics"},
      {"/explainer/samples", "SmoothGrad draws"},
      {"/explainer/sigma", "SmoothGrad noise standard deviation"},
      {"/explainer/steps", "integrated gradients Riemann steps"},
      {"/explainer/seed", "SmoothGrad seed"},
      {"/k", "size of the top-k set"},
      {"/output_dir", std::string("run directory; replaced by $") + kOutputRootEnv + " when set"},
      {"/seed", "global seed mixed into per-sample attack streams"},
      {"/eval_samples", "leading test rows to attack and evaluate, 0 for all"},
      {"/trace_stride", "keep every n-th iteration in the trace files"},
      {"/sweep/method", "base method of the sweep"},
      {"/sweep/lambdas", "values given to both lambda1 and lambda2"},
      {"/sweep/kappas", "finite-difference steps, empty for the base value"}};

  const json defaults = config_to_json(default_config());
  json fields = json::object();
  for (const auto& [ptr, text] : docs) {
    const json& v = defaults.at(json::json_pointer(ptr));
    fields[ptr] = {{"type", v.type_name()}, {"default", v}, {"description", text}};
  }
  const json spec = to_json(TrainSpec{});
  json train = json::object();
  for (const auto& [key, v] : spec.items()) train[key] = {{"type", v.type_name()}, {"default", v}};
  return {{"fields", fields}, {"method_spec_fields", train}, {"example", defaults}};
}

}  // namespace rankrobust
