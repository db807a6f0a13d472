#include "rankrobust/train/train_spec.hpp"

#include <array>
#include <set>
#include <utility>

namespace rankrobust {

namespace {

constexpr std::array<std::pair<Method, const char*>, 11> kMethods{{
    {Method::vanilla, "vanilla"},
    {Method::wd, "wd"},
    {Method::sp, "sp"},
    {Method::est_h, "est_h"},
    {Method::exact_h, "exact_h"},
    {Method::ssr, "ssr"},
    {Method::at, "at"},
    {Method::r2et, "r2et"},
    {Method::r2et_noh, "r2et_noH"},
    {Method::r2et_mm, "r2et_mm"},
    {Method::r2et_mm_noh, "r2et_mm_noH"},
}};

}  // namespace

std::string to_string(Method m) {
  for (const auto& [k, name] : kMethods)
    if (k == m) return name;
  return "vanilla";
}

Method parse_method(const std::string& s) {
  for (const auto& [k, name] : kMethods)
    if (s == name) return k;
  throw ConfigError("method: unknown method '" + s + "'");
}

std::string to_string(GapForm g) { return g == GapForm::linear ? "linear" : "exponential"; }

GapForm parse_gap_form(const std::string& s) {
  if (s == "linear") return GapForm::linear;
  if (s == "exponential") return GapForm::exponential;
  throw ConfigError("gap_form: unknown form '" + s + "'");
}

std::string to_string(PairMode p) {
  switch (p) {
    case PairMode::all:
      return "all";
    case PairMode::boundary:
      return "boundary";
    case PairMode::min_gap:
      return "min_gap";
  }
  return "all";
}

PairMode parse_pair_mode(const std::string& s) {
  if (s == "all") return PairMode::all;
  if (s == "boundary") return PairMode::boundary;
  if (s == "min_gap") return PairMode::min_gap;
  throw ConfigError("pair_mode: unknown mode '" + s + "'");
}

bool TrainSpec::uses_gap() const {
  switch (method) {
    case Method::r2et:
    case Method::r2et_noh:
    case Method::r2et_mm:
    case Method::r2et_mm_noh:
      return true;
    default:
      return false;
  }
}

bool TrainSpec::uses_hessian() const {
  switch (method) {
    case Method::est_h:
    case Method::exact_h:
    case Method::ssr:
    case Method::r2et:
    case Method::r2et_mm:
      return true;
    default:
      return false;
  }
}

bool TrainSpec::uses_regularizer() const { return uses_gap() || uses_hessian(); }

PairMode TrainSpec::pair_mode_or_default() const {
  if (pair_mode) return *pair_mode;
  if (method == Method::r2et_mm || method == Method::r2et_mm_noh) return PairMode::min_gap;
  return gap_form == GapForm::exponential ? PairMode::boundary : PairMode::all;
}

Activation TrainSpec::activation() const {
  return method == Method::sp ? Activation::softplus(softplus_rho) : Activation::leaky_relu(leaky_slope);
}

void TrainSpec::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("lambda1/lambda2: must be non-negative");
  if (!(kappa > 0.0)) throw ConfigError("kappa: must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay: must be non-negative");
  if (!(softplus_rho > 0.0)) throw ConfigError("softplus_rho: must be positive");
  if (method == Method::at && !(at_epsilon > 0.0)) throw ConfigError("at_epsilon: must be positive");
  if (k < 1) throw ConfigError("k: must be at least 1");
  if (k_prime < 1 || k_prime > k) throw ConfigError("k_prime: must lie in [1, k]");
  if (!(lr > 0.0)) throw ConfigError("lr: must be positive");
  if (max_epochs < 1) throw ConfigError("max_epochs: must be at least 1");
  if (hidden.empty()) throw ConfigError("hidden: need at least one hidden layer");
  for (std::size_t h : hidden)
    if (h < 1) throw ConfigError("hidden: layer widths must be positive");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky_slope: must lie in [0, 1)");
  if (!(val_attack_epsilon > 0.0)) throw ConfigError("val_attack_epsilon: must be positive");
  if (auc_threshold && !(*auc_threshold >= 0.0 && *auc_threshold <= 1.0))
    throw ConfigError("auc_threshold: must lie in [0, 1]");
}

nlohmann::json to_json(const TrainSpec& s) {
  nlohmann::json j;
  j["method"] = to_string(s.method);
  j["lambda1"] = s.lambda1;
  j["lambda2"] = s.lambda2;
  j["kappa"] = s.kappa;
  j["weight_decay"] = s.weight_decay;
  j["softplus_rho"] = s.softplus_rho;
  j["at_epsilon"] = s.at_epsilon;
  j["k"] = s.k;
  j["k_prime"] = s.k_prime;
  j["pair_mode"] = to_string(s.pair_mode_or_default());
  j["gap_form"] = to_string(s.gap_form);
  j["lr"] = s.lr;
  j["max_epochs"] = s.max_epochs;
  j["early_stop_patience"] = s.early_stop_patience;
  j["seed"] = s.seed;
  j["auc_threshold"] = s.auc_threshold ? nlohmann::json(*s.auc_threshold) : nlohmann::json(nullptr);
  j["retrain_from"] = s.retrain_from;
  j["hidden"] = s.hidden;
  j["leaky_slope"] = s.leaky_slope;
  j["batch_size"] = s.batch_size;
  j["postprocess"] = to_string(s.explain.postprocess);
  j["output"] = s.explain.output == OutputKind::logit ? "logit" : "probability";
  j["val_attack_iters"] = s.val_attack_iters;
  j["val_attack_epsilon"] = s.val_attack_epsilon;
  j["val_attack_samples"] = s.val_attack_samples;
  return j;
}

TrainSpec train_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train spec: expected an object");
  static const std::set<std::string> known{
      "method", "lambda1", "lambda2", "kappa", "weight_decay", "softplus_rho", "at_epsilon", "k", "k_prime",
      "pair_mode", "gap_form", "lr", "max_epochs", "early_stop_patience", "seed", "auc_threshold",
      "retrain_from", "hidden", "leaky_slope", "batch_size", "postprocess", "output", "val_attack_iters",
      "val_attack_epsilon", "val_attack_samples"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("train spec: unknown field '" + key + "'");

  TrainSpec s;
  auto get = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    try {
      dst = j.at(key).get<std::decay_t<decltype(dst)>>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string(key) + ": wrong type");
    }
  };
  std::string str;
  if (j.contains("method")) {
    get("method", str);
    s.method = parse_method(str);
  }
  get("lambda1", s.lambda1);
  get("lambda2", s.lambda2);
  get("kappa", s.kappa);
  get("weight_decay", s.weight_decay);
  get("softplus_rho", s.softplus_rho);
  get("at_epsilon", s.at_epsilon);
  get("k", s.k);
  get("k_prime", s.k_prime);
  if (j.contains("pair_mode")) {
    get("pair_mode", str);
    s.pair_mode = parse_pair_mode(str);
  }
  if (j.contains("gap_form")) {
    get("gap_form", str);
    s.gap_form = parse_gap_form(str);
  }
  get("lr", s.lr);
  get("max_epochs", s.max_epochs);
  get("early_stop_patience", s.early_stop_patience);
  get("seed", s.seed);
  if (j.contains("auc_threshold") && !j["auc_threshold"].is_null()) {
    double t = 0.0;
    get("auc_threshold", t);
    s.auc_threshold = t;
  }
  get("retrain_from", s.retrain_from);
  get("hidden", s.hidden);
  get("leaky_slope", s.leaky_slope);
  get("batch_size", s.batch_size);
  if (j.contains("postprocess")) {
    get("postprocess", str);
    s.explain.postprocess = parse_postprocess(str);
  }
  if (j.contains("output")) {
    get("output", str);
    if (str == "logit") s.explain.output = OutputKind::logit;
    else if (str == "probability") s.explain.output = OutputKind::probability;
    else throw ConfigError("output: expected 'probability' or 'logit'");
  }
  get("val_attack_iters", s.val_attack_iters);
  get("val_attack_epsilon", s.val_attack_epsilon);
  get("val_attack_samples", s.val_attack_samples);
  s.validate();
  return s;
}

}  // namespace rankrobust
