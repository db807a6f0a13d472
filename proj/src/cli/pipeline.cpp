#include "rankrobust/cli/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "rankrobust/attack/tr_moo.hpp"
#include "rankrobust/net/checkpoint.hpp"
#include "rankrobust/train/trainer.hpp"

namespace rankrobust {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rethrows module errors with the method or attack they came from.
template <class F>
auto with_context(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(what + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(what + ": " + e.what());
  } catch (const MissingArtifact& e) {
    throw MissingArtifact(what + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingArtifact("missing artifact: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

// Every write goes through here so paths stay under the run directory.
class Writer {
 public:
  explicit Writer(const RunContext& ctx) : ctx_(ctx) {}

  fs::path path(const std::string& rel) const {
    const fs::path p = (ctx_.out / rel).lexically_normal();
    const fs::path rel_check = p.lexically_relative(ctx_.out.lexically_normal());
    if (rel_check.empty() || *rel_check.begin() == "..") throw ConfigError("refusing to write outside the run: " + rel);
    fs::create_directories(p.parent_path());
    return p;
  }

  void text(const std::string& rel, const std::string& body) {
    std::ofstream out(path(rel), std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (ctx_.out / rel).string());
    out << body;
    written_.push_back(rel);
  }

  // For files the modules write themselves.
  void adopt(const std::string& rel) { written_.push_back(rel); }

  /// Merges the digests of this command's files into manifest.json.
  void finish() {
    const fs::path mp = ctx_.out / "manifest.json";
    json m = fs::exists(mp) ? read_json(mp) : json::object();
    m["config_digest"] = fnv1a_hex(config_to_json(ctx_.config).dump());
    if (!m.contains("artifacts")) m["artifacts"] = json::object();
    for (const auto& rel : written_) m["artifacts"][rel] = fnv1a_hex(read_text(ctx_.out / rel));
    std::ofstream out(mp, std::ios::binary);
    out << m.dump(2) << '\n';
  }

 private:
  const RunContext& ctx_;
  std::vector<std::string> written_;
};

std::string csv(const std::vector<std::vector<std::string>>& rows) {
  std::string s;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) s += (c ? "," : "") + r[c];
    s += '\n';
  }
  return s;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

double mean(const std::vector<double>& v) {
  return v.empty() ? kNaN : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string checkpoint_rel(const std::string& method) { return "checkpoints/" + method + ".json"; }
std::string trace_rel(const std::string& method, const std::string& attack) {
  return "attacks/" + method + "__" + attack + ".jsonl";
}

struct EvalRows {
  std::vector<std::size_t> ids;
  Matrix xs;
  std::vector<std::size_t> ys;
};

EvalRows eval_rows(const ExperimentConfig& c, const Dataset& ds) {
  EvalRows r;
  r.ids = ds.split.test;
  if (c.eval_samples > 0 && c.eval_samples < r.ids.size()) r.ids.resize(c.eval_samples);
  if (r.ids.empty()) throw ConfigError("dataset: the test split is empty");
  r.xs = ds.rows(r.ids);
  r.ys = ds.labels_of(r.ids);
  return r;
}

Vector row(const Matrix& xs, std::size_t i) { return xs.row(static_cast<Eigen::Index>(i)).transpose(); }

struct SampleResult {
  AttackTrace trace;
  std::optional<std::size_t> first_flip;
};

SampleResult run_attack(const Mlp& m, const Vector& x, std::size_t k, const AttackEntry& a, std::uint64_t seed,
                        const ExplainOptions& opt) {
  AttackConfig cfg = a.config;
  cfg.seed = seed;
  SampleResult r;
  switch (a.kind) {
    case AttackKind::er:
      r.trace = er_attack(m, x, k, cfg, opt);
      break;
    case AttackKind::mse:
      r.trace = mse_attack(m, x, k, cfg, opt);
      break;
    case AttackKind::tr_moo: {
      TrMooTrace t = tr_moo_attack(m, x, k, a.tr_moo, opt);
      t.trace.first_flip_iter = t.first_flip_iter;
      r.trace = std::move(t.trace);
      break;
    }
  }
  r.first_flip = r.trace.first_flip_iter;
  return r;
}

std::vector<SampleResult> attack_all(const RunContext& ctx, const Mlp& m, const EvalRows& rows,
                                     const AttackEntry& a, const ExplainOptions& opt) {
  std::vector<SampleResult> out(rows.ids.size());
  parallel_for(rows.ids.size(), ctx.jobs, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(ctx.config.seed + a.config.seed, rows.ids[i]);
    out[i] = run_attack(m, row(rows.xs, i), ctx.config.k, a, seed, opt);
  });
  return out;
}

json trace_line(const std::string& method, const std::string& attack, std::size_t id, const SampleResult& r,
                std::size_t stride) {
  const AttackTrace& t = r.trace;
  json iter = json::array(), patk = json::array(), obj = json::array(), delta = json::array(),
       flips = json::array(), pred = json::array();
  for (std::size_t q = 0; q < t.records.size(); ++q) {
    if (q % stride != 0 && q + 1 != t.records.size()) continue;
    const IterationRecord& rec = t.records[q];
    iter.push_back(rec.iter);
    patk.push_back(number(rec.patk));
    obj.push_back(number(rec.objective));
    delta.push_back(number(rec.delta_norm));
    flips.push_back(rec.flipped_pairs);
    pred.push_back(rec.prediction);
  }
  return {{"sample_id", id},
          {"method", method},
          {"attack", attack},
          {"first_flip_iter", r.first_flip ? json(*r.first_flip) : json(nullptr)},
          {"final_patk", number(t.final_patk())},
          {"budget_used", number(t.budget_used)},
          {"prediction_changed", t.prediction_changed},
          {"clean_top", t.clean_top},
          {"x_adv", std::vector<double>(t.x_adv.data(), t.x_adv.data() + t.x_adv.size())},
          {"records",
           {{"iter", iter}, {"patk", patk}, {"objective", obj}, {"delta_norm", delta}, {"flipped_pairs", flips},
            {"prediction", pred}}}};
}

struct LoadedTrace {
  std::vector<std::size_t> ids;
  Matrix x_adv;
  std::vector<double> patk;
  std::vector<std::optional<std::size_t>> first_flip;
};

LoadedTrace load_traces(const fs::path& p, const EvalRows& rows) {
  std::istringstream in(read_text(p));
  LoadedTrace t;
  t.x_adv.resize(static_cast<Eigen::Index>(rows.ids.size()), rows.xs.cols());
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (i >= rows.ids.size() || j.at("sample_id").get<std::size_t>() != rows.ids[i])
      throw MissingArtifact(p.string() + ": traces do not match the evaluated rows; rerun attack");
    const auto xa = j.at("x_adv").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(xa.size()) != rows.xs.cols()) throw MissingArtifact(p.string() + ": bad x_adv width");
    for (std::size_t c = 0; c < xa.size(); ++c) t.x_adv(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = xa[c];
    t.patk.push_back(number(j.at("final_patk")));
    const json& ff = j.at("first_flip_iter");
    t.first_flip.push_back(ff.is_null() ? std::nullopt : std::optional<std::size_t>(ff.get<std::size_t>()));
    t.ids.push_back(rows.ids[i]);
    ++i;
  }
  if (i != rows.ids.size()) throw MissingArtifact(p.string() + ": expected " + std::to_string(rows.ids.size()) + " traces");
  return t;
}

const AttackEntry* first_of_kind(const ExperimentConfig& c, AttackKind kind) {
  for (const auto& a : c.attacks)
    if (a.kind == kind) return &a;
  return nullptr;
}

Mlp load_model(const RunContext& ctx, const std::string& method) {
  return load_checkpoint((ctx.out / checkpoint_rel(method)).string()).model;
}

std::string opt_index(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : ""; }

EvalRow eval_row_from_json(const json& j) {
  EvalRow r;
  r.method = j.at("method").get<std::string>();
  r.patk_er = number(j.at("patk_er"));
  r.patk_mse = number(j.at("patk_mse"));
  r.cauc = number(j.at("cauc"));
  r.aauc = number(j.at("aauc"));
  r.sensitivity = number(j.at("sensitivity"));
  r.dffot = number(j.at("dffot"));
  r.comp = number(j.at("comp"));
  r.suff = number(j.at("suff"));
  r.model_thickness = number(j.at("model_thickness"));
  r.hessian_norm_mean = number(j.at("hessian_norm_mean"));
  return r;
}

json eval_row_to_json(const EvalRow& r) {
  return {{"method", r.method},
          {"patk_er", number(r.patk_er)},
          {"patk_mse", number(r.patk_mse)},
          {"cauc", number(r.cauc)},
          {"aauc", number(r.aauc)},
          {"sensitivity", number(r.sensitivity)},
          {"dffot", number(r.dffot)},
          {"comp", number(r.comp)},
          {"suff", number(r.suff)},
          {"model_thickness", number(r.model_thickness)},
          {"hessian_norm_mean", number(r.hessian_norm_mean)}};
}

double safe_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  try {
    return correlation(a, b);
  } catch (const std::exception&) {
    return kNaN;  // constant input, e.g. no sample ever flips
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

RunContext make_context(const ExperimentConfig& c, std::size_t jobs, const std::string& output_override) {
  c.validate();
  RunContext ctx;
  ctx.config = c;
  ctx.jobs = std::max<std::size_t>(1, jobs);
  std::string out = c.output_dir;
  if (const char* env = std::getenv(kOutputRootEnv); env && *env) out = env;
  if (!output_override.empty()) out = output_override;
  ctx.out = fs::path(out);
  ctx.config.output_dir = out;
  return ctx;
}

Dataset load_dataset(const DatasetConfig& d) {
  Dataset ds;
  if (d.source == "csv") {
    ds = load_csv(d.path, d.label_column);
  } else {
    SynthOptions so;
    so.signal_features = d.signal_features;
    so.noise = d.noise;
    ds = synth_gaussian(d.n_features, d.n_samples, d.separation, d.seed, so);
  }
  ds = split(ds, d.split, d.split_seed);
  if (d.standardize) ds = standardize(ds);
  ds.validate();
  return ds;
}

void cmd_train(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const Dataset ds = with_context("dataset", [&] { return load_dataset(c.dataset); });
  Writer w(ctx);
  w.text("config.json", config_to_json(c).dump(2) + "\n");
  w.text("data/sidecar.json", sidecar_json(ds).dump(2) + "\n");

  std::map<std::string, double> val_auc;
  for (const MethodConfig& m : c.methods) {
    with_context("method '" + m.name + "'", [&] {
      TrainSpec spec = m.spec;
      if (!m.retrain_from_method.empty()) {
        spec.retrain_from = (ctx.out / checkpoint_rel(m.retrain_from_method)).string();
        if (!spec.auc_threshold) spec.auc_threshold = val_auc.at(m.retrain_from_method) - 0.01;
      }
      TrainOptions opt;
      opt.jobs = ctx.jobs;
      opt.checkpoint_path = w.path(checkpoint_rel(m.name)).string();
      opt.log_path = w.path("logs/" + m.name + ".csv").string();
      const TrainedModel tm = train(spec, ds, opt);
      val_auc[m.name] = tm.val_auc;
      w.adopt(checkpoint_rel(m.name));
      w.adopt("logs/" + m.name + ".csv");
    });
  }
  w.finish();
}

void cmd_attack(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const Dataset ds = with_context("dataset", [&] { return load_dataset(c.dataset); });
  const EvalRows rows = eval_rows(c, ds);
  Writer w(ctx);
  std::vector<std::vector<std::string>> summary = {
      {"method", "attack", "samples", "mean_patk", "flip_rate", "mean_first_flip_iter", "max_budget_used", "epsilon",
       "sensitivity"}};
  for (const MethodConfig& m : c.methods) {
    const Mlp model = with_context("method '" + m.name + "'", [&] { return load_model(ctx, m.name); });
    std::vector<std::vector<std::string>> samples = {
        {"sample_id", "attack", "patk_final", "first_flip_iter", "budget_used", "sensitivity_flag"}};
    for (const AttackEntry& a : c.attacks) {
      const auto results = with_context("method '" + m.name + "', attack '" + a.name + "'",
                                        [&] { return attack_all(ctx, model, rows, a, m.spec.explain); });
      std::string lines;
      std::vector<double> patk, flip_iter;
      double max_budget = 0.0, changed = 0.0, flipped = 0.0;
      for (std::size_t i = 0; i < results.size(); ++i) {
        const SampleResult& r = results[i];
        lines += trace_line(m.name, a.name, rows.ids[i], r, c.trace_stride).dump() + "\n";
        samples.push_back({std::to_string(rows.ids[i]), a.name, format_number(r.trace.final_patk()),
                           opt_index(r.first_flip), format_number(r.trace.budget_used),
                           r.trace.prediction_changed ? "1" : "0"});
        patk.push_back(r.trace.final_patk());
        if (r.first_flip) {
          flipped += 1.0;
          flip_iter.push_back(static_cast<double>(*r.first_flip));
        }
        max_budget = std::max(max_budget, r.trace.budget_used);
        changed += r.trace.prediction_changed ? 1.0 : 0.0;
      }
      w.text(trace_rel(m.name, a.name), lines);
      const double n = static_cast<double>(results.size());
      summary.push_back({m.name, a.name, std::to_string(results.size()), format_number(mean(patk)),
                         format_number(flipped / n), format_number(mean(flip_iter)), format_number(max_budget),
                         format_number(a.config.epsilon), format_number(changed / n)});
    }
    w.text("attacks/" + m.name + ".csv", csv(samples));
  }
  w.text("attacks/summary.csv", csv(summary));
  w.finish();
}

void cmd_thickness(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const Dataset ds = with_context("dataset", [&] { return load_dataset(c.dataset); });
  const EvalRows rows = eval_rows(c, ds);
  Writer w(ctx);
  std::vector<std::vector<std::string>> summary = {
      {"method", "estimator", "neighborhood", "k", "samples", "mean", "std", "hessian_norm_mean"}};
  for (const MethodConfig& m : c.methods) {
    with_context("method '" + m.name + "'", [&] {
      const Mlp model = load_model(ctx, m.name);
      NeighborhoodSpec nb = c.thickness.neighborhood;
      if (nb.kind == NeighborhoodKind::adversarial)
        nb.adversary = adversarial_neighborhood(model, c.k, c.attack(c.thickness.attack).config, m.spec.explain);
      const ThicknessReport rep =
          model_thickness(model, rows.xs, c.k, nb, m.spec.explain, c.thickness.estimator, ctx.jobs);
      std::vector<double> hess(rows.ids.size());
      parallel_for(rows.ids.size(), ctx.jobs, [&](std::size_t i) {
        const Vector x = row(rows.xs, i);
        hess[i] = model.hessian_input(x, model.predict(x), m.spec.explain.output).hessian.norm();
      });
      std::vector<std::vector<std::string>> per = {{"sample_id", "thickness", "std_error", "hessian_norm"}};
      for (std::size_t i = 0; i < rows.ids.size(); ++i)
        per.push_back({std::to_string(rows.ids[i]), format_number(rep.values[i]), format_number(rep.std_errors[i]),
                       format_number(hess[i])});
      w.text("thickness/" + m.name + ".csv", csv(per));
      summary.push_back({m.name, to_string(rep.estimator), to_string(rep.neighborhood), std::to_string(c.k),
                         std::to_string(rows.ids.size()), format_number(rep.mean), format_number(rep.std),
                         format_number(mean(hess))});
    });
  }
  w.text("thickness/summary.csv", csv(summary));
  w.finish();
}

void cmd_eval(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const Dataset ds = with_context("dataset", [&] { return load_dataset(c.dataset); });
  const EvalRows rows = eval_rows(c, ds);
  const AttackEntry* er = first_of_kind(c, AttackKind::er);
  const AttackEntry* mse = first_of_kind(c, AttackKind::mse);
  const AttackEntry& primary = er ? *er : c.attacks.front();

  EvalReport rep;
  for (const MethodConfig& m : c.methods) {
    with_context("method '" + m.name + "'", [&] {
      const Mlp model = load_model(ctx, m.name);
      EvalRow r;
      r.method = m.name;
      r.cauc = auc(model, rows.xs, rows.ys);

      const LoadedTrace pt = load_traces(ctx.out / trace_rel(m.name, primary.name), rows);
      r.aauc = adversarial_auc(model, rows.xs, pt.x_adv, rows.ys);
      r.sensitivity = sensitivity(model, rows.xs, pt.x_adv);
      r.patk_er = er ? mean(pt.patk) : kNaN;
      r.patk_mse = mse ? mean(load_traces(ctx.out / trace_rel(m.name, mse->name), rows).patk) : kNaN;

      std::vector<double> df(rows.ids.size()), co(rows.ids.size()), su(rows.ids.size());
      parallel_for(rows.ids.size(), ctx.jobs, [&](std::size_t i) {
        const Vector x = row(rows.xs, i);
        ExplainerSpec spec = c.explainer;
        spec.seed = derive_seed(c.explainer.seed, rows.ids[i]);
        const SaliencyMap s = explain(model, x, spec, m.spec.explain);
        df[i] = dffot(model, x, s);
        co[i] = comp(model, x, s);
        su[i] = suff(model, x, s);
      });
      r.dffot = mean(df);
      r.comp = mean(co);
      r.suff = mean(su);

      // Per-sample thickness and Hessian norm, in row order.
      std::istringstream in(read_text(ctx.out / ("thickness/" + m.name + ".csv")));
      std::string line;
      std::getline(in, line);
      std::vector<double> thick, hess;
      while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
        if (cells.size() != 4) throw MissingArtifact("thickness/" + m.name + ".csv: malformed row");
        thick.push_back(std::stod(cells[1]));
        hess.push_back(std::stod(cells[3]));
      }
      if (thick.size() != rows.ids.size())
        throw MissingArtifact("thickness/" + m.name + ".csv: row count does not match; rerun thickness");
      r.model_thickness = mean(thick);
      r.hessian_norm_mean = mean(hess);
      rep.rows.push_back(r);

      // Unflipped samples are censored one past the iteration budget.
      std::vector<double> flip;
      for (const auto& f : pt.first_flip)
        flip.push_back(static_cast<double>(f ? *f : primary.config.max_iters + 1));
      CorrelationSummary cs;
      cs.method = m.name;
      cs.flip_vs_thickness = safe_correlation(flip, thick);
      cs.flip_vs_hessian = safe_correlation(flip, hess);
      cs.samples = flip.size();
      rep.correlations.push_back(cs);
    });
  }

  json rows_j = json::array(), corr_j = json::array();
  for (const auto& r : rep.rows) rows_j.push_back(eval_row_to_json(r));
  for (const auto& cs : rep.correlations)
    corr_j.push_back({{"method", cs.method},
                      {"flip_vs_thickness", number(cs.flip_vs_thickness)},
                      {"flip_vs_hessian", number(cs.flip_vs_hessian)},
                      {"samples", cs.samples}});
  Writer w(ctx);
  w.text("eval/report.json", json{{"rows", rows_j}, {"correlations", corr_j}}.dump(2) + "\n");
  w.text("eval/metrics.csv", render_csv(rep));
  w.finish();
}

void cmd_report(const fs::path& run_dir) {
  const fs::path cfg_path = run_dir / "config.json";
  if (!fs::exists(cfg_path)) throw MissingArtifact("incomplete run: missing " + cfg_path.string());
  RunContext ctx;
  ctx.config = config_from_json(read_json(cfg_path));
  ctx.out = run_dir;

  std::vector<std::string> need;
  for (const auto& m : ctx.config.methods) {
    need.push_back(checkpoint_rel(m.name));
    need.push_back("thickness/" + m.name + ".csv");
    for (const auto& a : ctx.config.attacks) need.push_back(trace_rel(m.name, a.name));
  }
  for (const char* f : {"attacks/summary.csv", "thickness/summary.csv", "eval/report.json"}) need.emplace_back(f);
  std::string missing;
  for (const auto& rel : need)
    if (!fs::exists(run_dir / rel)) missing += "\n  " + rel;
  if (!missing.empty()) throw MissingArtifact("incomplete run " + run_dir.string() + ", missing:" + missing);

  const json j = read_json(run_dir / "eval/report.json");
  EvalReport rep;
  for (const auto& r : j.at("rows")) rep.rows.push_back(eval_row_from_json(r));
  for (const auto& cj : j.at("correlations")) {
    CorrelationSummary cs;
    cs.method = cj.at("method").get<std::string>();
    cs.flip_vs_thickness = number(cj.at("flip_vs_thickness"));
    cs.flip_vs_hessian = number(cj.at("flip_vs_hessian"));
    cs.samples = cj.at("samples").get<std::size_t>();
    rep.correlations.push_back(cs);
  }
  Writer w(ctx);
  w.text("report/report.md", render_markdown(rep));
  w.text("report/report.csv", render_csv(rep));
  w.finish();
}

void cmd_sweep(const RunContext& ctx) {
  const ExperimentConfig& c = ctx.config;
  const MethodConfig& base = c.method(c.sweep.method);
  if (c.sweep.lambdas.empty()) throw ConfigError("sweep.lambdas: must not be empty");
  const std::vector<double> kappas = c.sweep.kappas.empty() ? std::vector<double>{base.spec.kappa} : c.sweep.kappas;
  const AttackEntry* er = first_of_kind(c, AttackKind::er);
  if (!er) throw ConfigError("sweep: needs an er attack");
  const Dataset ds = with_context("dataset", [&] { return load_dataset(c.dataset); });
  const EvalRows rows = eval_rows(c, ds);

  std::optional<double> threshold = base.spec.auc_threshold;
  std::string from = base.spec.retrain_from;
  if (!base.retrain_from_method.empty()) {
    const std::string rel = checkpoint_rel(base.retrain_from_method);
    const Checkpoint ck = with_context("sweep", [&] { return load_checkpoint((ctx.out / rel).string()); });
    from = (ctx.out / rel).string();
    if (!threshold) threshold = ck.extra.at("val_auc").get<double>() - 0.01;
  }

  Writer w(ctx);
  std::vector<std::vector<std::string>> summary = {
      {"method", "lambda", "kappa", "selected_epoch", "threshold_met", "val_auc", "test_auc", "patk_er"}};
  for (std::size_t li = 0; li < c.sweep.lambdas.size(); ++li)
    for (std::size_t ki = 0; ki < kappas.size(); ++ki) {
      const double lam = c.sweep.lambdas[li], kap = kappas[ki];
      const std::string tag = base.name + " lambda=" + format_number(lam) + " kappa=" + format_number(kap);
      with_context(tag, [&] {
        TrainSpec spec = base.spec;
        spec.lambda1 = spec.lambda2 = lam;
        spec.kappa = kap;
        spec.retrain_from = from;
        spec.auc_threshold = threshold;
        const std::string rel = "sweep/" + base.name + "__l" + std::to_string(li) + "_k" + std::to_string(ki) + ".json";
        TrainOptions opt;
        opt.jobs = ctx.jobs;
        opt.checkpoint_path = w.path(rel).string();
        const TrainedModel tm = train(spec, ds, opt);
        w.adopt(rel);
        const auto results = attack_all(ctx, tm.model, rows, *er, spec.explain);
        std::vector<double> patk;
        for (const auto& r : results) patk.push_back(r.trace.final_patk());
        summary.push_back({base.name, format_number(lam), format_number(kap), std::to_string(tm.epoch),
                           tm.threshold_met ? "1" : "0", format_number(tm.val_auc),
                           format_number(auc(tm.model, rows.xs, rows.ys)), format_number(mean(patk))});
      });
    }
  w.text("sweep/summary.csv", csv(summary));
  w.finish();
}

void cmd_run(const RunContext& ctx) {
  cmd_train(ctx);
  cmd_attack(ctx);
  cmd_thickness(ctx);
  cmd_eval(ctx);
  cmd_report(ctx.out);
}

std::vector<std::string> summary_files(const ExperimentConfig& c) {
  std::vector<std::string> f = {"attacks/summary.csv", "thickness/summary.csv", "eval/metrics.csv",
                                "report/report.csv"};
  for (const auto& m : c.methods) {
    f.push_back("attacks/" + m.name + ".csv");
    f.push_back("thickness/" + m.name + ".csv");
  }
  return f;
}

}  // namespace rankrobust
