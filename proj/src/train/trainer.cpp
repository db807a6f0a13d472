#include "rankrobust/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "rankrobust/attack/pgd.hpp"
#include "rankrobust/eval/metrics.hpp"
#include "rankrobust/net/checkpoint.hpp"
#include "rankrobust/train/regularizer.hpp"

namespace rankrobust {

nlohmann::json TrainedModel::metadata() const {
  return {{"spec", to_json(spec)},
          {"selected_epoch", epoch},
          {"val_auc", val_auc},
          {"val_patk", val_patk},
          {"auc_threshold", auc_threshold},
          {"threshold_met", threshold_met}};
}

double validation_patk(const Mlp& m, const Matrix& xs, const TrainSpec& spec, std::size_t jobs) {
  std::size_t count = static_cast<std::size_t>(xs.rows());
  if (spec.val_attack_samples > 0) count = std::min(count, spec.val_attack_samples);
  if (count == 0 || spec.val_attack_iters == 0) return 1.0;
  AttackConfig cfg;
  cfg.epsilon = spec.val_attack_epsilon;
  cfg.max_iters = spec.val_attack_iters;
  cfg.step = spec.val_attack_epsilon / static_cast<double>(spec.val_attack_iters);
  cfg.kappa = 1e-4;
  std::vector<double> patk(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    patk[i] = er_attack(m, xs.row(static_cast<Eigen::Index>(i)).transpose(), spec.k, cfg, spec.explain).final_patk();
  });
  return std::accumulate(patk.begin(), patk.end(), 0.0) / static_cast<double>(count);
}

void write_training_log(const std::vector<EpochLog>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write training log '" + path + "'");
  out << "epoch,train_loss,reg_value,val_auc,val_patk\n" << std::setprecision(10);
  for (const auto& e : log)
    out << e.epoch << ',' << e.train_loss << ',' << e.reg_value << ',' << e.val_auc << ',' << e.val_patk << '\n';
}

namespace {

constexpr std::size_t kChunk = 16;

Mlp initial_model(const TrainSpec& spec, std::size_t n) {
  if (!spec.retrain_from.empty()) {
    const Checkpoint ck = load_checkpoint(spec.retrain_from);
    if (ck.model.input_dim() != n) throw ConfigError("retrain_from: checkpoint input width does not match the data");
    return Mlp(ck.model.layers(), spec.activation(), ck.model.seed());
  }
  std::vector<std::size_t> dims{n};
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(1);
  return Mlp(dims, spec.activation(), spec.seed);
}

struct BatchResult {
  WeightGrad grad;
  double loss = 0.0;
  double reg = 0.0;
};

// Sum of per-sample gradients over `idx`, reduced in a fixed chunk order so
// the result does not depend on the thread count.
BatchResult batch_gradient(const Mlp& m, const Dataset& ds, const std::vector<std::size_t>& idx,
                           const TrainSpec& spec, std::size_t jobs) {
  const bool reg = spec.uses_regularizer() &&
                   ((spec.uses_gap() && spec.lambda1 > 0.0) || (spec.uses_hessian() && spec.lambda2 > 0.0));
  const std::size_t chunks = (idx.size() + kChunk - 1) / kChunk;
  std::vector<BatchResult> parts(chunks);
  parallel_for(chunks, jobs, [&](std::size_t c) {
    BatchResult& r = parts[c];
    r.grad = WeightGrad::zeros_like(m);
    const std::size_t end = std::min(idx.size(), (c + 1) * kChunk);
    for (std::size_t q = c * kChunk; q < end; ++q) {
      const std::size_t i = idx[q];
      Vector x = ds.sample(i);
      const std::size_t y = ds.labels[i];
      if (spec.method == Method::at) x = fast_at_step(m, x, spec.k, spec.at_epsilon, spec.explain);
      r.loss += m.loss(x, y);
      r.grad += m.grad_weights(x, y);
      if (reg) {
        r.reg += regularizer_value(m, x, spec);
        r.grad += regularizer_weight_grad(m, x, spec);
      }
    }
  });
  BatchResult total;
  total.grad = WeightGrad::zeros_like(m);
  for (const auto& p : parts) {
    total.grad += p.grad;
    total.loss += p.loss;
    total.reg += p.reg;
  }
  return total;
}

void add_weight_decay(WeightGrad& g, const Mlp& m, double wd) {
  for (std::size_t l = 0; l < g.layers.size(); ++l) {
    g.layers[l].weight += wd * m.layers()[l].weight;
    g.layers[l].bias += wd * m.layers()[l].bias;
  }
}

}  // namespace

TrainedModel train(const TrainSpec& spec, const Dataset& ds, const TrainOptions& opt) {
  spec.validate();
  ds.validate();
  if (ds.split.train.empty() || ds.split.val.empty()) throw ConfigError("train: dataset needs train and val splits");
  if (spec.k >= ds.dim()) throw ConfigError("k: must be smaller than the feature count");

  Mlp m = initial_model(spec, ds.dim());
  const Matrix xv = ds.rows(ds.split.val);
  const std::vector<std::size_t> yv = ds.labels_of(ds.split.val);
  const std::size_t ntrain = ds.split.train.size();
  const std::size_t batch = spec.batch_size > 0 ? spec.batch_size : (ntrain <= 10000 ? ntrain : 128);

  std::vector<EpochLog> log;
  std::vector<Mlp> snapshots;
  double best_auc = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= spec.max_epochs; ++epoch) {
    std::vector<std::size_t> order = ds.split.train;
    if (batch < ntrain) {
      Rng rng(derive_seed(spec.seed, epoch));
      const std::vector<std::size_t> perm = rng.permutation(ntrain);
      for (std::size_t q = 0; q < ntrain; ++q) order[q] = ds.split.train[perm[q]];
    }
    EpochLog e;
    e.epoch = epoch;
    for (std::size_t start = 0; start < ntrain; start += batch) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(ntrain, start + batch)));
      BatchResult b = batch_gradient(m, ds, idx, spec, opt.jobs);
      const double nb = static_cast<double>(idx.size());
      b.grad *= 1.0 / nb;
      if (spec.method == Method::wd) add_weight_decay(b.grad, m, spec.weight_decay);
      if (!std::isfinite(b.loss) || !std::isfinite(b.reg) || !b.grad.all_finite())
        throw NumericalError("training '" + to_string(spec.method) + "' diverged at epoch " + std::to_string(epoch));
      e.train_loss += b.loss;
      e.reg_value += b.reg;
      m.apply_update(b.grad, spec.lr);
    }
    e.train_loss /= static_cast<double>(ntrain);
    e.reg_value /= static_cast<double>(ntrain);
    e.val_auc = auc(m, xv, yv);
    e.val_patk = validation_patk(m, xv, spec, opt.jobs);
    log.push_back(e);
    snapshots.push_back(m);
    if (e.val_auc > best_auc) {
      best_auc = e.val_auc;
      since_best = 0;
    } else if (spec.early_stop_patience > 0 && ++since_best >= spec.early_stop_patience) {
      break;
    }
  }

  TrainedModel out;
  out.spec = spec;
  out.auc_threshold = spec.auc_threshold ? *spec.auc_threshold : best_auc - 0.01;
  std::size_t pick = log.size();
  for (std::size_t q = 0; q < log.size(); ++q) {
    if (log[q].val_auc < out.auc_threshold) continue;
    if (pick == log.size() || log[q].val_patk >= log[pick].val_patk) pick = q;
  }
  out.threshold_met = pick != log.size();
  if (!out.threshold_met) {
    pick = 0;
    for (std::size_t q = 1; q < log.size(); ++q)
      if (log[q].val_auc > log[pick].val_auc) pick = q;
  }
  out.model = snapshots[pick];
  out.epoch = log[pick].epoch;
  out.val_auc = log[pick].val_auc;
  out.val_patk = log[pick].val_patk;
  out.log = std::move(log);
  if (!opt.checkpoint_path.empty()) save_checkpoint(opt.checkpoint_path, out.model, out.metadata());
  if (!opt.log_path.empty()) write_training_log(out.log, opt.log_path);
  return out;
}

}  // namespace rankrobust
