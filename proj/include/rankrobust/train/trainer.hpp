#pragma once

#include <string>
#include <vector>

#include "rankrobust/data/dataset.hpp"
#include "rankrobust/net/mlp.hpp"
#include "rankrobust/train/train_spec.hpp"

namespace rankrobust {

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean classification loss before the update
  double reg_value = 0.0;   // mean regularizer before the update
  double val_auc = 0.0;
  double val_patk = 0.0;    // under the quick validation attack
};

struct TrainedModel {
  Mlp model;
  TrainSpec spec;
  std::size_t epoch = 0;  // selected epoch
  double val_auc = 0.0;
  double val_patk = 0.0;
  double auc_threshold = 0.0;
  bool threshold_met = false;  // false: fell back to the best-AUC epoch
  std::vector<EpochLog> log;

  /// Spec snapshot plus selection metadata, stored with the checkpoint.
  nlohmann::json metadata() const;
};

struct TrainOptions {
  std::size_t jobs = 1;
  std::string checkpoint_path;  // written when non-empty
  std::string log_path;         // CSV written when non-empty
};

/// Gradient descent on the classification loss plus the method's regularizer.
///
/// Every epoch is scored on the validation split (AUC and P@k under a short
/// ERAttack). The returned model is the epoch with the highest validation P@k
/// among those whose AUC reaches the threshold, the later epoch winning ties.
/// Training stops early once validation AUC has not improved for
/// early_stop_patience epochs. Throws NumericalError on a non-finite loss.
TrainedModel train(const TrainSpec& spec, const Dataset& ds, const TrainOptions& opt = {});

/// Validation P@k of `m` under the spec's quick attack.
double validation_patk(const Mlp& m, const Matrix& xs, const TrainSpec& spec, std::size_t jobs = 1);

void write_training_log(const std::vector<EpochLog>& log, const std::string& path);

}  // namespace rankrobust
