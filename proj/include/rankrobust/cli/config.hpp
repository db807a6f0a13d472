#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankrobust/attack/pgd.hpp"
#include "rankrobust/attack/tr_moo.hpp"
#include "rankrobust/thickness/thickness.hpp"
#include "rankrobust/train/train_spec.hpp"

namespace rankrobust {

struct DatasetConfig {
  std::string source = "synthetic";  // or "csv"
  std::string path;                  // csv only
  std::string label_column = "label";
  std::size_t n_features = 28;
  std::size_t n_samples = 2000;
  double separation = 4.0;
  std::size_t signal_features = 2;
  double noise = 1.0;
  std::uint64_t seed = 7;
  std::array<double, 3> split = {0.7, 0.15, 0.15};
  std::uint64_t split_seed = 7;
  bool standardize = true;
};

struct MethodConfig {
  std::string name;  // file stem of every artifact of this method
  TrainSpec spec;
  // Start from this earlier method's checkpoint; its validation AUC minus
  // 0.01 becomes the threshold unless the spec sets one.
  std::string retrain_from_method;
};

enum class AttackKind { er, mse, tr_moo };
std::string to_string(AttackKind k);
AttackKind parse_attack_kind(const std::string& s);

struct AttackEntry {
  std::string name;
  AttackKind kind = AttackKind::er;
  AttackConfig config;
  TrMooConfig tr_moo;  // tr_moo only; epsilon and max_iters come from config
};

struct ThicknessConfig {
  NeighborhoodSpec neighborhood;
  ThicknessEstimator estimator = ThicknessEstimator::indicator;
  std::string attack = "er";  // ERAttack entry driving the adversarial neighborhood
};

struct SweepConfig {
  std::string method = "r2et";  // entry of the method list used as the base
  std::vector<double> lambdas = {0.0, 0.5, 1.0, 2.0};
  std::vector<double> kappas;   // empty: the base kappa only
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<MethodConfig> methods;
  std::vector<AttackEntry> attacks;
  ThicknessConfig thickness;
  ExplainerSpec explainer;  // for the faithfulness metrics
  std::size_t k = 8;
  std::string output_dir = "runs/default";
  std::uint64_t seed = 0;
  std::size_t eval_samples = 0;  // leading test rows; 0 for all
  std::size_t trace_stride = 10;
  SweepConfig sweep;

  void validate() const;
  const MethodConfig& method(const std::string& name) const;
  const AttackEntry& attack(const std::string& name) const;
};

/// Vanilla and R2ET on the synthetic benchmark, attacked by ERAttack and MSE.
ExperimentConfig default_config();

/// Unknown keys are rejected; missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);

/// Field list with types, defaults and descriptions.
nlohmann::json config_schema();

/// Environment variable that replaces output_dir when set.
inline constexpr const char* kOutputRootEnv = "RANKROBUST_OUTPUT_ROOT";

}  // namespace rankrobust
