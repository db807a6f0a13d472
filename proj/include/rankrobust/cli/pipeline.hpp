#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rankrobust/cli/config.hpp"
#include "rankrobust/data/dataset.hpp"
#include "rankrobust/eval/metrics.hpp"

namespace rankrobust {

/// A resolved run: the config, its output directory and the worker count.
///
/// Run directory layout:
///   config.json, manifest.json, data/sidecar.json
///   checkpoints/<method>.json, logs/<method>.csv
///   attacks/<method>__<attack>.jsonl, attacks/<method>.csv, attacks/summary.csv
///   thickness/<method>.csv, thickness/summary.csv
///   eval/report.json, eval/metrics.csv
///   report/report.md, report/report.csv
///   sweep/summary.csv, sweep/<method>__l<i>_k<j>.json
struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out;
  std::size_t jobs = 1;
};

/// Output directory precedence: explicit override, then the environment
/// variable, then the config.
RunContext make_context(const ExperimentConfig& c, std::size_t jobs = 1, const std::string& output_override = "");

Dataset load_dataset(const DatasetConfig& d);

/// Trains every method in order; writes checkpoints, logs and config.json.
void cmd_train(const RunContext& ctx);
/// Attacks the leading test rows of every checkpoint with every attack.
void cmd_attack(const RunContext& ctx);
/// Per-sample top-k thickness and input-Hessian norm of every checkpoint.
void cmd_thickness(const RunContext& ctx);
/// Accuracy, faithfulness and robustness metrics plus the correlations of
/// the first-flip iteration with thickness and with the Hessian norm.
void cmd_eval(const RunContext& ctx);
/// Renders report/report.md and report/report.csv from a completed run.
/// Throws MissingArtifact listing every absent input.
void cmd_report(const std::filesystem::path& run_dir);
/// Retrains the sweep base method over the lambda and kappa grids and
/// records ERAttack P@k per grid point.
void cmd_sweep(const RunContext& ctx);
/// train, attack, thickness, eval and report in sequence.
void cmd_run(const RunContext& ctx);

/// Shortest round-trip decimal; "nan" and "inf" spelled out.
std::string format_number(double v);

/// Relative paths of the summary tables whose bytes must not depend on jobs
/// or on reruns.
std::vector<std::string> summary_files(const ExperimentConfig& c);

}  // namespace rankrobust
