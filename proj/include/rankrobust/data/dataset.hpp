#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankrobust/common.hpp"

namespace rankrobust {

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Per-feature affine map x -> (x - mean) / scale, fitted on the train split.
struct Standardization {
  Vector mean;
  Vector scale;
};

struct Dataset {
  Matrix features;                  // samples x features
  std::vector<std::size_t> labels;  // 0 or 1
  std::vector<std::string> feature_names;
  SplitIndices split;
  std::string provenance;
  std::vector<std::size_t> signal_features;  // planted by synth_gaussian, empty otherwise
  std::optional<Standardization> standardization;

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  Vector sample(std::size_t i) const { return features.row(static_cast<Eigen::Index>(i)).transpose(); }
  Matrix rows(const std::vector<std::size_t>& idx) const;
  std::vector<std::size_t> labels_of(const std::vector<std::size_t>& idx) const;

  /// Labels in {0, 1}, finite features, consistent names; splits disjoint
  /// and covering when present.
  void validate() const;
};

/// Header row required; every column except `label_column` is a feature.
Dataset load_csv(const std::string& path, const std::string& label_column = "label");

/// Shortest round-trip decimal for every value.
void write_csv(const Dataset& ds, const std::string& path, const std::string& label_column = "label");

/// Seeded shuffle, then consecutive blocks. Sizes are floor(r * N) with the
/// remainder going to train first, then val.
Dataset split(const Dataset& ds, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Fits on the train split (all rows when there is none) and applies to all rows.
Dataset standardize(const Dataset& ds);

struct SynthOptions {
  std::size_t signal_features = 4;  // size of the planted subset, capped at n_features
  double noise = 1.0;               // per-coordinate standard deviation
};

/// Balanced two-cluster Gaussian data with class means at +-(separation / 2) u,
/// where u is a seeded random unit vector supported on the planted subset.
Dataset synth_gaussian(std::size_t n_features, std::size_t n_samples, double separation,
                       std::uint64_t seed, const SynthOptions& opt = {});

/// Split indices, standardization and planted features.
nlohmann::json sidecar_json(const Dataset& ds);
void apply_sidecar(Dataset& ds, const nlohmann::json& j);
void save_sidecar(const Dataset& ds, const std::string& path);
void load_sidecar(Dataset& ds, const std::string& path);

}  // namespace rankrobust
