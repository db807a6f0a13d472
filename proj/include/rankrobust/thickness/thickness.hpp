#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rankrobust/explain/saliency.hpp"

namespace rankrobust {

enum class NeighborhoodKind { uniform_ball, gaussian, adversarial };

std::string to_string(NeighborhoodKind k);
NeighborhoodKind parse_neighborhood(const std::string& s);

/// Maps a clean input and a draw index to a perturbed input.
using Adversary = std::function<Vector(const Vector& x, std::size_t draw)>;

/// Distribution of the far endpoint x' of each sampled segment x -> x'.
struct NeighborhoodSpec {
  NeighborhoodKind kind = NeighborhoodKind::uniform_ball;
  double radius = 0.1;  // uniform_ball
  double sigma = 0.1;   // gaussian
  std::size_t m1 = 20;  // endpoints
  std::size_t m2 = 10;  // midpoint-rule nodes per segment
  std::uint64_t seed = 0;
  Adversary adversary;  // adversarial

  void validate() const;

  /// The m1 endpoints for x, in draw order.
  std::vector<Vector> endpoints(const Vector& x) const;
};

struct ThicknessEstimate {
  double value = 0.0;
  double std_error = 0.0;  // across the m1 endpoints
};

enum class ThicknessEstimator { relaxed, indicator };

std::string to_string(ThicknessEstimator e);
ThicknessEstimator parse_estimator(const std::string& s);

/// h(x, i, j) = I_i - I_j.
double gap(const SaliencyMap& s, std::size_t i, std::size_t j);
double gap(const Vector& scores, std::size_t i, std::size_t j);

/// Fraction of the tube on which I_i >= I_j.
ThicknessEstimate pairwise_thickness_indicator(const SaliencyField& sal, const Vector& x, std::size_t i,
                                               std::size_t j, const NeighborhoodSpec& nb);
ThicknessEstimate pairwise_thickness_indicator(const Mlp& m, const Vector& x, std::size_t i,
                                               std::size_t j, const NeighborhoodSpec& nb,
                                               const ExplainOptions& opt = {});

/// Mean gap I_i - I_j over the tube.
ThicknessEstimate pairwise_thickness_relaxed(const SaliencyField& sal, const Vector& x, std::size_t i,
                                             std::size_t j, const NeighborhoodSpec& nb);
ThicknessEstimate pairwise_thickness_relaxed(const Mlp& m, const Vector& x, std::size_t i,
                                             std::size_t j, const NeighborhoodSpec& nb,
                                             const ExplainOptions& opt = {});

/// Mean pairwise thickness over every (top-k, rest) pair of the clean
/// ranking. The relaxed form is evaluated through the collapsed direction.
ThicknessEstimate topk_thickness(const SaliencyField& sal, const Vector& x, std::size_t k,
                                 const NeighborhoodSpec& nb,
                                 ThicknessEstimator estimator = ThicknessEstimator::relaxed);
ThicknessEstimate topk_thickness(const Mlp& m, const Vector& x, std::size_t k,
                                 const NeighborhoodSpec& nb, const ExplainOptions& opt = {},
                                 ThicknessEstimator estimator = ThicknessEstimator::relaxed);

struct ThicknessBounds {
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
  double hessian_gap_norm = 0.0;  // ||H_i - H_j||_2 at x
  double lipschitz_i = 0.0;       // sampled max of ||H_i|| over the ball
  double lipschitz_j = 0.0;
};

/// lower = h - eps ||H_i - H_j|| / 2 and upper = h + eps (L_i + L_j), where
/// H_t is the gradient of I_t. L_t is the max of ||H_t|| over x and
/// l_samples uniform points of the eps-ball, so it can only under-estimate
/// the true local maximum.
ThicknessBounds thickness_bounds(const SaliencyField& sal, const Vector& x, std::size_t i,
                                 std::size_t j, double eps, std::size_t l_samples = 50,
                                 std::uint64_t seed = 0);
ThicknessBounds thickness_bounds(const Mlp& m, const Vector& x, std::size_t i, std::size_t j,
                                 double eps, std::size_t l_samples = 50, std::uint64_t seed = 0,
                                 const ExplainOptions& opt = {});

struct ThicknessReport {
  std::vector<double> values;
  std::vector<double> std_errors;
  double mean = 0.0;
  double std = 0.0;
  ThicknessEstimator estimator = ThicknessEstimator::relaxed;
  NeighborhoodKind neighborhood = NeighborhoodKind::uniform_ball;
  std::size_t k = 0;
  std::string pair_policy = "all";
};

/// Per-sample top-k thickness over the rows of xs and its mean and sample
/// standard deviation. Each sample gets its own RNG stream derived from
/// nb.seed and its row index.
ThicknessReport model_thickness(const Mlp& m, const Matrix& xs, std::size_t k,
                                const NeighborhoodSpec& nb, const ExplainOptions& opt = {},
                                ThicknessEstimator estimator = ThicknessEstimator::relaxed,
                                std::size_t jobs = 1);

struct EmpiricalRisks {
  double r01 = 0.0;
  double r_phi_u = 0.0;
  double r01_u = 0.0;
};

/// phi_u(a) = clamp(1 - a/u, 0, 1).
double phi_u(double a, double u);

/// Ranking risks averaged over the k(n-k) (top-k, rest) pairs of `top`.
EmpiricalRisks empirical_risks(const Vector& scores, const std::vector<std::size_t>& top, double u);
/// Pairs taken from the map's own ranking.
EmpiricalRisks empirical_risks(const SaliencyMap& s, std::size_t k, double u);

/// All (top, rest) pairs in (rank of i, rank of j) lexicographic order.
std::vector<std::pair<std::size_t, std::size_t>> topk_pairs(const std::vector<std::size_t>& order,
                                                            std::size_t k);

}  // namespace rankrobust
