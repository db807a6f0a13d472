#pragma once

#include <utility>
#include <vector>

#include "rankrobust/train/train_spec.hpp"

namespace rankrobust {

using PairList = std::vector<std::pair<std::size_t, std::size_t>>;

/// Pairs (i, j) of feature indices, i ranked inside the top k and j outside.
///  all:      every (top, rest) pair.
///  boundary: (rank k - i + 1, rank k + i) for i = 1..k'.
///  min_gap:  the k' pairs of smallest gap with i among the k' lowest-ranked
///            top features and j among the k' highest-ranked others; ties go
///            to the pair of smaller (rank i, rank j).
/// boundary and min_gap need k' <= min(k, n - k).
PairList select_pairs(const SaliencyMap& s, std::size_t k, std::size_t k_prime, PairMode mode);

struct RegularizerTerms {
  double gap_sum = 0.0;  // sum of h over the selected pairs
  double hessian = 0.0;  // method-specific Hessian norm
  double value = 0.0;    // -lambda1 * gap_sum + lambda2 * hessian (weights per method)
};

/// Regularizer for one sample, explained at its predicted class.
RegularizerTerms regularizer_terms(const Mlp& m, const Vector& x, const TrainSpec& spec);
double regularizer_value(const Mlp& m, const Vector& x, const TrainSpec& spec);

/// grad_w of regularizer_value with the pair set and gradient signs held
/// fixed. The gap term costs one directional finite difference; the Hessian
/// terms differentiate the input tangent exactly and difference it along x.
WeightGrad regularizer_weight_grad(const Mlp& m, const Vector& x, const TrainSpec& spec);

/// One signed-gradient step of length eps on the negated gap sum, projected
/// onto the l2 ball of radius eps around x.
Vector fast_at_step(const Mlp& m, const Vector& x, std::size_t k, double eps, const ExplainOptions& opt = {});

}  // namespace rankrobust
