#pragma once

#include <string>
#include <vector>

#include "rankrobust/common.hpp"

namespace rankrobust {

/// How the Lagrange weights (gamma_0 on the ranking objective, gamma_k on
/// the prediction constraints) evolve during a constrained attack.
enum class MultiplierScheme { none, fixed, gda, hedge, qp };

std::string to_string(MultiplierScheme s);
MultiplierScheme parse_scheme(const std::string& s);

/// Starting weights for m = 1 + #constraints entries: (1, 0, ..., 0) for
/// none, uniform otherwise.
Vector initial_multipliers(MultiplierScheme s, std::size_t m);

/// Euclidean projection onto the probability simplex (sort-based).
Vector project_simplex(const Vector& v);

/// One dual update.
///  gda:   gamma_k += rate * g_k for k >= 1, clipped at 0; gamma_0 takes the
///         remainder of the unit mass (constraints rescaled if they exceed it).
///  hedge: gamma * exp(rate * g), renormalized (computed in log space).
///  none, fixed: unchanged. qp is not a dual step; see qp_weights.
Vector multiplier_step(MultiplierScheme s, const Vector& gamma, const Vector& g, double rate);

struct QpResult {
  Vector gamma;
  double objective = 0.0;  // 0.5 ||sum gamma_k grad_k||^2
  std::size_t iterations = 0;
};

/// Simplex-constrained minimizer of ||sum_k gamma_k grads_k||^2 by projected
/// gradient with step 1/L, stopping when successive iterates move less than
/// tol (max-norm).
QpResult qp_weights(const std::vector<Vector>& grads, double tol = 1e-8, std::size_t max_iters = 200000);

}  // namespace rankrobust
