#pragma once

#include <functional>

#include "rankrobust/common.hpp"

namespace rankrobust {

struct SpectralResult {
  double value = 0.0;       // largest |eigenvalue|
  double eigenvalue = 0.0;  // signed Rayleigh quotient at the final iterate
  Vector vector;            // unit eigenvector estimate
  std::size_t iterations = 0;
};

using LinearOperator = std::function<Vector(const Vector&)>;

/// Power iteration for a symmetric operator. The start vector is fixed by
/// dim, so repeated calls agree bit for bit. Stops once successive norm
/// estimates differ by less than tol (relative) or after iters sweeps.
SpectralResult power_iteration(const LinearOperator& apply, std::size_t dim,
                               std::size_t iters = 1000, double tol = 1e-10);

double spectral_norm(const LinearOperator& apply, std::size_t dim, std::size_t iters = 1000,
                     double tol = 1e-10);

double spectral_norm(const Matrix& a, std::size_t iters = 1000, double tol = 1e-10);

}  // namespace rankrobust
