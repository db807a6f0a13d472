#include "rankrobust/net/spectral.hpp"

#include <cmath>

namespace rankrobust {

SpectralResult power_iteration(const LinearOperator& apply, std::size_t dim, std::size_t iters,
                               double tol) {
  if (dim == 0) throw std::invalid_argument("power_iteration: dimension must be positive");
  Rng rng(0x9e3779b97f4a7c15ULL ^ dim);
  Vector v = rng.normal_vector(dim);
  v.normalize();

  SpectralResult res;
  double prev = -1.0;
  for (std::size_t it = 1; it <= iters; ++it) {
    Vector w = apply(v);
    const double norm = w.norm();
    res.iterations = it;
    res.vector = v;
    res.eigenvalue = v.dot(w);
    res.value = norm;
    if (norm == 0.0) return res;
    // ||Av|| converges to |lambda_max| even when +-lambda both occur.
    const double est = norm;
    v = w / norm;
    if (prev >= 0.0 && std::abs(est - prev) <= tol * std::max(1.0, est)) break;
    prev = est;
  }
  res.vector = v;
  res.eigenvalue = v.dot(apply(v));
  return res;
}

double spectral_norm(const LinearOperator& apply, std::size_t dim, std::size_t iters, double tol) {
  return power_iteration(apply, dim, iters, tol).value;
}

double spectral_norm(const Matrix& a, std::size_t iters, double tol) {
  require(a.rows() == a.cols(), "spectral_norm: matrix must be square");
  return spectral_norm([&](const Vector& v) { return Vector(a * v); },
                       static_cast<std::size_t>(a.rows()), iters, tol);
}

}  // namespace rankrobust
