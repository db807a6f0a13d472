#include "rankrobust/net/derivatives.hpp"

#include <cmath>

namespace rankrobust {

void check_direction(const Vector& v, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  if (std::abs(v.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("finite-difference direction must have unit norm");
}

Vector hvp_fd(const GradientFn& grad, const Vector& x, const Vector& v, double kappa) {
  check_direction(v, kappa);
  require(v.size() == x.size(), "hvp_fd: direction dimension mismatch");
  const Vector xp = x + kappa * v;
  return (grad(xp) - grad(x)) / kappa;
}

Vector hvp_fd(const Mlp& m, const Vector& x, std::size_t c, const Vector& v, double kappa,
              OutputKind kind) {
  return hvp_fd([&](const Vector& y) { return m.grad_input(y, c, kind); }, x, v, kappa);
}

WeightGrad directional_weight_grad(const Mlp& m, const Vector& x, const Vector& v, double kappa,
                                   std::size_t c, OutputKind kind) {
  check_direction(v, kappa);
  require(v.size() == x.size(), "directional_weight_grad: direction dimension mismatch");
  const Vector xp = x + kappa * v;
  WeightGrad g = m.grad_output_weights(xp, c, kind);
  g -= m.grad_output_weights(x, c, kind);
  g *= 1.0 / kappa;
  return g;
}

}  // namespace rankrobust
