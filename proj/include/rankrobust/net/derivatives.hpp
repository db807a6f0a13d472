#pragma once

#include <functional>

#include "rankrobust/net/mlp.hpp"

namespace rankrobust {

using GradientFn = std::function<Vector(const Vector&)>;

/// (grad(x + kappa v) - grad(x)) / kappa for a unit vector v.
Vector hvp_fd(const GradientFn& grad, const Vector& x, const Vector& v, double kappa);

/// Forward-difference Hessian-vector product of f_c.
Vector hvp_fd(const Mlp& m, const Vector& x, std::size_t c, const Vector& v, double kappa,
              OutputKind kind = OutputKind::probability);

/// grad_w [(f_c(x + kappa v) - f_c(x)) / kappa], an estimate of the mixed
/// derivative grad_w (grad_x f_c . v). Costs two backward passes.
WeightGrad directional_weight_grad(const Mlp& m, const Vector& x, const Vector& v, double kappa,
                                   std::size_t c, OutputKind kind = OutputKind::probability);

/// Throws unless |‖v‖ - 1| <= 1e-8 and kappa > 0.
void check_direction(const Vector& v, double kappa);

}  // namespace rankrobust
