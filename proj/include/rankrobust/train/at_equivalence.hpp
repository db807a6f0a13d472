#pragma once

#include <cstdint>

#include "rankrobust/explain/saliency.hpp"

namespace rankrobust {

/// Linearized adversarial-training objective sum_t l_t (I_t(x) + J_t . delta_t),
/// where l_t = +1 on the top k and -1 elsewhere and J_t is row t of dI/dx.
/// Over the family where a single delta_t lies in the eps ball and the rest
/// are zero, the minimum is nu = sum_t l_t I_t(x) - eps max_t ||J_t||_2.
struct AtEquivalence {
  double nu = 0.0;               // closed form
  double corner_min = 0.0;       // min over t of the objective at delta_t = -eps l_t J_t / ||J_t||
  std::size_t corner_feature = 0;
  double search_min = 0.0;       // best of the random draws
  std::size_t draws = 0;
};

AtEquivalence at_equivalence(const SaliencyField& f, const Vector& x, std::size_t k, double eps,
                             std::size_t draws = 100000, std::uint64_t seed = 0);

}  // namespace rankrobust
