#pragma once

#include "rankrobust/common.hpp"

namespace rankrobust {

struct LpResult {
  Vector x;
  double objective = 0.0;
  bool optimal = false;
  bool unbounded = false;
  std::size_t pivots = 0;
};

/// Dense tableau simplex for  max c^T x  s.t.  A x <= b, x >= 0, with b >= 0
/// so the slack basis is feasible. Dantzig pricing, switching to Bland's
/// rule after a run of degenerate pivots to rule out cycling.
LpResult simplex_max(const Matrix& a, const Vector& b, const Vector& c, std::size_t max_pivots = 20000);

}  // namespace rankrobust
