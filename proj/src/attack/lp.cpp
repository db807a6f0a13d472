#include "rankrobust/attack/lp.hpp"

#include <cmath>
#include <limits>

namespace rankrobust {

LpResult simplex_max(const Matrix& a, const Vector& b, const Vector& c, std::size_t max_pivots) {
  const Eigen::Index m = a.rows(), n = a.cols();
  require(b.size() == m && c.size() == n, "simplex_max: dimension mismatch");
  require((b.array() >= 0.0).all(), "simplex_max: b must be non-negative");

  // Rows 0..m-1 are constraints, row m holds -c (reduced costs).
  Matrix t = Matrix::Zero(m + 1, n + m + 1);
  t.topLeftCorner(m, n) = a;
  t.block(0, n, m, m).setIdentity();
  t.col(n + m).head(m) = b;
  t.row(m).head(n) = -c.transpose();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  const double eps = 1e-11;
  LpResult res;
  std::size_t degenerate = 0;
  const Eigen::Index cols = n + m;
  while (res.pivots < max_pivots) {
    const bool bland = degenerate > 50;
    Eigen::Index enter = -1;
    double best = -eps;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double rc = t(m, j);
      if (rc < best) {
        enter = j;
        if (bland) break;
        best = rc;
      }
    }
    if (enter < 0) {
      res.optimal = true;
      break;
    }
    Eigen::Index leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double aij = t(i, enter);
      if (aij > eps) {
        const double r = t(i, cols) / aij;
        if (r < ratio - 1e-15 ||
            (r <= ratio + 1e-15 && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          ratio = r;
          leave = i;
        }
      }
    }
    if (leave < 0) {
      res.unbounded = true;
      break;
    }
    degenerate = ratio <= 1e-15 ? degenerate + 1 : 0;
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t(i, enter);
      if (f != 0.0) t.row(i) -= f * t.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
    ++res.pivots;
  }

  res.x = Vector::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index v = basis[static_cast<std::size_t>(i)];
    if (v < n) res.x[v] = std::max(0.0, t(i, cols));
  }
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace rankrobust
