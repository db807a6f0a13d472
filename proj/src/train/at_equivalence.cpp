#include "rankrobust/train/at_equivalence.hpp"

#include <algorithm>
#include <limits>

namespace rankrobust {

AtEquivalence at_equivalence(const SaliencyField& f, const Vector& x, std::size_t k, double eps,
                             std::size_t draws, std::uint64_t seed) {
  const std::size_t n = f.input_dim();
  require(k >= 1 && k < n, "at_equivalence: k must lie in [1, n)");
  require(eps >= 0.0, "at_equivalence: eps must be non-negative");
  const Vector s = f.scores(x);
  const Matrix j = f.jacobian(x);
  Vector l = Vector::Constant(static_cast<Eigen::Index>(n), -1.0);
  for (std::size_t t : top_k(s, k)) l[static_cast<Eigen::Index>(t)] = 1.0;
  const double base = l.dot(s);

  AtEquivalence out;
  double max_row = 0.0;
  for (Eigen::Index t = 0; t < j.rows(); ++t) max_row = std::max(max_row, j.row(t).norm());
  out.nu = base - eps * max_row;

  out.corner_min = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < j.rows(); ++t) {
    const double nr = j.row(t).norm();
    const Vector delta = nr > 0.0 ? Vector(-eps * l[t] * j.row(t).transpose() / nr) : Vector::Zero(j.cols());
    const double val = base + l[t] * j.row(t).dot(delta);
    if (val < out.corner_min) {
      out.corner_min = val;
      out.corner_feature = static_cast<std::size_t>(t);
    }
  }

  Rng rng(seed);
  out.search_min = std::numeric_limits<double>::infinity();
  out.draws = draws;
  for (std::size_t d = 0; d < draws; ++d) {
    const auto t = static_cast<Eigen::Index>(rng.below(n));
    const Vector delta = rng.uniform_ball(n, eps);
    out.search_min = std::min(out.search_min, base + l[t] * j.row(t).dot(delta));
  }
  return out;
}

}  // namespace rankrobust
