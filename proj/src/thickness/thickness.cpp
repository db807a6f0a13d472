#include "rankrobust/thickness/thickness.hpp"

#include <algorithm>
#include <cmath>

namespace rankrobust {

std::string to_string(NeighborhoodKind k) {
  switch (k) {
    case NeighborhoodKind::uniform_ball:
      return "uniform_ball";
    case NeighborhoodKind::gaussian:
      return "gaussian";
    case NeighborhoodKind::adversarial:
      return "adversarial";
  }
  return "uniform_ball";
}

NeighborhoodKind parse_neighborhood(const std::string& s) {
  if (s == "uniform_ball") return NeighborhoodKind::uniform_ball;
  if (s == "gaussian") return NeighborhoodKind::gaussian;
  if (s == "adversarial") return NeighborhoodKind::adversarial;
  throw ConfigError("unknown neighborhood '" + s + "'");
}

std::string to_string(ThicknessEstimator e) {
  return e == ThicknessEstimator::relaxed ? "relaxed" : "indicator";
}

ThicknessEstimator parse_estimator(const std::string& s) {
  if (s == "relaxed") return ThicknessEstimator::relaxed;
  if (s == "indicator") return ThicknessEstimator::indicator;
  throw ConfigError("unknown thickness estimator '" + s + "'");
}

void NeighborhoodSpec::validate() const {
  if (m1 == 0 || m2 == 0) throw std::invalid_argument("neighborhood: M1 and M2 must be positive");
  switch (kind) {
    case NeighborhoodKind::uniform_ball:
      if (!(radius >= 0.0)) throw std::invalid_argument("neighborhood: radius must be non-negative");
      break;
    case NeighborhoodKind::gaussian:
      if (!(sigma >= 0.0)) throw std::invalid_argument("neighborhood: sigma must be non-negative");
      break;
    case NeighborhoodKind::adversarial:
      if (!adversary) throw std::invalid_argument("neighborhood: adversarial kind needs an adversary");
      break;
  }
}

std::vector<Vector> NeighborhoodSpec::endpoints(const Vector& x) const {
  validate();
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(x.size());
  std::vector<Vector> out;
  out.reserve(m1);
  for (std::size_t r = 0; r < m1; ++r) {
    switch (kind) {
      case NeighborhoodKind::uniform_ball:
        out.push_back(x + rng.uniform_ball(n, radius));
        break;
      case NeighborhoodKind::gaussian:
        out.push_back(x + sigma * rng.normal_vector(n));
        break;
      case NeighborhoodKind::adversarial:
        out.push_back(adversary(x, r));
        break;
    }
  }
  return out;
}

double gap(const Vector& scores, std::size_t i, std::size_t j) {
  const auto n = static_cast<std::size_t>(scores.size());
  if (i >= n || j >= n) throw std::invalid_argument("gap: feature index out of range");
  if (i == j) throw std::invalid_argument("gap: indices must differ");
  return scores[static_cast<Eigen::Index>(i)] - scores[static_cast<Eigen::Index>(j)];
}

double gap(const SaliencyMap& s, std::size_t i, std::size_t j) { return gap(s.scores, i, j); }

namespace {

// Averages functional(I(x(t))) over the midpoint nodes of every segment and
// reports the across-segment mean and standard error.
ThicknessEstimate tube_average(const SaliencyField& sal, const Vector& x, const NeighborhoodSpec& nb,
                               const std::function<double(const Vector&)>& functional) {
  const std::vector<Vector> ends = nb.endpoints(x);
  std::vector<double> per;
  per.reserve(ends.size());
  for (const Vector& xe : ends) {
    double acc = 0.0;
    for (std::size_t s = 0; s < nb.m2; ++s) {
      const double t = (static_cast<double>(s) + 0.5) / static_cast<double>(nb.m2);
      acc += functional(sal.scores((1.0 - t) * x + t * xe));
    }
    per.push_back(acc / static_cast<double>(nb.m2));
  }
  ThicknessEstimate est;
  double mean = 0.0;
  for (double v : per) mean += v;
  mean /= static_cast<double>(per.size());
  est.value = mean;
  if (per.size() > 1) {
    double ss = 0.0;
    for (double v : per) ss += (v - mean) * (v - mean);
    est.std_error = std::sqrt(ss / static_cast<double>(per.size() - 1) / static_cast<double>(per.size()));
  }
  return est;
}

void check_pair(std::size_t n, std::size_t i, std::size_t j) {
  if (i >= n || j >= n) throw std::invalid_argument("thickness: feature index out of range");
  if (i == j) throw std::invalid_argument("thickness: indices must differ");
}

}  // namespace

ThicknessEstimate pairwise_thickness_indicator(const SaliencyField& sal, const Vector& x, std::size_t i,
                                               std::size_t j, const NeighborhoodSpec& nb) {
  check_pair(sal.input_dim(), i, j);
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
  return tube_average(sal, x, nb, [&](const Vector& s) { return s[ii] >= s[jj] ? 1.0 : 0.0; });
}

ThicknessEstimate pairwise_thickness_indicator(const Mlp& m, const Vector& x, std::size_t i,
                                               std::size_t j, const NeighborhoodSpec& nb,
                                               const ExplainOptions& opt) {
  return pairwise_thickness_indicator(MlpSaliency::at(m, x, opt), x, i, j, nb);
}

ThicknessEstimate pairwise_thickness_relaxed(const SaliencyField& sal, const Vector& x, std::size_t i,
                                             std::size_t j, const NeighborhoodSpec& nb) {
  check_pair(sal.input_dim(), i, j);
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
  return tube_average(sal, x, nb, [&](const Vector& s) { return s[ii] - s[jj]; });
}

ThicknessEstimate pairwise_thickness_relaxed(const Mlp& m, const Vector& x, std::size_t i,
                                             std::size_t j, const NeighborhoodSpec& nb,
                                             const ExplainOptions& opt) {
  return pairwise_thickness_relaxed(MlpSaliency::at(m, x, opt), x, i, j, nb);
}

ThicknessEstimate topk_thickness(const SaliencyField& sal, const Vector& x, std::size_t k,
                                 const NeighborhoodSpec& nb, ThicknessEstimator estimator) {
  const std::size_t n = sal.input_dim();
  if (k < 1 || k >= n) throw std::invalid_argument("topk_thickness: k must lie in [1, n)");
  const std::vector<std::size_t> top = top_k(sal.scores(x), k);
  const double m = static_cast<double>(k * (n - k));
  if (estimator == ThicknessEstimator::relaxed) {
    const Vector c = collapsed_direction(top, n);
    return tube_average(sal, x, nb, [&](const Vector& s) { return c.dot(s) / m; });
  }
  std::vector<char> in_top(n, 0);
  for (std::size_t t : top) in_top[t] = 1;
  return tube_average(sal, x, nb, [&](const Vector& s) {
    std::size_t held = 0;
    for (std::size_t i : top)
      for (std::size_t j = 0; j < n; ++j)
        if (!in_top[j] && s[static_cast<Eigen::Index>(i)] >= s[static_cast<Eigen::Index>(j)]) ++held;
    return static_cast<double>(held) / m;
  });
}

ThicknessEstimate topk_thickness(const Mlp& m, const Vector& x, std::size_t k,
                                 const NeighborhoodSpec& nb, const ExplainOptions& opt,
                                 ThicknessEstimator estimator) {
  return topk_thickness(MlpSaliency::at(m, x, opt), x, k, nb, estimator);
}

ThicknessBounds thickness_bounds(const SaliencyField& sal, const Vector& x, std::size_t i,
                                 std::size_t j, double eps, std::size_t l_samples,
                                 std::uint64_t seed) {
  check_pair(sal.input_dim(), i, j);
  if (!(eps > 0.0)) throw std::invalid_argument("thickness_bounds: eps must be positive");
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
  const Matrix j0 = sal.jacobian(x);
  ThicknessBounds b;
  b.gap = gap(sal.scores(x), i, j);
  b.hessian_gap_norm = (j0.row(ii) - j0.row(jj)).norm();
  b.lipschitz_i = j0.row(ii).norm();
  b.lipschitz_j = j0.row(jj).norm();
  Rng rng(seed);
  for (std::size_t s = 0; s < l_samples; ++s) {
    const Matrix js = sal.jacobian(x + rng.uniform_ball(sal.input_dim(), eps));
    b.lipschitz_i = std::max(b.lipschitz_i, js.row(ii).norm());
    b.lipschitz_j = std::max(b.lipschitz_j, js.row(jj).norm());
  }
  b.lower = b.gap - eps * 0.5 * b.hessian_gap_norm;
  b.upper = b.gap + eps * (b.lipschitz_i + b.lipschitz_j);
  return b;
}

ThicknessBounds thickness_bounds(const Mlp& m, const Vector& x, std::size_t i, std::size_t j,
                                 double eps, std::size_t l_samples, std::uint64_t seed,
                                 const ExplainOptions& opt) {
  return thickness_bounds(MlpSaliency::at(m, x, opt, MlpSaliency::Mode::exact), x, i, j, eps,
                          l_samples, seed);
}

ThicknessReport model_thickness(const Mlp& m, const Matrix& xs, std::size_t k,
                                const NeighborhoodSpec& nb, const ExplainOptions& opt,
                                ThicknessEstimator estimator, std::size_t jobs) {
  if (xs.rows() == 0) throw std::invalid_argument("model_thickness: empty split");
  const auto rows = static_cast<std::size_t>(xs.rows());
  ThicknessReport rep;
  rep.values.assign(rows, 0.0);
  rep.std_errors.assign(rows, 0.0);
  rep.estimator = estimator;
  rep.neighborhood = nb.kind;
  rep.k = k;
  parallel_for(rows, jobs, [&](std::size_t r) {
    NeighborhoodSpec local = nb;
    local.seed = derive_seed(nb.seed, r);
    const Vector x = xs.row(static_cast<Eigen::Index>(r)).transpose();
    const ThicknessEstimate e = topk_thickness(m, x, k, local, opt, estimator);
    rep.values[r] = e.value;
    rep.std_errors[r] = e.std_error;
  });
  double mean = 0.0;
  for (double v : rep.values) mean += v;
  mean /= static_cast<double>(rows);
  double ss = 0.0;
  for (double v : rep.values) ss += (v - mean) * (v - mean);
  rep.mean = mean;
  rep.std = rows > 1 ? std::sqrt(ss / static_cast<double>(rows - 1)) : 0.0;
  return rep;
}

double phi_u(double a, double u) {
  if (!(u > 0.0)) throw std::invalid_argument("phi_u: margin must be positive");
  return std::clamp(1.0 - a / u, 0.0, 1.0);
}

EmpiricalRisks empirical_risks(const Vector& scores, const std::vector<std::size_t>& top, double u) {
  if (!(u > 0.0)) throw std::invalid_argument("empirical_risks: margin must be positive");
  const auto n = static_cast<std::size_t>(scores.size());
  const std::size_t k = top.size();
  if (k < 1 || k >= n) throw std::invalid_argument("empirical_risks: k must lie in [1, n)");
  std::vector<char> in_top(n, 0);
  for (std::size_t t : top) {
    if (t >= n || in_top[t]) throw std::invalid_argument("empirical_risks: invalid top set");
    in_top[t] = 1;
  }
  EmpiricalRisks r;
  for (std::size_t i : top) {
    for (std::size_t j = 0; j < n; ++j) {
      if (in_top[j]) continue;
      const double h = scores[static_cast<Eigen::Index>(i)] - scores[static_cast<Eigen::Index>(j)];
      r.r01 += h < 0.0 ? 1.0 : 0.0;
      r.r_phi_u += phi_u(h, u);
      r.r01_u += h < u ? 1.0 : 0.0;
    }
  }
  const double m = static_cast<double>(k * (n - k));
  r.r01 /= m;
  r.r_phi_u /= m;
  r.r01_u /= m;
  return r;
}

EmpiricalRisks empirical_risks(const SaliencyMap& s, std::size_t k, double u) {
  return empirical_risks(s.scores, top_k(s.scores, k), u);
}

std::vector<std::pair<std::size_t, std::size_t>> topk_pairs(const std::vector<std::size_t>& order,
                                                            std::size_t k) {
  require(k >= 1 && k < order.size(), "topk_pairs: k must lie in [1, n)");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(k * (order.size() - k));
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = k; b < order.size(); ++b) out.emplace_back(order[a], order[b]);
  return out;
}

}  // namespace rankrobust
