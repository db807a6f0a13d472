#include "rankrobust/train/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "rankrobust/net/derivatives.hpp"
#include "rankrobust/thickness/thickness.hpp"

namespace rankrobust {

PairList select_pairs(const SaliencyMap& s, std::size_t k, std::size_t k_prime, PairMode mode) {
  const std::size_t n = s.size();
  if (k < 1 || k >= n) throw std::invalid_argument("select_pairs: k must lie in [1, n)");
  const std::vector<std::size_t> order = ranking(s.scores);
  if (mode == PairMode::all) return topk_pairs(order, k);
  if (k_prime < 1 || k_prime > std::min(k, n - k))
    throw std::invalid_argument("select_pairs: k' must lie in [1, min(k, n - k)]");
  PairList out;
  if (mode == PairMode::boundary) {
    for (std::size_t i = 1; i <= k_prime; ++i) out.emplace_back(order[k - i], order[k + i - 1]);
    return out;
  }
  // Candidates by rank: top ranks k-k'..k-1, rest ranks k..k+k'-1.
  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  for (std::size_t a = k - k_prime; a < k; ++a)
    for (std::size_t b = k; b < k + k_prime; ++b) cand.emplace_back(s[order[a]] - s[order[b]], a, b);
  std::sort(cand.begin(), cand.end(), [](const auto& p, const auto& q) {
    if (std::get<0>(p) != std::get<0>(q)) return std::get<0>(p) < std::get<0>(q);
    return std::make_pair(std::get<1>(p), std::get<2>(p)) < std::make_pair(std::get<1>(q), std::get<2>(q));
  });
  for (std::size_t q = 0; q < k_prime; ++q) out.emplace_back(order[std::get<1>(cand[q])], order[std::get<2>(cand[q])]);
  return out;
}

namespace {

struct Context {
  std::size_t cls;
  MlpSaliency sal;
  Vector raw;
  Vector scores;
};

Context make_context(const Mlp& m, const Vector& x, const TrainSpec& spec) {
  const std::size_t c = m.predict(x);
  Context ctx{c, MlpSaliency(m, c, spec.explain, MlpSaliency::Mode::finite_difference, spec.kappa), Vector(), Vector()};
  ctx.raw = ctx.sal.raw(x);
  ctx.scores = apply_postprocess(ctx.raw, spec.explain.postprocess);
  return ctx;
}

// Gap sum over the selected pairs and its coefficient vector w, so that the
// first-order change of the sum is w . dI.
std::pair<double, Vector> gap_terms(const Context& ctx, const TrainSpec& spec) {
  SaliencyMap map;
  map.scores = ctx.scores;
  const PairList pairs = select_pairs(map, spec.k, spec.k_prime, spec.pair_mode_or_default());
  Vector w = Vector::Zero(ctx.scores.size());
  double sum = 0.0;
  for (const auto& [i, j] : pairs) {
    const double h = ctx.scores[static_cast<Eigen::Index>(i)] - ctx.scores[static_cast<Eigen::Index>(j)];
    const double coef = spec.gap_form == GapForm::linear ? 1.0 : std::exp(h);
    sum += spec.gap_form == GapForm::linear ? h : coef;
    w[static_cast<Eigen::Index>(i)] += coef;
    w[static_cast<Eigen::Index>(j)] -= coef;
  }
  return {sum, w};
}

Vector est_h_direction(const Vector& raw) {
  Vector v = raw.unaryExpr([](double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); });
  const double nv = v.norm();
  return nv > 0.0 ? Vector(v / nv) : v;
}

// Symmetric eigen-decomposition of the input Hessian of f_c.
Eigen::SelfAdjointEigenSolver<Matrix> hessian_eigen(const Mlp& m, const Vector& x, std::size_t c, OutputKind kind) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m.hessian_input(x, c, kind).hessian);
}

// grad_w (q^T H(x) q) by a central difference of the exact tangent gradient.
WeightGrad quadratic_form_grad(const Mlp& m, const Vector& x, const Vector& q, double kappa, std::size_t c,
                               OutputKind kind) {
  WeightGrad g = m.grad_tangent_weights(x + kappa * q, q, c, kind);
  g -= m.grad_tangent_weights(x - kappa * q, q, c, kind);
  g *= 1.0 / (2.0 * kappa);
  return g;
}

double gap_weight(const TrainSpec& spec) { return spec.uses_gap() ? spec.lambda1 : 0.0; }
double hessian_weight(const TrainSpec& spec) { return spec.uses_hessian() ? spec.lambda2 : 0.0; }

void require_regularizer(const TrainSpec& spec) {
  if (!spec.uses_regularizer())
    throw ConfigError("method '" + to_string(spec.method) + "' has no explanation regularizer");
}

double hessian_value(const Mlp& m, const Vector& x, const Context& ctx, const TrainSpec& spec) {
  const OutputKind kind = spec.explain.output;
  switch (spec.method) {
    case Method::exact_h:
      return m.hessian_input(x, ctx.cls, kind).hessian.norm();
    case Method::ssr:
      return hessian_eigen(m, x, ctx.cls, kind).eigenvalues().cwiseAbs().maxCoeff();
    default: {
      const Vector v = est_h_direction(ctx.raw);
      if (!(v.norm() > 0.0)) return 0.0;
      return hvp_fd(m, x, ctx.cls, v, spec.kappa, kind).norm();
    }
  }
}

WeightGrad hessian_grad(const Mlp& m, const Vector& x, const Context& ctx, const TrainSpec& spec) {
  const OutputKind kind = spec.explain.output;
  WeightGrad out = WeightGrad::zeros_like(m);
  if (spec.method == Method::exact_h || spec.method == Method::ssr) {
    const auto eig = hessian_eigen(m, x, ctx.cls, kind);
    const Vector& lam = eig.eigenvalues();
    const double amax = lam.cwiseAbs().maxCoeff();
    if (!(amax > 0.0)) return out;
    if (spec.method == Method::ssr) {
      Eigen::Index t = 0;
      lam.cwiseAbs().maxCoeff(&t);
      out.axpy(lam[t] > 0.0 ? 1.0 : -1.0, quadratic_form_grad(m, x, eig.eigenvectors().col(t), spec.kappa, ctx.cls, kind));
      return out;
    }
    const double fro = lam.norm();
    for (Eigen::Index r = 0; r < lam.size(); ++r) {
      if (std::abs(lam[r]) <= 1e-12 * amax) continue;
      out.axpy(lam[r] / fro, quadratic_form_grad(m, x, eig.eigenvectors().col(r), spec.kappa, ctx.cls, kind));
    }
    return out;
  }
  // Est-H: d ||D|| = (D / ||D||) . dD with D = (g(x + kappa v) - g(x)) / kappa.
  const Vector v = est_h_direction(ctx.raw);
  if (!(v.norm() > 0.0)) return out;
  const Vector d = hvp_fd(m, x, ctx.cls, v, spec.kappa, kind);
  const double nd = d.norm();
  if (!(nd > 0.0)) return out;
  const Vector q = d / nd;
  out = m.grad_tangent_weights(x + spec.kappa * v, q, ctx.cls, kind);
  out -= m.grad_tangent_weights(x, q, ctx.cls, kind);
  out *= 1.0 / spec.kappa;
  return out;
}

}  // namespace

RegularizerTerms regularizer_terms(const Mlp& m, const Vector& x, const TrainSpec& spec) {
  require_regularizer(spec);
  const Context ctx = make_context(m, x, spec);
  RegularizerTerms t;
  if (spec.uses_gap()) t.gap_sum = gap_terms(ctx, spec).first;
  if (spec.uses_hessian()) t.hessian = hessian_value(m, x, ctx, spec);
  t.value = -gap_weight(spec) * t.gap_sum + hessian_weight(spec) * t.hessian;
  return t;
}

double regularizer_value(const Mlp& m, const Vector& x, const TrainSpec& spec) {
  return regularizer_terms(m, x, spec).value;
}

WeightGrad regularizer_weight_grad(const Mlp& m, const Vector& x, const TrainSpec& spec) {
  require_regularizer(spec);
  const Context ctx = make_context(m, x, spec);
  WeightGrad out = WeightGrad::zeros_like(m);
  if (gap_weight(spec) > 0.0) {
    // The linear sum is one collapsed direction; the exponential form takes
    // one direction per selected pair.
    std::vector<Vector> weights;
    if (spec.gap_form == GapForm::linear) {
      weights.push_back(gap_terms(ctx, spec).second);
    } else {
      SaliencyMap map;
      map.scores = ctx.scores;
      for (const auto& [i, j] : select_pairs(map, spec.k, spec.k_prime, spec.pair_mode_or_default())) {
        const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
        Vector w = Vector::Zero(ctx.scores.size());
        const double coef = std::exp(ctx.scores[a] - ctx.scores[b]);
        w[a] += coef;
        w[b] -= coef;
        weights.push_back(std::move(w));
      }
    }
    for (const Vector& w : weights) {
      const Vector u = ctx.sal.pullback_weights(ctx.raw, w);
      const double nu = u.norm();
      if (!(nu > 0.0)) continue;
      const WeightGrad g = directional_weight_grad(m, x, u / nu, spec.kappa, ctx.cls, spec.explain.output);
      out.axpy(-gap_weight(spec) * nu, g);
    }
  }
  if (hessian_weight(spec) > 0.0) out.axpy(hessian_weight(spec), hessian_grad(m, x, ctx, spec));
  return out;
}

Vector fast_at_step(const Mlp& m, const Vector& x, std::size_t k, double eps, const ExplainOptions& opt) {
  require(eps > 0.0, "fast_at_step: eps must be positive");
  const MlpSaliency sal = MlpSaliency::at(m, x, opt, MlpSaliency::Mode::exact);
  const std::vector<std::size_t> top = top_k(sal.scores(x), k);
  const Vector grad = sal.score_vjp(x, collapsed_direction(top, m.input_dim()));
  Vector step = -eps * grad.unaryExpr([](double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); });
  const double ns = step.norm();
  if (!(ns > 0.0)) return x;
  if (ns > eps) step *= eps / ns;
  return x + step;
}

}  // namespace rankrobust
