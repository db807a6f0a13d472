#include "rankrobust/explain/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rankrobust/net/derivatives.hpp"

namespace rankrobust {

std::string to_string(Postprocess p) {
  switch (p) {
    case Postprocess::raw:
      return "raw";
    case Postprocess::abs:
      return "abs";
    case Postprocess::abs_normalized:
      return "abs_normalized";
  }
  return "abs";
}

Postprocess parse_postprocess(const std::string& s) {
  if (s == "raw") return Postprocess::raw;
  if (s == "abs") return Postprocess::abs;
  if (s == "abs_normalized") return Postprocess::abs_normalized;
  throw ConfigError("unknown postprocess '" + s + "'");
}

std::string to_string(ExplainerKind k) {
  switch (k) {
    case ExplainerKind::simple:
      return "simple";
    case ExplainerKind::smoothgrad:
      return "smoothgrad";
    case ExplainerKind::integrated_gradients:
      return "ig";
  }
  return "simple";
}

ExplainerKind parse_explainer(const std::string& s) {
  if (s == "simple") return ExplainerKind::simple;
  if (s == "smoothgrad") return ExplainerKind::smoothgrad;
  if (s == "ig") return ExplainerKind::integrated_gradients;
  throw ConfigError("unknown explainer '" + s + "'");
}

Vector apply_postprocess(const Vector& raw, Postprocess p) {
  switch (p) {
    case Postprocess::raw:
      return raw;
    case Postprocess::abs:
      return raw.cwiseAbs();
    case Postprocess::abs_normalized: {
      Vector a = raw.cwiseAbs();
      const double s = a.sum();
      if (s > 0.0) return a / s;
      // All-zero gradient: the uniform map is the only normalized choice.
      return Vector::Constant(a.size(), 1.0 / static_cast<double>(a.size()));
    }
  }
  return raw;
}

SaliencyMap make_map(const Vector& scores, Postprocess p) {
  SaliencyMap s;
  s.scores = scores;
  s.raw = scores;
  s.postprocess = p;
  return s;
}

SaliencyMap simple_grad(const Mlp& m, const Vector& x, std::size_t c, const ExplainOptions& opt) {
  SaliencyMap s;
  s.raw = m.grad_input(x, c, opt.output);
  s.scores = apply_postprocess(s.raw, opt.postprocess);
  s.explainer = ExplainerKind::simple;
  s.postprocess = opt.postprocess;
  s.class_index = c;
  return s;
}

SaliencyMap simple_grad(const Mlp& m, const Vector& x, const ExplainOptions& opt) {
  return simple_grad(m, x, m.predict(x), opt);
}

SaliencyMap smooth_grad(const Mlp& m, const Vector& x, std::size_t samples, double sigma,
                        std::uint64_t seed, const ExplainOptions& opt) {
  if (samples == 0) throw std::invalid_argument("smooth_grad: sample count must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("smooth_grad: sigma must be non-negative");
  const std::size_t c = m.predict(x);
  if (sigma == 0.0) return simple_grad(m, x, c, opt);
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(x.size());
  Vector acc = Vector::Zero(x.size());
  Vector raw = Vector::Zero(x.size());
  for (std::size_t s = 0; s < samples; ++s) {
    const Vector xs = x + sigma * rng.normal_vector(n);
    const Vector g = m.grad_input(xs, c, opt.output);
    raw += g;
    acc += apply_postprocess(g, opt.postprocess);
  }
  SaliencyMap out;
  out.scores = acc / static_cast<double>(samples);
  out.raw = raw / static_cast<double>(samples);
  out.explainer = ExplainerKind::smoothgrad;
  out.postprocess = opt.postprocess;
  out.class_index = c;
  return out;
}

SaliencyMap integrated_grad(const Mlp& m, const Vector& x, const Vector& x0, std::size_t steps,
                            const ExplainOptions& opt) {
  if (steps == 0) throw std::invalid_argument("integrated_grad: steps must be positive");
  if (x0.size() != x.size()) throw std::invalid_argument("integrated_grad: baseline dimension mismatch");
  const std::size_t c = m.predict(x);
  const Vector dx = x - x0;
  Vector mean = Vector::Zero(x.size());
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = (static_cast<double>(s) + 0.5) / static_cast<double>(steps);
    mean += m.grad_input(x0 + t * dx, c, opt.output);
  }
  mean /= static_cast<double>(steps);
  SaliencyMap out;
  out.raw = dx.cwiseProduct(mean);
  out.scores = apply_postprocess(out.raw, opt.postprocess);
  out.explainer = ExplainerKind::integrated_gradients;
  out.postprocess = opt.postprocess;
  out.class_index = c;
  return out;
}

SaliencyMap explain(const Mlp& m, const Vector& x, const ExplainerSpec& spec,
                    const ExplainOptions& opt) {
  switch (spec.kind) {
    case ExplainerKind::simple:
      return simple_grad(m, x, opt);
    case ExplainerKind::smoothgrad:
      return smooth_grad(m, x, spec.samples, spec.sigma, spec.seed, opt);
    case ExplainerKind::integrated_gradients:
      return integrated_grad(m, x, Vector::Zero(x.size()), spec.steps, opt);
  }
  return simple_grad(m, x, opt);
}

std::vector<std::size_t> ranking(const Vector& scores) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
  });
  return idx;
}

std::vector<std::size_t> top_k(const Vector& scores, std::size_t k) {
  const auto n = static_cast<std::size_t>(scores.size());
  if (k < 1 || k > n) throw std::invalid_argument("top_k: k must lie in [1, n]");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto cmp = [&](std::size_t a, std::size_t b) {
    const double sa = scores[static_cast<Eigen::Index>(a)];
    const double sb = scores[static_cast<Eigen::Index>(b)];
    return sa > sb || (sa == sb && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), cmp);
  idx.resize(k);
  return idx;
}

std::vector<std::size_t> top_k(const SaliencyMap& s, std::size_t k) { return top_k(s.scores, k); }

Vector collapsed_direction(const std::vector<std::size_t>& top, std::size_t n) {
  const auto k = static_cast<double>(top.size());
  Vector c = Vector::Constant(static_cast<Eigen::Index>(n), -k);
  for (std::size_t t : top) c[static_cast<Eigen::Index>(t)] = static_cast<double>(n) - k;
  return c;
}

// ------------------------------------------------------------- MlpSaliency

MlpSaliency::MlpSaliency(const Mlp& m, std::size_t cls, ExplainOptions opt, Mode mode, double kappa)
    : model_(&m), cls_(cls), opt_(opt), mode_(mode), kappa_(kappa) {
  if (cls >= m.num_classes()) throw std::invalid_argument("MlpSaliency: class out of range");
  if (!(kappa > 0.0)) throw std::invalid_argument("MlpSaliency: kappa must be positive");
}

MlpSaliency MlpSaliency::at(const Mlp& m, const Vector& x, ExplainOptions opt, Mode mode,
                            double kappa) {
  return MlpSaliency(m, m.predict(x), opt, mode, kappa);
}

Vector MlpSaliency::raw(const Vector& x) const { return model_->grad_input(x, cls_, opt_.output); }

Vector MlpSaliency::scores(const Vector& x) const { return apply_postprocess(raw(x), opt_.postprocess); }

SaliencyMap MlpSaliency::map(const Vector& x) const { return simple_grad(*model_, x, cls_, opt_); }

Vector MlpSaliency::pullback_weights(const Vector& g, const Vector& w) const {
  switch (opt_.postprocess) {
    case Postprocess::raw:
      return w;
    case Postprocess::abs: {
      Vector u(w.size());
      for (Eigen::Index i = 0; i < w.size(); ++i) u[i] = g[i] >= 0.0 ? w[i] : -w[i];
      return u;
    }
    case Postprocess::abs_normalized: {
      const double s = g.cwiseAbs().sum();
      if (s == 0.0) return Vector::Zero(w.size());
      const Vector q = g.cwiseAbs() / s;
      const double qw = q.dot(w);
      Vector u(w.size());
      for (Eigen::Index i = 0; i < w.size(); ++i) u[i] = (g[i] >= 0.0 ? 1.0 : -1.0) * (w[i] - qw) / s;
      return u;
    }
  }
  return w;
}

Vector MlpSaliency::score_vjp(const Vector& x, const Vector& w) const {
  require(w.size() == x.size(), "score_vjp: weight dimension mismatch");
  const Vector g = raw(x);
  const Vector u = pullback_weights(g, w);
  const double nu = u.norm();
  if (nu == 0.0) return Vector::Zero(x.size());
  if (mode_ == Mode::exact) {
    return model_->hessian_input(x, cls_, opt_.output).hessian * u;
  }
  const Vector v = u / nu;
  const Vector gp = raw(x + kappa_ * v);
  return nu * (gp - g) / kappa_;
}

Matrix MlpSaliency::jacobian(const Vector& x) const {
  const Vector g = raw(x);
  const Matrix h = model_->hessian_input(x, cls_, opt_.output).hessian;
  const auto n = x.size();
  Matrix j(n, n);
  // Row r of dI/dx is (pullback of e_r)^T H, since H is symmetric.
  for (Eigen::Index r = 0; r < n; ++r) {
    Vector e = Vector::Zero(n);
    e[r] = 1.0;
    j.row(r) = (h * pullback_weights(g, e)).transpose();
  }
  return j;
}

}  // namespace rankrobust
