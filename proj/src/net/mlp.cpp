#include "rankrobust/net/mlp.hpp"

#include <cmath>
#include <utility>

namespace rankrobust {

double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------- activation

double Activation::value(double a) const {
  switch (kind) {
    case ActivationKind::relu:
      return a >= 0.0 ? a : 0.0;
    case ActivationKind::leaky_relu:
      return a >= 0.0 ? a : param * a;
    case ActivationKind::softplus: {
      const double t = param * a;
      if (t > 30.0) return a;
      return std::log1p(std::exp(t)) / param;
    }
  }
  return 0.0;
}

double Activation::first(double a) const {
  switch (kind) {
    case ActivationKind::relu:
      return a >= 0.0 ? 1.0 : 0.0;
    case ActivationKind::leaky_relu:
      return a >= 0.0 ? 1.0 : param;
    case ActivationKind::softplus:
      return sigmoid(param * a);
  }
  return 0.0;
}

double Activation::second(double a) const {
  if (kind != ActivationKind::softplus) return 0.0;
  const double s = sigmoid(param * a);
  return param * s * (1.0 - s);
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::relu:
      return "relu";
    case ActivationKind::leaky_relu:
      return "leaky_relu";
    case ActivationKind::softplus:
      return "softplus";
  }
  return "unknown";
}

Activation Activation::parse(const std::string& name, double param) {
  Activation a;
  if (name == "relu") {
    a = relu();
  } else if (name == "leaky_relu") {
    a = leaky_relu(param);
  } else if (name == "softplus") {
    a = softplus(param);
  } else {
    throw ConfigError("unknown activation '" + name + "'");
  }
  a.validate();
  return a;
}

void Activation::validate() const {
  if (kind == ActivationKind::leaky_relu && !(param > 0.0 && param < 1.0))
    throw std::invalid_argument("leaky_relu slope must lie in (0, 1)");
  if (kind == ActivationKind::softplus && !(param > 0.0))
    throw std::invalid_argument("softplus rho must be positive");
}

// --------------------------------------------------------------- weight grad

WeightGrad WeightGrad::zeros_like(const Mlp& m) {
  WeightGrad g;
  g.layers.reserve(m.depth());
  for (const auto& l : m.layers())
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                        Vector::Zero(l.bias.size())});
  return g;
}

WeightGrad& WeightGrad::operator+=(const WeightGrad& o) {
  axpy(1.0, o);
  return *this;
}

WeightGrad& WeightGrad::operator-=(const WeightGrad& o) {
  axpy(-1.0, o);
  return *this;
}

WeightGrad& WeightGrad::operator*=(double s) {
  for (auto& l : layers) {
    l.weight *= s;
    l.bias *= s;
  }
  return *this;
}

void WeightGrad::axpy(double a, const WeightGrad& o) {
  require(o.layers.size() == layers.size(), "WeightGrad: layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    require(o.layers[i].weight.rows() == layers[i].weight.rows() &&
                o.layers[i].weight.cols() == layers[i].weight.cols(),
            "WeightGrad: shape mismatch");
    layers[i].weight += a * o.layers[i].weight;
    layers[i].bias += a * o.layers[i].bias;
  }
}

double WeightGrad::dot(const WeightGrad& o) const {
  require(o.layers.size() == layers.size(), "WeightGrad: layer count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    s += layers[i].weight.cwiseProduct(o.layers[i].weight).sum();
    s += layers[i].bias.dot(o.layers[i].bias);
  }
  return s;
}

double WeightGrad::squared_norm() const { return dot(*this); }

std::size_t WeightGrad::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<double> WeightGrad::flatten() const {
  std::vector<double> out;
  out.reserve(size());
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out.push_back(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias[r]);
  }
  return out;
}

bool WeightGrad::all_finite() const {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

WeightGrad operator-(WeightGrad a, const WeightGrad& b) {
  a -= b;
  return a;
}

WeightGrad operator*(double s, WeightGrad a) {
  a *= s;
  return a;
}

// ----------------------------------------------------------------------- mlp

Mlp::Mlp(std::vector<std::size_t> layer_dims, Activation activation, std::uint64_t seed)
    : dims_(std::move(layer_dims)), activation_(activation), seed_(seed) {
  if (dims_.size() < 2) throw std::invalid_argument("invalid architecture: need at least two layer sizes");
  for (std::size_t d : dims_)
    if (d == 0) throw std::invalid_argument("invalid architecture: zero-width layer");
  activation_.validate();
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(dims_[l]);
    const auto out = static_cast<Eigen::Index>(dims_[l + 1]);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer layer{Matrix(out, in), Vector(out)};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < out; ++r) layer.bias[r] = rng.uniform(-bound, bound);
    layers_.push_back(std::move(layer));
  }
}

Mlp::Mlp(std::vector<DenseLayer> layers, Activation activation, std::uint64_t seed)
    : layers_(std::move(layers)), activation_(activation), seed_(seed) {
  if (layers_.empty()) throw std::invalid_argument("invalid architecture: no layers");
  activation_.validate();
  dims_.push_back(static_cast<std::size_t>(layers_.front().weight.cols()));
  for (const auto& l : layers_) dims_.push_back(static_cast<std::size_t>(l.weight.rows()));
  validate();
}

Mlp mlp_new(const std::vector<std::size_t>& layer_dims, Activation activation,
            std::uint64_t seed) {
  return Mlp(layer_dims, activation, seed);
}

void Mlp::validate() const {
  for (std::size_t d : dims_)
    if (d == 0) throw std::invalid_argument("invalid architecture: zero-width layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    if (static_cast<std::size_t>(L.weight.cols()) != dims_[l] ||
        static_cast<std::size_t>(L.weight.rows()) != dims_[l + 1] ||
        L.bias.size() != L.weight.rows())
      throw std::invalid_argument("invalid architecture: layer shapes do not chain");
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void Mlp::check_input(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim())
    throw std::invalid_argument("input dimension mismatch: expected " +
                                std::to_string(input_dim()) + ", got " +
                                std::to_string(x.size()));
}

void Mlp::check_class(std::size_t c) const {
  if (c >= num_classes()) throw std::invalid_argument("class index out of range");
}

Mlp::Cache Mlp::run(const Vector& x) const {
  check_input(x);
  Cache cache;
  cache.pre.reserve(layers_.size());
  cache.post.reserve(layers_.size());
  cache.post.push_back(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vector a = layers_[l].weight * cache.post.back() + layers_[l].bias;
    if (l + 1 < layers_.size()) {
      Vector h(a.size());
      for (Eigen::Index i = 0; i < a.size(); ++i) h[i] = activation_.value(a[i]);
      cache.post.push_back(std::move(h));
    }
    cache.pre.push_back(std::move(a));
  }
  return cache;
}

namespace {

Vector softmax(const Vector& z) {
  const double mx = z.maxCoeff();
  Vector e = (z.array() - mx).exp();
  return e / e.sum();
}

}  // namespace

Vector Mlp::logits(const Vector& x) const { return run(x).pre.back(); }

Vector Mlp::forward(const Vector& x) const {
  const Vector z = logits(x);
  if (sigmoid_head()) return Vector::Constant(1, sigmoid(z[0]));
  return softmax(z);
}

Vector Mlp::class_probabilities(const Vector& x) const {
  const Vector p = forward(x);
  if (!sigmoid_head()) return p;
  Vector out(2);
  out << 1.0 - p[0], p[0];
  return out;
}

std::size_t Mlp::predict(const Vector& x) const {
  const Vector z = logits(x);
  if (sigmoid_head()) return z[0] >= 0.0 ? 1 : 0;
  Eigen::Index best = 0;
  z.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

double Mlp::output(const Vector& x, std::size_t c, OutputKind kind) const {
  check_class(c);
  const Vector z = logits(x);
  if (sigmoid_head()) {
    const double zc = c == 1 ? z[0] : -z[0];
    return kind == OutputKind::logit ? zc : sigmoid(zc);
  }
  if (kind == OutputKind::logit) return z[static_cast<Eigen::Index>(c)];
  return softmax(z)[static_cast<Eigen::Index>(c)];
}

Vector Mlp::output_grad(const Vector& z, std::size_t c, OutputKind kind) const {
  if (sigmoid_head()) {
    const double sgn = c == 1 ? 1.0 : -1.0;
    if (kind == OutputKind::logit) return Vector::Constant(1, sgn);
    const double p = sigmoid(z[0]);
    return Vector::Constant(1, sgn * p * (1.0 - p));
  }
  const auto ci = static_cast<Eigen::Index>(c);
  Vector g = Vector::Zero(z.size());
  if (kind == OutputKind::logit) {
    g[ci] = 1.0;
    return g;
  }
  const Vector p = softmax(z);
  g = -p[ci] * p;
  g[ci] += p[ci];
  return g;
}

Matrix Mlp::output_hessian(const Vector& z, std::size_t c, OutputKind kind) const {
  if (kind == OutputKind::logit) return Matrix::Zero(z.size(), z.size());
  if (sigmoid_head()) {
    const double sgn = c == 1 ? 1.0 : -1.0;
    const double p = sigmoid(z[0]);
    return Matrix::Constant(1, 1, sgn * p * (1.0 - p) * (1.0 - 2.0 * p));
  }
  const auto ci = static_cast<Eigen::Index>(c);
  const Vector p = softmax(z);
  Vector e = -p;
  e[ci] += 1.0;
  Matrix h = e * e.transpose();
  h.diagonal() -= p;
  h += p * p.transpose();
  return p[ci] * h;
}

Vector Mlp::backprop_input(const Cache& cache, Vector delta) const {
  for (std::size_t l = layers_.size(); l-- > 0;) {
    Vector g = layers_[l].weight.transpose() * delta;
    if (l == 0) return g;
    const Vector& a = cache.pre[l - 1];
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] *= activation_.first(a[i]);
    delta = std::move(g);
  }
  return delta;
}

WeightGrad Mlp::backprop_weights(const Cache& cache, Vector delta) const {
  WeightGrad out;
  out.layers.resize(layers_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    out.layers[l].weight = delta * cache.post[l].transpose();
    out.layers[l].bias = delta;
    if (l == 0) break;
    Vector g = layers_[l].weight.transpose() * delta;
    const Vector& a = cache.pre[l - 1];
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] *= activation_.first(a[i]);
    delta = std::move(g);
  }
  return out;
}

Vector Mlp::grad_input(const Vector& x, std::size_t c, OutputKind kind) const {
  check_class(c);
  const Cache cache = run(x);
  return backprop_input(cache, output_grad(cache.pre.back(), c, kind));
}

HessianResult Mlp::hessian_input(const Vector& x, std::size_t c, OutputKind kind) const {
  check_class(c);
  const Cache cache = run(x);
  const Vector& z = cache.pre.back();
  const Matrix hz = output_hessian(z, c, kind);
  HessianResult res;
  if (layers_.size() == 1) {
    const Matrix& w = layers_[0].weight;
    res.hessian = w.transpose() * hz * w;
  } else if (layers_.size() == 2) {
    const Matrix& w1 = layers_[0].weight;
    const Matrix& w2 = layers_[1].weight;
    const Vector& a = cache.pre[0];
    const Vector back = w2.transpose() * output_grad(z, c, kind);
    Vector d1(a.size()), d2(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      d1[i] = activation_.first(a[i]);
      d2[i] = activation_.second(a[i]) * back[i];
    }
    // Inner curvature in hidden space: act'' term plus head curvature
    // pushed through the Jacobian diag(act') W2^T.
    const Matrix jw = d1.asDiagonal() * w2.transpose();
    Matrix inner = jw * hz * jw.transpose();
    inner.diagonal() += d2;
    res.hessian = w1.transpose() * inner * w1;
  } else {
    const auto n = static_cast<Eigen::Index>(input_dim());
    const double h = 1e-5;
    res.hessian.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      res.hessian.col(j) = (grad_input(xp, c, kind) - grad_input(xm, c, kind)) / (2.0 * h);
    }
    res.finite_difference = true;
  }
  // Exact in exact arithmetic; remove round-off asymmetry.
  res.hessian = 0.5 * (res.hessian + res.hessian.transpose()).eval();
  return res;
}

Matrix Mlp::probability_jacobian(const Vector& x) const {
  const auto n = static_cast<Eigen::Index>(input_dim());
  const auto nc = static_cast<Eigen::Index>(num_classes());
  Matrix j(nc, n);
  for (Eigen::Index c = 0; c < nc; ++c)
    j.row(c) = grad_input(x, static_cast<std::size_t>(c), OutputKind::probability).transpose();
  return j;
}

double Mlp::loss(const Vector& x, std::size_t y) const {
  check_class(y);
  const Vector z = logits(x);
  if (sigmoid_head()) {
    // softplus(z) - y z, evaluated stably.
    const double zz = z[0];
    const double sp = zz > 0.0 ? zz + std::log1p(std::exp(-zz)) : std::log1p(std::exp(zz));
    return sp - static_cast<double>(y) * zz;
  }
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  return lse - z[static_cast<Eigen::Index>(y)];
}

WeightGrad Mlp::grad_weights(const Vector& x, std::size_t y) const {
  check_class(y);
  const Cache cache = run(x);
  const Vector& z = cache.pre.back();
  Vector delta;
  if (sigmoid_head()) {
    delta = Vector::Constant(1, sigmoid(z[0]) - static_cast<double>(y));
  } else {
    delta = softmax(z);
    delta[static_cast<Eigen::Index>(y)] -= 1.0;
  }
  return backprop_weights(cache, std::move(delta));
}

WeightGrad Mlp::grad_output_weights(const Vector& x, std::size_t c, OutputKind kind) const {
  check_class(c);
  const Cache cache = run(x);
  return backprop_weights(cache, output_grad(cache.pre.back(), c, kind));
}

WeightGrad Mlp::grad_tangent_weights(const Vector& x, const Vector& u, std::size_t c, OutputKind kind) const {
  check_class(c);
  require(u.size() == x.size(), "grad_tangent_weights: direction dimension mismatch");
  const Cache cache = run(x);
  // Tangents of the activations along u.
  std::vector<Vector> tpost{u};
  std::vector<Vector> tpre;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Vector ta = layers_[l].weight * tpost.back();
    if (l + 1 < layers_.size()) {
      Vector th(ta.size());
      for (Eigen::Index i = 0; i < ta.size(); ++i) th[i] = activation_.first(cache.pre[l][i]) * ta[i];
      tpost.push_back(std::move(th));
    }
    tpre.push_back(std::move(ta));
  }
  // F = grad_z f_c . tz; adjoints of z and of its tangent.
  const Vector& z = cache.pre.back();
  Vector bar = output_hessian(z, c, kind) * tpre.back();
  Vector tbar = output_grad(z, c, kind);

  WeightGrad out;
  out.layers.resize(layers_.size());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    out.layers[l].weight = bar * cache.post[l].transpose() + tbar * tpost[l].transpose();
    out.layers[l].bias = bar;
    if (l == 0) break;
    const Vector hb = layers_[l].weight.transpose() * bar;
    const Vector thb = layers_[l].weight.transpose() * tbar;
    const Vector& a = cache.pre[l - 1];
    const Vector& ta = tpre[l - 1];
    Vector nb(a.size()), ntb(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double d1 = activation_.first(a[i]);
      nb[i] = d1 * hb[i] + activation_.second(a[i]) * ta[i] * thb[i];
      ntb[i] = d1 * thb[i];
    }
    bar = std::move(nb);
    tbar = std::move(ntb);
  }
  return out;
}

void Mlp::apply_update(const WeightGrad& g, double lr) {
  require(g.layers.size() == layers_.size(), "apply_update: layer count mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].weight -= lr * g.layers[l].weight;
    layers_[l].bias -= lr * g.layers[l].bias;
  }
}

}  // namespace rankrobust
