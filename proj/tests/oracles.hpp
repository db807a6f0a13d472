#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls the library's derivative code.

#include <cmath>
#include <functional>
#include <vector>

#include "rankrobust/net/mlp.hpp"

namespace oracle {

using rankrobust::Matrix;
using rankrobust::Mlp;
using rankrobust::Vector;

// Straight-line evaluation using explicit loops and the textbook
// activation formulas.
inline double act(const rankrobust::Activation& a, double v) {
  switch (a.kind) {
    case rankrobust::ActivationKind::relu:
      return std::max(0.0, v);
    case rankrobust::ActivationKind::leaky_relu:
      return v > 0 ? v : a.param * v;
    case rankrobust::ActivationKind::softplus:
      return std::log(1.0 + std::exp(a.param * v)) / a.param;
  }
  return 0.0;
}

inline std::vector<double> forward(const Mlp& m, const Vector& x) {
  std::vector<double> cur(x.data(), x.data() + x.size());
  const auto& layers = m.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& W = layers[l].weight;
    std::vector<double> next(static_cast<std::size_t>(W.rows()), 0.0);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      double s = layers[l].bias[r];
      for (Eigen::Index c = 0; c < W.cols(); ++c) s += W(r, c) * cur[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = l + 1 < layers.size() ? act(m.activation(), s) : s;
    }
    cur = next;
  }
  if (cur.size() == 1) return {1.0 / (1.0 + std::exp(-cur[0]))};
  double mx = cur[0];
  for (double v : cur) mx = std::max(mx, v);
  double tot = 0;
  for (double& v : cur) {
    v = std::exp(v - mx);
    tot += v;
  }
  for (double& v : cur) v /= tot;
  return cur;
}

// f_c as probability: a sigmoid head is the two-class distribution.
inline double prob(const Mlp& m, const Vector& x, std::size_t c) {
  const auto p = forward(m, x);
  if (p.size() == 1) return c == 1 ? p[0] : 1.0 - p[0];
  return p[c];
}

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

inline Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                          double h = 1e-5) {
  const Vector f0 = f(x);
  Matrix j(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    j.col(i) = (f(xp) - f(xm)) / (2 * h);
  }
  return j;
}

// Copy of m with flattened parameter `idx` shifted by delta. Flatten order
// per layer: weight row-major, then bias.
inline Mlp perturb_param(const Mlp& m, std::size_t idx, double delta) {
  Mlp out = m;
  for (auto& l : out.mutable_layers()) {
    const auto nw = static_cast<std::size_t>(l.weight.size());
    if (idx < nw) {
      const auto cols = static_cast<std::size_t>(l.weight.cols());
      l.weight(static_cast<Eigen::Index>(idx / cols), static_cast<Eigen::Index>(idx % cols)) += delta;
      return out;
    }
    idx -= nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (idx < nb) {
      l.bias[static_cast<Eigen::Index>(idx)] += delta;
      return out;
    }
    idx -= nb;
  }
  return out;
}

// Central-difference gradient of a scalar model functional w.r.t. every
// parameter, in flatten order.
inline std::vector<double> fd_weight_gradient(const Mlp& m,
                                              const std::function<double(const Mlp&)>& f,
                                              double h = 1e-5) {
  std::vector<double> g(m.parameter_count());
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = (f(perturb_param(m, i, h)) - f(perturb_param(m, i, -h))) / (2 * h);
  return g;
}

inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b,
                            double floor = 1e-8) {
  double scale = floor;
  for (double v : b) scale = std::max(scale, std::abs(v));
  double e = 0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]) / scale);
  return e;
}

inline double max_rel_error(const Vector& a, const Vector& b, double floor = 1e-8) {
  return max_rel_error(std::vector<double>(a.data(), a.data() + a.size()),
                       std::vector<double>(b.data(), b.data() + b.size()), floor);
}

}  // namespace oracle
