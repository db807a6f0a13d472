#include "rankrobust/attack/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace rankrobust {

std::string to_string(MultiplierScheme s) {
  switch (s) {
    case MultiplierScheme::none:
      return "none";
    case MultiplierScheme::fixed:
      return "fixed";
    case MultiplierScheme::gda:
      return "gda";
    case MultiplierScheme::hedge:
      return "hedge";
    case MultiplierScheme::qp:
      return "qp";
  }
  return "none";
}

MultiplierScheme parse_scheme(const std::string& s) {
  if (s == "none") return MultiplierScheme::none;
  if (s == "fixed") return MultiplierScheme::fixed;
  if (s == "gda") return MultiplierScheme::gda;
  if (s == "hedge") return MultiplierScheme::hedge;
  if (s == "qp") return MultiplierScheme::qp;
  throw ConfigError("unknown multiplier scheme '" + s + "'");
}

Vector initial_multipliers(MultiplierScheme s, std::size_t m) {
  require(m >= 1, "initial_multipliers: need at least one entry");
  const auto mm = static_cast<Eigen::Index>(m);
  if (s == MultiplierScheme::none) {
    Vector g = Vector::Zero(mm);
    g[0] = 1.0;
    return g;
  }
  return Vector::Constant(mm, 1.0 / static_cast<double>(m));
}

Vector project_simplex(const Vector& v) {
  require(v.size() >= 1, "project_simplex: empty vector");
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0);
}

Vector multiplier_step(MultiplierScheme s, const Vector& gamma, const Vector& g, double rate) {
  require(gamma.size() == g.size() && gamma.size() >= 1, "multiplier_step: size mismatch");
  switch (s) {
    case MultiplierScheme::none:
    case MultiplierScheme::fixed:
    case MultiplierScheme::qp:
      return gamma;
    case MultiplierScheme::gda: {
      Vector out = gamma;
      double mass = 0.0;
      for (Eigen::Index k = 1; k < out.size(); ++k) {
        out[k] = std::max(0.0, out[k] + rate * g[k]);
        mass += out[k];
      }
      if (mass > 1.0) {
        out.tail(out.size() - 1) /= mass;
        out[0] = 0.0;
      } else {
        out[0] = 1.0 - mass;
      }
      return out;
    }
    case MultiplierScheme::hedge: {
      Vector logw(gamma.size());
      for (Eigen::Index k = 0; k < gamma.size(); ++k) {
        require(gamma[k] >= 0.0, "multiplier_step: negative multiplier");
        logw[k] = gamma[k] > 0.0 ? std::log(gamma[k]) + rate * g[k]
                                 : -std::numeric_limits<double>::infinity();
      }
      const double mx = logw.maxCoeff();
      Vector w = (logw.array() - mx).exp();
      w /= w.sum();
      return w;
    }
  }
  return gamma;
}

QpResult qp_weights(const std::vector<Vector>& grads, double tol, std::size_t max_iters) {
  if (grads.empty()) throw std::invalid_argument("qp_weights: empty gradient set");
  const auto m = static_cast<Eigen::Index>(grads.size());
  const Eigen::Index n = grads.front().size();
  Matrix G(n, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    require(grads[static_cast<std::size_t>(k)].size() == n, "qp_weights: gradient size mismatch");
    G.col(k) = grads[static_cast<std::size_t>(k)];
  }
  const Matrix Q = G.transpose() * G;
  QpResult res;
  res.gamma = Vector::Constant(m, 1.0 / static_cast<double>(m));
  const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(Q, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  if (lmax > 0.0) {
    const double step = 1.0 / lmax;
    for (std::size_t it = 0; it < max_iters; ++it) {
      const Vector next = project_simplex(res.gamma - step * (Q * res.gamma));
      const double move = (next - res.gamma).cwiseAbs().maxCoeff();
      res.gamma = next;
      res.iterations = it + 1;
      if (move < tol) break;
    }
  }
  res.objective = 0.5 * res.gamma.dot(Q * res.gamma);
  return res;
}

}  // namespace rankrobust
