#include "rankrobust/attack/tr_moo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rankrobust/attack/lp.hpp"

namespace rankrobust {

void TrMooConfig::validate() const {
  if (!(eps_f > 0.0)) throw ConfigError("tr_moo: eps_f must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("tr_moo: epsilon must be positive");
  if (!(delta1 > 0.0)) throw ConfigError("tr_moo: initial radius must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("tr_moo: eta must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("tr_moo: gamma must lie in (0, 1)");
  if (!(crit_tol > 0.0)) throw ConfigError("tr_moo: crit_tol must be positive");
}

double TrMooProblem::position_scale() const {
  return eps_f * std::sqrt(static_cast<double>(input_dim())) / epsilon;
}

Vector TrMooProblem::constraint(const Vector& x) const {
  const Vector df = model->class_probabilities(x) - model->class_probabilities(x0);
  Vector c(df.size() + x.size());
  c << df, position_scale() * (x - x0);
  return c;
}

Matrix TrMooProblem::constraint_jacobian(const Vector& x) const {
  const Matrix jf = model->probability_jacobian(x);
  const Eigen::Index n = x.size();
  Matrix j(jf.rows() + n, n);
  j.topRows(jf.rows()) = jf;
  j.bottomRows(n) = position_scale() * Matrix::Identity(n, n);
  return j;
}

double TrMooProblem::h(const Vector& x, std::size_t l) const {
  return objective_scale * gap(saliency->scores(x), pairs.at(l).first, pairs.at(l).second);
}

double auto_objective_scale(const TrMooProblem& p) {
  const Matrix js = p.saliency->jacobian(p.x0);
  std::vector<double> g1;
  for (const auto& [i, j] : p.pairs)
    g1.push_back((js.row(static_cast<Eigen::Index>(i)) - js.row(static_cast<Eigen::Index>(j))).lpNorm<1>());
  std::nth_element(g1.begin(), g1.begin() + static_cast<long>(g1.size() / 2), g1.end());
  const double med = g1[g1.size() / 2];
  if (!(med > 0.0)) return 1.0;
  const double row = p.constraint_jacobian(p.x0).cwiseAbs().rowwise().sum().maxCoeff();
  return 2.0 * row / med;
}

double merit_value(const TrMooProblem& p, const Vector& x, std::size_t l, double t) {
  return p.constraint(x).lpNorm<Eigen::Infinity>() + std::abs(p.h(x, l) - t);
}

namespace {

double linear_merit(const Matrix& jac, const Vector& c, const Vector& g, double a, const Vector& d) {
  const double cn = c.size() ? (c + jac * d).lpNorm<Eigen::Infinity>() : 0.0;
  return cn + std::abs(a + g.dot(d));
}

}  // namespace

TrSubproblemResult tr_subproblem(const Matrix& jac, const Vector& c, const std::vector<Vector>& grads,
                                 const Vector& h_vals, const Vector& t_vals, double delta) {
  require(delta > 0.0, "tr_subproblem: radius must be positive");
  require(!grads.empty(), "tr_subproblem: need at least one objective");
  require(static_cast<std::size_t>(h_vals.size()) == grads.size() &&
              static_cast<std::size_t>(t_vals.size()) == grads.size(),
          "tr_subproblem: objective count mismatch");
  const Eigen::Index n = grads.front().size();
  const Eigen::Index R = c.size();
  require(jac.rows() == R && (R == 0 || jac.cols() == n), "tr_subproblem: Jacobian shape mismatch");
  const auto m = static_cast<Eigen::Index>(grads.size());

  // Variables [d+, d-, u+, u-, a+, a-] with d = d+ - d-, u = C + u+ - u-,
  // alpha = alpha0 + a+ - a-. Shifting by C = ||c|| and alpha0 makes the
  // origin (d = 0) feasible with a non-negative right-hand side.
  const Vector a = h_vals - t_vals;
  const double C = R ? c.lpNorm<Eigen::Infinity>() : 0.0;
  const double alpha0 = C + a.cwiseAbs().maxCoeff();
  const Eigen::Index nv = 2 * n + 4;
  const Eigen::Index iu = 2 * n, ia = 2 * n + 2;
  const Eigen::Index rows = 2 * R + 2 * m + 2 * n + 1;
  Matrix A = Matrix::Zero(rows, nv);
  Vector b(rows);
  Eigen::Index r = 0;
  for (Eigen::Index q = 0; q < R; ++q) {
    for (double sg : {1.0, -1.0}) {
      A.block(r, 0, 1, n) = sg * jac.row(q);
      A.block(r, n, 1, n) = -sg * jac.row(q);
      A(r, iu) = -1.0;
      A(r, iu + 1) = 1.0;
      b[r] = C - sg * c[q];
      ++r;
    }
  }
  for (Eigen::Index l = 0; l < m; ++l) {
    const Vector& g = grads[static_cast<std::size_t>(l)];
    require(g.size() == n, "tr_subproblem: gradient size mismatch");
    for (double sg : {1.0, -1.0}) {
      A.block(r, 0, 1, n) = sg * g.transpose();
      A.block(r, n, 1, n) = -sg * g.transpose();
      A(r, iu) = 1.0;
      A(r, iu + 1) = -1.0;
      A(r, ia) = -1.0;
      A(r, ia + 1) = 1.0;
      b[r] = alpha0 - C - sg * a[l];
      ++r;
    }
  }
  // u >= 0, which the constraint rows already imply unless there are none.
  A(r, iu) = -1.0;
  A(r, iu + 1) = 1.0;
  b[r] = C;
  ++r;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    A(r, i) = 1.0;
    b[r] = delta;
    ++r;
  }
  b = b.cwiseMax(0.0);  // clears -0 and round-off
  Vector obj = Vector::Zero(nv);
  obj[ia] = -1.0;
  obj[ia + 1] = 1.0;

  const LpResult lp = simplex_max(A, b, obj);
  TrSubproblemResult res;
  res.optimal = lp.optimal;
  res.d = lp.x.head(n) - lp.x.segment(n, n);
  res.d = res.d.cwiseMax(-delta).cwiseMin(delta);
  double alpha = 0.0;
  for (Eigen::Index l = 0; l < m; ++l)
    alpha = std::max(alpha, linear_merit(jac, c, grads[static_cast<std::size_t>(l)], a[l], res.d));
  // d = 0 is always feasible; never return something worse.
  if (!lp.optimal || alpha > alpha0) {
    res.d = Vector::Zero(n);
    alpha = alpha0;
  }
  res.alpha = alpha;
  return res;
}

double criticality(const Matrix& jac, const Vector& c, const Vector& grad, double h, double t, double delta) {
  const double l0 = linear_merit(jac, c, grad, h - t, Vector::Zero(grad.size()));
  const TrSubproblemResult s =
      tr_subproblem(jac, c, {grad}, Vector::Constant(1, h), Vector::Constant(1, t), delta);
  return std::max(0.0, l0 - s.alpha);
}

double criticality(const TrMooProblem& p, const Vector& x, std::size_t l, double t, double delta) {
  const Matrix js = p.saliency->jacobian(x);
  const auto [i, j] = p.pairs.at(l);
  const Vector g =
      p.objective_scale * (js.row(static_cast<Eigen::Index>(i)) - js.row(static_cast<Eigen::Index>(j))).transpose();
  return criticality(p.constraint_jacobian(x), p.constraint(x), g, p.h(x, l), t, delta);
}

TrMooTrace tr_moo_attack(const TrMooProblem& problem, std::size_t k, const TrMooConfig& cfg) {
  cfg.validate();
  require(problem.model && problem.saliency, "tr_moo_attack: problem needs a model and a saliency field");
  require(!problem.pairs.empty(), "tr_moo_attack: empty pair list");
  TrMooProblem p = problem;
  p.objective_scale = cfg.objective_scale > 0.0 ? cfg.objective_scale : auto_objective_scale(problem);
  const double w = p.objective_scale;
  const std::size_t m = p.pairs.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  TrMooTrace out;
  out.pairs = p.pairs;
  out.objective_scale = w;
  const Vector clean = p.saliency->scores(p.x0);
  out.trace.attack = "tr_moo";
  out.trace.clean_top = top_k(clean, k);
  const std::size_t clean_pred = p.model->predict(p.x0);

  auto record = [&](std::size_t iter, const Vector& x, const Vector& scores) {
    IterationRecord r;
    r.iter = iter;
    r.delta_norm = (x - p.x0).norm();
    r.patk = patk_against(scores, out.trace.clean_top);
    r.flipped_pairs = flipped_pairs(scores, out.trace.clean_top);
    r.constraints = Vector::Constant(1, symmetric_kl(p.model->class_probabilities(p.x0),
                                                     p.model->class_probabilities(x)));
    r.prediction = p.model->predict(x);
    double hmin = std::numeric_limits<double>::infinity();
    for (const auto& [i, j] : p.pairs) hmin = std::min(hmin, gap(scores, i, j));
    r.objective = hmin;
    out.trace.records.push_back(std::move(r));
  };

  auto any_flip = [&](const Vector& scores) {
    for (const auto& [i, j] : p.pairs)
      if (gap(scores, i, j) < 0.0) return true;
    return false;
  };

  Vector x = p.x0;
  Vector scores = clean;
  std::vector<double> hv(m), t(m);
  std::vector<char> active(m, 1);
  for (std::size_t l = 0; l < m; ++l) {
    hv[l] = w * gap(scores, p.pairs[l].first, p.pairs[l].second);
    t[l] = hv[l] - cfg.eps_f;  // ||c(x0)|| = 0
  }
  out.h_low = *std::min_element(hv.begin(), hv.end());
  out.h_up = *std::max_element(hv.begin(), hv.end());
  record(0, x, scores);
  if (any_flip(scores)) {
    out.termination = "flipped";
    out.first_flip_iter = 0;
  }

  double radius = cfg.delta1;
  for (std::size_t it = 1; it <= cfg.max_iters && out.termination.empty(); ++it) {
    TrIteration rec;
    rec.iter = it;
    const Vector c = p.constraint(x);
    const Matrix jc = p.constraint_jacobian(x);
    const Matrix js = p.saliency->jacobian(x);
    const double cn = c.lpNorm<Eigen::Infinity>();
    std::vector<Vector> grads(m);
    for (std::size_t l = 0; l < m; ++l) {
      if (!active[l]) continue;
      const auto [i, j] = p.pairs[l];
      grads[l] = w * (js.row(static_cast<Eigen::Index>(i)) - js.row(static_cast<Eigen::Index>(j))).transpose();
      if (criticality(jc, c, grads[l], hv[l], t[l], radius) < cfg.crit_tol) {
        active[l] = 0;
        ++rec.removed_now;
      }
    }
    out.removals += rec.removed_now;
    std::vector<std::size_t> idx;
    for (std::size_t l = 0; l < m; ++l)
      if (active[l]) idx.push_back(l);
    rec.active = idx.size();
    rec.radius = radius;
    if (idx.empty()) {
      out.termination = "all_removed";
      rec.targets.assign(m, nan);
      out.iterations.push_back(std::move(rec));
      break;
    }

    std::vector<Vector> ag;
    Vector ah(static_cast<Eigen::Index>(idx.size())), at(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t q = 0; q < idx.size(); ++q) {
      ag.push_back(grads[idx[q]]);
      ah[static_cast<Eigen::Index>(q)] = hv[idx[q]];
      at[static_cast<Eigen::Index>(q)] = t[idx[q]];
    }
    const TrSubproblemResult sub = tr_subproblem(jc, c, ag, ah, at, radius);
    rec.alpha = sub.alpha;

    const Vector xn = x + sub.d;
    const Vector sn = p.saliency->scores(xn);
    const double cnn = p.constraint(xn).lpNorm<Eigen::Infinity>();
    double min_rho = std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < idx.size(); ++q) {
      const std::size_t l = idx[q];
      const double hn = w * gap(sn, p.pairs[l].first, p.pairs[l].second);
      const double predicted = (cn + std::abs(hv[l] - t[l])) - linear_merit(jc, c, grads[l], hv[l] - t[l], sub.d);
      const double actual = (cn + std::abs(hv[l] - t[l])) - (cnn + std::abs(hn - t[l]));
      min_rho = std::min(min_rho, predicted > 0.0 ? actual / predicted : -std::numeric_limits<double>::infinity());
    }
    rec.min_rho = min_rho;
    rec.target_drop.assign(m, 0.0);
    if (min_rho > cfg.eta) {
      rec.accepted = true;
      for (std::size_t l = 0; l < m; ++l) {
        const double hn = w * gap(sn, p.pairs[l].first, p.pairs[l].second);
        if (active[l]) {
          const double phi_old = cn + std::abs(hv[l] - t[l]);
          const double phi_new = cnn + std::abs(hn - t[l]);
          const double tn = hn >= t[l] ? t[l] - phi_old + phi_new : 2.0 * hn - t[l] - phi_old + phi_new;
          rec.target_drop[l] = t[l] - tn;
          t[l] = tn;
        }
        hv[l] = hn;
        out.h_low = std::min(out.h_low, hn);
        out.h_up = std::max(out.h_up, hn);
      }
      x = xn;
      scores = sn;
      record(it, x, scores);
      if (any_flip(scores)) {
        out.termination = "flipped";
        out.first_flip_iter = it;
      }
    } else {
      radius *= cfg.gamma;
    }
    rec.constraint_norm = p.constraint(x).lpNorm<Eigen::Infinity>();
    double hmin = std::numeric_limits<double>::infinity();
    for (std::size_t l : idx) hmin = std::min(hmin, hv[l]);
    rec.min_gap = hmin;
    rec.targets.resize(m);
    for (std::size_t l = 0; l < m; ++l) rec.targets[l] = active[l] ? t[l] : nan;
    out.iterations.push_back(std::move(rec));
    if (out.termination.empty() && radius < cfg.min_radius) out.termination = "radius";
  }
  if (out.termination.empty()) out.termination = "max_iters";

  out.trace.x_adv = x;
  out.trace.budget_used = (x - p.x0).norm();
  out.trace.first_flip_iter = out.first_flip_iter;
  out.trace.prediction_changed = out.trace.records.back().prediction != clean_pred;
  out.theoretical_bound =
      std::ceil(static_cast<double>(m) * (out.h_up - out.h_low) / (cfg.crit_tol * cfg.crit_tol));
  return out;
}

TrMooTrace tr_moo_attack(const Mlp& m, const Vector& x, std::size_t k, const TrMooConfig& cfg,
                         const ExplainOptions& opt) {
  const std::size_t n = m.input_dim();
  if (k < 1 || k >= n) throw std::invalid_argument("tr_moo_attack: k must lie in [1, n)");
  const MlpSaliency sal = MlpSaliency::at(m, x, opt, MlpSaliency::Mode::exact);
  const std::vector<std::size_t> order = ranking(sal.scores(x));
  TrMooProblem p;
  p.model = &m;
  p.saliency = &sal;
  p.x0 = x;
  p.eps_f = cfg.eps_f;
  p.epsilon = cfg.epsilon;
  if (cfg.adjacent_pairs) {
    for (std::size_t i = 1; i <= std::min(k, n - k); ++i) p.pairs.emplace_back(order[k - i], order[k + i - 1]);
  } else {
    p.pairs = topk_pairs(order, k);
  }
  return tr_moo_attack(p, k, cfg);
}

}  // namespace rankrobust
