#include "rankrobust/attack/pgd.hpp"

#include <algorithm>
#include <cmath>

namespace rankrobust {

void AttackConfig::validate() const {
  if (!(step > 0.0)) throw ConfigError("attack: step must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("attack: epsilon must be positive");
  if (!(kappa > 0.0)) throw ConfigError("attack: kappa must be positive");
  if (!(multiplier_rate > 0.0)) throw ConfigError("attack: multiplier rate must be positive");
}

double symmetric_kl(const Vector& p, const Vector& q) {
  require(p.size() == q.size(), "symmetric_kl: size mismatch");
  double s = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    const double a = std::max(p[c], 1e-300), b = std::max(q[c], 1e-300);
    s += (a - b) * (std::log(a) - std::log(b));
  }
  return s;
}

std::size_t flipped_pairs(const Vector& scores, const std::vector<std::size_t>& top) {
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<char> in_top(n, 0);
  for (std::size_t t : top) in_top[t] = 1;
  std::size_t count = 0;
  for (std::size_t i : top)
    for (std::size_t j = 0; j < n; ++j)
      if (!in_top[j] && scores[static_cast<Eigen::Index>(i)] < scores[static_cast<Eigen::Index>(j)]) ++count;
  return count;
}

double patk_against(const Vector& scores, const std::vector<std::size_t>& top) {
  const std::vector<std::size_t> now = top_k(scores, top.size());
  std::size_t hit = 0;
  for (std::size_t a : now)
    if (std::find(top.begin(), top.end(), a) != top.end()) ++hit;
  return static_cast<double>(hit) / static_cast<double>(top.size());
}

namespace {

// grad_x symKL(p0, f(x)) through the class-probability Jacobian.
Vector symkl_grad(const Mlp& m, const Vector& p0, const Vector& x) {
  const Vector q = m.class_probabilities(x);
  Vector w(q.size());
  for (Eigen::Index c = 0; c < q.size(); ++c) {
    const double a = std::max(p0[c], 1e-300), b = std::max(q[c], 1e-300);
    w[c] = -(std::log(a) - std::log(b)) - (a - b) / b;
  }
  return m.probability_jacobian(x).transpose() * w;
}

Vector project_ball(const Vector& delta, double eps) {
  const double nd = delta.norm();
  if (nd <= eps) return delta;
  return delta * (eps / nd);
}

struct Setup {
  MlpSaliency sal;
  Vector clean_scores;
  std::vector<std::size_t> top;
  Vector p0;
};

Setup make_setup(const Mlp& m, const Vector& x, std::size_t k, const AttackConfig& cfg,
                 const ExplainOptions& opt) {
  cfg.validate();
  const std::size_t n = m.input_dim();
  if (k < 1 || k >= n) throw std::invalid_argument("attack: k must lie in [1, n)");
  Setup s{MlpSaliency::at(m, x, opt, MlpSaliency::Mode::finite_difference, cfg.kappa), Vector(), {}, Vector()};
  s.clean_scores = s.sal.scores(x);
  s.top = top_k(s.clean_scores, k);
  s.p0 = m.class_probabilities(x);
  return s;
}

IterationRecord make_record(const Mlp& m, const Setup& s, const Vector& x0, const Vector& x,
                            std::size_t iter, double objective, const Vector& gamma,
                            const AttackConfig& cfg) {
  IterationRecord r;
  r.iter = iter;
  if (cfg.record_states) r.x = x;
  r.delta_norm = (x - x0).norm();
  r.objective = objective;
  const Vector sc = s.sal.scores(x);
  r.patk = patk_against(sc, s.top);
  r.flipped_pairs = flipped_pairs(sc, s.top);
  r.constraints = Vector::Constant(1, symmetric_kl(s.p0, m.class_probabilities(x)));
  r.gamma = gamma;
  r.prediction = m.predict(x);
  return r;
}

void finish(AttackTrace& tr, const Vector& x0, const Vector& x, std::size_t clean_pred) {
  tr.x_adv = x;
  tr.budget_used = (x - x0).norm();
  for (const auto& r : tr.records) {
    if (r.flipped_pairs > 0) {
      tr.first_flip_iter = r.iter;
      break;
    }
  }
  tr.prediction_changed = tr.records.back().prediction != clean_pred;
}

Vector take_step(const Vector& direction, const AttackConfig& cfg) {
  Vector st = direction * (cfg.step / direction.norm());
  if (cfg.linf_cap > 0.0) st = st.cwiseMax(-cfg.linf_cap).cwiseMin(cfg.linf_cap);
  return st;
}

}  // namespace

LagrangianValue lagrangian_value(const Mlp& m, const Vector& x0, const Vector& x, std::size_t k,
                                 const Vector& gamma, const ExplainOptions& opt) {
  if (gamma.size() != 2) throw std::invalid_argument("lagrangian_value: expected two multipliers");
  if ((gamma.array() < 0.0).any()) throw std::invalid_argument("lagrangian_value: negative multiplier");
  const MlpSaliency sal = MlpSaliency::at(m, x0, opt);
  const std::vector<std::size_t> top = top_k(sal.scores(x0), k);
  LagrangianValue v;
  v.g.resize(2);
  v.g[0] = collapsed_direction(top, m.input_dim()).dot(sal.scores(x));
  v.g[1] = symmetric_kl(m.class_probabilities(x0), m.class_probabilities(x));
  v.value = gamma.dot(v.g);
  return v;
}

AttackTrace er_attack(const Mlp& m, const Vector& x0, std::size_t k, const AttackConfig& cfg,
                      const ExplainOptions& opt) {
  const Setup s = make_setup(m, x0, k, cfg, opt);
  const Vector c = collapsed_direction(s.top, m.input_dim());
  const std::size_t clean_pred = m.predict(x0);
  AttackTrace tr;
  tr.attack = "er";
  tr.clean_top = s.top;
  Vector gamma = initial_multipliers(cfg.scheme, 2);
  tr.records.push_back(make_record(m, s, x0, x0, 0, c.dot(s.clean_scores), gamma, cfg));

  Vector x = x0;
  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    if (cfg.step * static_cast<double>(t - 1) >= cfg.epsilon * (1.0 - 1e-12)) break;
    Vector dir = s.sal.score_vjp(x, c);
    if (cfg.scheme != MultiplierScheme::none) {
      const Vector gk = symkl_grad(m, s.p0, x);
      if (cfg.scheme == MultiplierScheme::qp) gamma = qp_weights({dir, gk}).gamma;
      dir = gamma[0] * dir + gamma[1] * gk;
    }
    if (!(dir.norm() > 0.0) || !dir.allFinite()) break;
    x = x0 + project_ball(x - take_step(dir, cfg) - x0, cfg.epsilon);
    const double g0 = c.dot(s.sal.scores(x));
    if (cfg.scheme == MultiplierScheme::gda || cfg.scheme == MultiplierScheme::hedge) {
      Vector g(2);
      g << g0, symmetric_kl(s.p0, m.class_probabilities(x));
      gamma = multiplier_step(cfg.scheme, gamma, g, cfg.multiplier_rate);
    }
    tr.records.push_back(make_record(m, s, x0, x, t, g0, gamma, cfg));
  }
  finish(tr, x0, x, clean_pred);
  return tr;
}

AttackTrace mse_attack(const Mlp& m, const Vector& x0, std::size_t k, const AttackConfig& cfg,
                       const ExplainOptions& opt) {
  const Setup s = make_setup(m, x0, k, cfg, opt);
  const std::size_t clean_pred = m.predict(x0);
  AttackTrace tr;
  tr.attack = "mse";
  tr.clean_top = s.top;
  const Vector gamma = initial_multipliers(MultiplierScheme::none, 2);
  tr.records.push_back(make_record(m, s, x0, x0, 0, 0.0, gamma, cfg));
  Rng rng(cfg.seed);

  Vector x = x0;
  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    if (cfg.step * static_cast<double>(t - 1) >= cfg.epsilon * (1.0 - 1e-12)) break;
    const Vector diff = s.sal.scores(x) - s.clean_scores;
    Vector dir = s.sal.score_vjp(x, 2.0 * diff);
    if (!(dir.norm() > 0.0) || !dir.allFinite()) dir = rng.normal_vector(m.input_dim());
    x = x0 + project_ball(x + take_step(dir, cfg) - x0, cfg.epsilon);
    const double obj = (s.sal.scores(x) - s.clean_scores).squaredNorm();
    tr.records.push_back(make_record(m, s, x0, x, t, obj, gamma, cfg));
  }
  finish(tr, x0, x, clean_pred);
  return tr;
}

Adversary adversarial_neighborhood(const Mlp& m, std::size_t k, const AttackConfig& cfg,
                                   const ExplainOptions& opt) {
  return [&m, k, cfg, opt](const Vector& x, std::size_t draw) -> Vector {
    AttackConfig local = cfg;
    local.seed = derive_seed(cfg.seed, draw);
    return er_attack(m, x, k, local, opt).x_adv;
  };
}

}  // namespace rankrobust
