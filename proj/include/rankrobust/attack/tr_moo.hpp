#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rankrobust/attack/pgd.hpp"

namespace rankrobust {

struct TrMooConfig {
  double eps_f = 0.05;     // tolerance on ||f~(x) - f~(x0)||_inf
  double epsilon = 1.0;    // l2 budget on x - x0, folded into f~
  double delta1 = 0.1;     // initial trust radius
  double eta = 0.1;        // acceptance threshold on min rho
  double gamma = 0.5;      // radius shrink factor
  std::size_t max_iters = 200;
  double crit_tol = 1e-6;  // objectives with chi below this are removed
  double min_radius = 1e-12;
  bool adjacent_pairs = false;  // boundary pairs only instead of all k(n-k)
  double objective_scale = 0.0;  // weight w on every gap; <= 0 picks one at x0

  void validate() const;
};

/// Objective l is h_l(x) = w (I_i(x) - I_j(x)) for a (top, rest) pair (i, j).
using FeaturePair = std::pair<std::size_t, std::size_t>;

/// Problem data for one TR-MOO run: the saliency field, the prediction
/// model, the clean point and the pair list.
struct TrMooProblem {
  const Mlp* model = nullptr;
  const SaliencyField* saliency = nullptr;
  Vector x0;
  std::vector<FeaturePair> pairs;
  double eps_f = 0.05;
  double epsilon = 1.0;
  double objective_scale = 1.0;  // w

  std::size_t input_dim() const { return static_cast<std::size_t>(x0.size()); }
  /// Scale on x - x0 inside f~, so that ||.||_inf <= eps_f keeps ||x - x0||_2 <= epsilon.
  double position_scale() const;
  /// c(x) = f~(x) - f~(x0) = [f(x) - f(x0), s (x - x0)].
  Vector constraint(const Vector& x) const;
  Matrix constraint_jacobian(const Vector& x) const;
  double h(const Vector& x, std::size_t l) const;
};

/// The merit trades constraint rows against gaps one to one, so with raw
/// saliency gaps far flatter than the position rows no step can pay off.
/// Returns w with median_l ||w g_l(x0)||_1 equal to twice the largest l1 row
/// norm of the constraint Jacobian at x0 (1 when every g_l vanishes).
double auto_objective_scale(const TrMooProblem& p);

/// phi_l(x, t) = ||c(x)||_inf + |h_l(x) - t|.
double merit_value(const TrMooProblem& p, const Vector& x, std::size_t l, double t);

struct TrSubproblemResult {
  double alpha = 0.0;
  Vector d;
  bool optimal = false;
};

/// min alpha s.t. ||c + J d||_inf + |a_l + g_l . d| <= alpha for all l and
/// ||d||_inf <= delta, where a_l = h_l - t_l. Solved as an LP.
TrSubproblemResult tr_subproblem(const Matrix& jac, const Vector& c, const std::vector<Vector>& grads,
                                 const Vector& h_vals, const Vector& t_vals, double delta);

/// chi = l(0) - min_{||d||_inf <= delta} l(d) for one objective.
double criticality(const Matrix& jac, const Vector& c, const Vector& grad, double h, double t, double delta);
double criticality(const TrMooProblem& p, const Vector& x, std::size_t l, double t, double delta);

struct TrIteration {
  std::size_t iter = 0;
  bool accepted = false;
  double radius = 0.0;
  double min_rho = 0.0;
  double alpha = 0.0;
  double constraint_norm = 0.0;  // ||c(x^(k))||_inf after the step
  double min_gap = 0.0;          // min over active l of h_l at the iterate
  std::vector<double> targets;       // per objective, NaN once removed
  std::vector<double> target_drop;   // t_old - t_new on accepted steps
  std::size_t active = 0;
  std::size_t removed_now = 0;
};

struct TrMooTrace {
  AttackTrace trace;  // P@k, flips and budget per accepted iterate
  std::vector<TrIteration> iterations;
  std::vector<FeaturePair> pairs;
  std::size_t removals = 0;
  std::optional<std::size_t> first_flip_iter;
  std::string termination;  // "flipped", "all_removed", "max_iters", "radius"
  double objective_scale = 1.0;  // w actually used; h_low and h_up are in its units
  double h_low = 0.0, h_up = 0.0;
  double theoretical_bound = 0.0;  // ceil(m (h_up - h_low) / crit_tol^2) with kappa = 1
};

/// Trust-region multi-objective attack on the top-k ranking of x.
TrMooTrace tr_moo_attack(const Mlp& m, const Vector& x, std::size_t k, const TrMooConfig& cfg,
                         const ExplainOptions& opt = {});

/// Same, over a caller-supplied saliency field and pair list.
TrMooTrace tr_moo_attack(const TrMooProblem& p, std::size_t k, const TrMooConfig& cfg);

}  // namespace rankrobust
