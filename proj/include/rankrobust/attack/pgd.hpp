#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rankrobust/attack/multipliers.hpp"
#include "rankrobust/explain/saliency.hpp"
#include "rankrobust/thickness/thickness.hpp"

namespace rankrobust {

struct AttackConfig {
  double step = 1e-3;        // l2 length of each step
  std::size_t max_iters = 1000;
  double epsilon = 1.0;      // l2 budget on x' - x
  double linf_cap = 0.0;     // per-step max-norm cap; <= 0 disables
  MultiplierScheme scheme = MultiplierScheme::none;
  double multiplier_rate = 0.1;  // eta_gamma for gda, eta for hedge
  std::uint64_t seed = 0;
  double kappa = 1e-4;       // finite-difference step for Hessian-vector products
  bool record_states = false;  // keep x^(t) in every record

  void validate() const;
};

struct IterationRecord {
  std::size_t iter = 0;
  Vector x;                 // only when record_states
  double delta_norm = 0.0;  // ||x^(t) - x||_2
  double objective = 0.0;
  double patk = 1.0;        // P@k against the clean map
  std::size_t flipped_pairs = 0;
  Vector constraints;       // g_1.. (symmetric KL)
  Vector gamma;             // multipliers after this step
  std::size_t prediction = 0;
};

struct AttackTrace {
  std::string attack;
  std::vector<IterationRecord> records;  // records[0] is the clean input
  Vector x_adv;
  std::vector<std::size_t> clean_top;
  std::optional<std::size_t> first_flip_iter;
  double budget_used = 0.0;
  bool prediction_changed = false;

  double final_patk() const { return records.empty() ? 1.0 : records.back().patk; }
};

/// Symmetric KL divergence sum_c (p_c - q_c)(log p_c - log q_c).
double symmetric_kl(const Vector& p, const Vector& q);

/// Number of (top, rest) pairs of `top` with I_i < I_j under `scores`.
std::size_t flipped_pairs(const Vector& scores, const std::vector<std::size_t>& top);

/// |top_k(a) intersect top| / k for a fixed reference set.
double patk_against(const Vector& scores, const std::vector<std::size_t>& top);

struct LagrangianValue {
  double value = 0.0;
  Vector g;  // g_0 = ranking objective c . I(x), g_1 = symKL(f(x0), f(x))
};

/// L = sum_k gamma_k g_k, with the pair set taken from the clean ranking at x0.
LagrangianValue lagrangian_value(const Mlp& m, const Vector& x0, const Vector& x, std::size_t k,
                                 const Vector& gamma, const ExplainOptions& opt = {});

/// PGD that minimizes the sum of all top-vs-rest gaps of the clean ranking.
AttackTrace er_attack(const Mlp& m, const Vector& x, std::size_t k, const AttackConfig& cfg,
                      const ExplainOptions& opt = {});

/// PGD that maximizes ||I(x') - I(x)||^2. P@k is tracked with k. The
/// gradient vanishes at x' = x, so the first step uses a seeded random
/// direction.
AttackTrace mse_attack(const Mlp& m, const Vector& x, std::size_t k, const AttackConfig& cfg,
                       const ExplainOptions& opt = {});

/// Uses an ERAttack endpoint as the far point of every thickness segment.
Adversary adversarial_neighborhood(const Mlp& m, std::size_t k, const AttackConfig& cfg,
                                   const ExplainOptions& opt = {});

}  // namespace rankrobust
