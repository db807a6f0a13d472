#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankrobust/net/mlp.hpp"

namespace rankrobust {

enum class Postprocess { raw, abs, abs_normalized };
enum class ExplainerKind { simple, smoothgrad, integrated_gradients };

std::string to_string(Postprocess p);
Postprocess parse_postprocess(const std::string& s);
std::string to_string(ExplainerKind k);
ExplainerKind parse_explainer(const std::string& s);

struct ExplainOptions {
  Postprocess postprocess = Postprocess::abs;
  OutputKind output = OutputKind::probability;
};

struct ExplainerSpec {
  ExplainerKind kind = ExplainerKind::simple;
  std::size_t samples = 50;      // SmoothGrad M
  double sigma = 0.7071067811865476;  // SmoothGrad noise std (variance 0.5)
  std::size_t steps = 100;       // IG Riemann steps
  std::uint64_t seed = 0;
};

struct SaliencyMap {
  Vector scores;  // postprocessed importance I(x)
  Vector raw;     // unprocessed gradient (mean gradient for SG/IG)
  ExplainerKind explainer = ExplainerKind::simple;
  Postprocess postprocess = Postprocess::abs;
  std::size_t class_index = 0;

  std::size_t size() const { return static_cast<std::size_t>(scores.size()); }
  double operator[](std::size_t i) const { return scores[static_cast<Eigen::Index>(i)]; }
};

Vector apply_postprocess(const Vector& raw, Postprocess p);

/// Wraps a raw score vector (e.g. a fixture) as a map.
SaliencyMap make_map(const Vector& scores, Postprocess p = Postprocess::raw);

/// Gradient of the predicted-class output.
SaliencyMap simple_grad(const Mlp& m, const Vector& x, const ExplainOptions& opt = {});
SaliencyMap simple_grad(const Mlp& m, const Vector& x, std::size_t c, const ExplainOptions& opt = {});

/// Mean of `samples` postprocessed maps at x + N(0, sigma^2 I). The class is
/// fixed to the prediction at x. sigma == 0 returns simple_grad.
SaliencyMap smooth_grad(const Mlp& m, const Vector& x, std::size_t samples, double sigma,
                        std::uint64_t seed, const ExplainOptions& opt = {});

/// (x - x0) * mean gradient over midpoints of the straight path x0 -> x.
SaliencyMap integrated_grad(const Mlp& m, const Vector& x, const Vector& x0, std::size_t steps,
                            const ExplainOptions& opt = {});

SaliencyMap explain(const Mlp& m, const Vector& x, const ExplainerSpec& spec,
                    const ExplainOptions& opt = {});

/// Indices of the k largest scores in descending order; equal scores are
/// ordered by ascending index.
std::vector<std::size_t> top_k(const Vector& scores, std::size_t k);
std::vector<std::size_t> top_k(const SaliencyMap& s, std::size_t k);

/// Full descending ranking under the same tie rule.
std::vector<std::size_t> ranking(const Vector& scores);

/// Membership weights c with c_t = n - k on the top-k set and -k elsewhere,
/// so c . I equals the sum of all k(n-k) top-vs-rest gaps.
Vector collapsed_direction(const std::vector<std::size_t>& top, std::size_t n);

/// A differentiable map x -> I(x). Thickness and attack code only see this
/// interface, so fixtures with closed-form saliency can stand in for a net.
class SaliencyField {
 public:
  virtual ~SaliencyField() = default;
  virtual std::size_t input_dim() const = 0;
  virtual Vector scores(const Vector& x) const = 0;
  /// dI/dx, n x n.
  virtual Matrix jacobian(const Vector& x) const = 0;
  /// grad_x (w . I(x)).
  virtual Vector score_vjp(const Vector& x, const Vector& w) const {
    return jacobian(x).transpose() * w;
  }
};

/// Saliency of one Mlp with the explained class pinned, plus the
/// vector-Jacobian products the attacks and regularizers need.
class MlpSaliency : public SaliencyField {
 public:
  enum class Mode { finite_difference, exact };

  MlpSaliency(const Mlp& m, std::size_t cls, ExplainOptions opt = {},
              Mode mode = Mode::finite_difference, double kappa = 1e-4);

  /// Pins the class to the prediction at x.
  static MlpSaliency at(const Mlp& m, const Vector& x, ExplainOptions opt = {},
                        Mode mode = Mode::finite_difference, double kappa = 1e-4);

  const Mlp& model() const { return *model_; }
  std::size_t class_index() const { return cls_; }
  std::size_t input_dim() const override { return model_->input_dim(); }
  const ExplainOptions& options() const { return opt_; }

  Vector raw(const Vector& x) const;
  Vector scores(const Vector& x) const override;
  SaliencyMap map(const Vector& x) const;

  /// grad_x (w . I(x)), treating the sign pattern as locally constant.
  Vector score_vjp(const Vector& x, const Vector& w) const override;

  /// dI/dx from the input Hessian.
  Matrix jacobian(const Vector& x) const override;

  /// The vector u with grad_x (w . I) = H u, given the raw gradient g at x.
  Vector pullback_weights(const Vector& g, const Vector& w) const;

 private:
  const Mlp* model_;
  std::size_t cls_;
  ExplainOptions opt_;
  Mode mode_;
  double kappa_;
};

}  // namespace rankrobust
