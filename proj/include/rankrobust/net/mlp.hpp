#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rankrobust/common.hpp"

namespace rankrobust {

enum class ActivationKind { relu, leaky_relu, softplus };

/// Hidden-layer nonlinearity.
///
/// ReLU and LeakyReLU use the right derivative at 0 (slope 1), so
/// first(0) == 1 and second(x) == 0 everywhere. Softplus(x; rho) is
/// (1/rho) * log(1 + exp(rho * x)).
struct Activation {
  ActivationKind kind = ActivationKind::leaky_relu;
  double param = 0.01;  // leaky slope, or softplus rho; unused for relu

  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky_relu(double slope = 0.01) { return {ActivationKind::leaky_relu, slope}; }
  static Activation softplus(double rho = 1.0) { return {ActivationKind::softplus, rho}; }

  double value(double a) const;
  double first(double a) const;
  double second(double a) const;

  std::string name() const;
  static Activation parse(const std::string& name, double param);
  void validate() const;
  bool smooth() const { return kind == ActivationKind::softplus; }
};

/// Which scalar the saliency differentiates: the class probability f_c or
/// the class logit.
enum class OutputKind { probability, logit };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

class Mlp;

/// Per-layer carrier for the weight gradient of a scalar objective.
struct WeightGrad {
  std::vector<DenseLayer> layers;

  static WeightGrad zeros_like(const Mlp& m);

  WeightGrad& operator+=(const WeightGrad& o);
  WeightGrad& operator-=(const WeightGrad& o);
  WeightGrad& operator*=(double s);
  void axpy(double a, const WeightGrad& o);

  double dot(const WeightGrad& o) const;
  double squared_norm() const;
  std::size_t size() const;
  std::vector<double> flatten() const;
  bool all_finite() const;
};

WeightGrad operator-(WeightGrad a, const WeightGrad& b);
WeightGrad operator*(double s, WeightGrad a);

struct HessianResult {
  Matrix hessian;
  bool finite_difference = false;  // true when depth > 2
};

/// Fully connected classifier: hidden layers share one activation, the head
/// is a sigmoid when the output width is 1 and a softmax otherwise.
///
/// A sigmoid head is treated as two classes: f_1 = p and f_0 = 1 - p (logits
/// z and -z). All read operations are const and safe to call concurrently.
class Mlp {
 public:
  Mlp() = default;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init of weights and biases.
  Mlp(std::vector<std::size_t> layer_dims, Activation activation, std::uint64_t seed);

  /// Explicit weights; shapes must chain.
  Mlp(std::vector<DenseLayer> layers, Activation activation, std::uint64_t seed = 0);

  std::size_t input_dim() const { return dims_.front(); }
  std::size_t output_dim() const { return dims_.back(); }
  std::size_t num_classes() const { return output_dim() == 1 ? 2 : output_dim(); }
  std::size_t depth() const { return layers_.size(); }
  bool sigmoid_head() const { return output_dim() == 1; }
  const std::vector<std::size_t>& layer_dims() const { return dims_; }
  const Activation& activation() const { return activation_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  Vector logits(const Vector& x) const;

  /// Probability vector: one entry for a sigmoid head, C for softmax.
  Vector forward(const Vector& x) const;

  /// Categorical distribution over num_classes() (expands a sigmoid head).
  Vector class_probabilities(const Vector& x) const;

  std::size_t predict(const Vector& x) const;

  /// f_c(x) under the chosen output kind.
  double output(const Vector& x, std::size_t c, OutputKind kind = OutputKind::probability) const;

  /// grad_x f_c(x) by backpropagation.
  Vector grad_input(const Vector& x, std::size_t c,
                    OutputKind kind = OutputKind::probability) const;

  /// Closed form for depth <= 2, central-difference columns otherwise.
  HessianResult hessian_input(const Vector& x, std::size_t c,
                              OutputKind kind = OutputKind::probability) const;

  /// Jacobian of class_probabilities() w.r.t. x (num_classes x n).
  Matrix probability_jacobian(const Vector& x) const;

  /// Cross-entropy (binary for sigmoid heads) of label y.
  double loss(const Vector& x, std::size_t y) const;
  WeightGrad grad_weights(const Vector& x, std::size_t y) const;

  /// grad_w f_c(x).
  WeightGrad grad_output_weights(const Vector& x, std::size_t c,
                                 OutputKind kind = OutputKind::probability) const;

  /// grad_w (u . grad_x f_c(x)), exact (forward tangent, then reverse).
  WeightGrad grad_tangent_weights(const Vector& x, const Vector& u, std::size_t c,
                                  OutputKind kind = OutputKind::probability) const;

  /// w <- w - lr * g.
  void apply_update(const WeightGrad& g, double lr);

 private:
  struct Cache {
    std::vector<Vector> pre;   // pre-activations per layer
    std::vector<Vector> post;  // post[0] = x, post[l] = act(pre[l-1]) for hidden layers
  };

  Cache run(const Vector& x) const;
  Vector output_grad(const Vector& z, std::size_t c, OutputKind kind) const;
  Matrix output_hessian(const Vector& z, std::size_t c, OutputKind kind) const;
  Vector backprop_input(const Cache& cache, Vector delta) const;
  WeightGrad backprop_weights(const Cache& cache, Vector delta) const;
  void check_input(const Vector& x) const;
  void check_class(std::size_t c) const;
  void validate() const;

  std::vector<std::size_t> dims_;
  std::vector<DenseLayer> layers_;
  Activation activation_;
  std::uint64_t seed_ = 0;
};

/// Builds an Mlp; alias of the seeded constructor.
Mlp mlp_new(const std::vector<std::size_t>& layer_dims, Activation activation,
            std::uint64_t seed);

double sigmoid(double z);

}  // namespace rankrobust
