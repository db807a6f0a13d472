#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rankrobust/thickness/thickness.hpp"

using namespace rankrobust;

namespace {

// I(x) = A x + b: the raw saliency of 0.5 x^T A x + b^T x.
class QuadraticField : public SaliencyField {
 public:
  QuadraticField(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {}
  std::size_t input_dim() const override { return static_cast<std::size_t>(b_.size()); }
  Vector scores(const Vector& x) const override { return a_ * x + b_; }
  Matrix jacobian(const Vector&) const override { return a_; }

 private:
  Matrix a_;
  Vector b_;
};

Mlp linear_model(const Vector& w) {
  Matrix W = w.transpose();
  return Mlp(std::vector<DenseLayer>{{W, Vector::Zero(1)}}, Activation::relu());
}

NeighborhoodSpec ball(double eps, std::uint64_t seed = 1, std::size_t m1 = 20, std::size_t m2 = 10) {
  NeighborhoodSpec nb;
  nb.kind = NeighborhoodKind::uniform_ball;
  nb.radius = eps;
  nb.m1 = m1;
  nb.m2 = m2;
  nb.seed = seed;
  return nb;
}

}  // namespace

TEST_SUITE("thickness") {
  TEST_CASE("gap is a signed antisymmetric difference") {
    Vector s(2);
    s << 0.5, 0.2;
    CHECK(gap(make_map(s), 0, 1) == doctest::Approx(0.3));
    Rng rng(1);
    const Vector v = rng.normal_vector(8);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j)
        if (i != j) CHECK(gap(v, i, j) == -gap(v, j, i));
    const auto order = ranking(v);
    for (std::size_t a = 0; a + 1 < order.size(); ++a) CHECK(gap(v, order[a], order[a + 1]) > 0.0);
    CHECK_THROWS_AS(gap(v, 0, 8), std::invalid_argument);
    CHECK_THROWS_AS(gap(v, 2, 2), std::invalid_argument);
  }

  TEST_CASE("indicator thickness at the extremes") {
    Vector w(3);
    w << 100.0, 0.01, 0.02;
    const Mlp m = linear_model(w);
    const Vector x = Vector::Zero(3);
    const NeighborhoodSpec nb = ball(1e-3);
    CHECK(pairwise_thickness_indicator(m, x, 0, 1, nb, {Postprocess::abs, OutputKind::logit}).value == 1.0);
    CHECK(pairwise_thickness_indicator(m, x, 1, 0, nb, {Postprocess::abs, OutputKind::logit}).value == 0.0);
    const auto e = pairwise_thickness_indicator(m, x, 0, 2, nb);
    CHECK(e.value == 1.0);
    CHECK(e.std_error == 0.0);
  }

  TEST_CASE("indicator and relaxed estimates agree with a denser Monte Carlo") {
    Rng rng(2);
    int checked = 0, outside = 0;
    for (int t = 0; t < 20; ++t) {
      Mlp m({4, 6, 1}, Activation::softplus(1.0), static_cast<std::uint64_t>(t));
      const Vector x = rng.normal_vector(4);
      const auto order = ranking(simple_grad(m, x).scores);
      const std::size_t i = order[1], j = order[2];
      const NeighborhoodSpec nb = ball(1.0, 100 + t);
      const NeighborhoodSpec dense = ball(1.0, 900 + t, 200, 100);
      const auto a = pairwise_thickness_relaxed(m, x, i, j, nb);
      const auto b = pairwise_thickness_relaxed(m, x, i, j, dense);
      const double se = std::hypot(a.std_error, b.std_error);
      ++checked;
      if (std::abs(a.value - b.value) > 3 * se + 1e-12) ++outside;
      const auto c = pairwise_thickness_indicator(m, x, i, j, nb);
      const auto d = pairwise_thickness_indicator(m, x, i, j, dense);
      CHECK(c.value >= 0.0);
      CHECK(c.value <= 1.0);
      ++checked;
      if (std::abs(c.value - d.value) > 3 * std::hypot(c.std_error, d.std_error) + 1e-12) ++outside;
    }
    // 3-sigma agreement; a single miss in 40 is within chance.
    CHECK(outside <= 1);
    CHECK(checked == 40);
  }

  TEST_CASE("relaxed thickness with a zero radius is the clean gap") {
    Mlp m({5, 6, 1}, Activation::softplus(1.0), 3);
    const Vector x = Vector::LinSpaced(5, -1, 1);
    const SaliencyMap s = simple_grad(m, x);
    const auto e = pairwise_thickness_relaxed(m, x, 0, 3, ball(0.0));
    CHECK(e.value == doctest::Approx(gap(s, 0, 3)).epsilon(1e-15));
  }

  TEST_CASE("adding a constant to I_i shifts the relaxed thickness by that constant") {
    // An extra always-active leaky unit adds c * x_i to the logit, so the raw
    // logit saliency gains exactly c on feature i.
    Mlp m({4, 5, 1}, Activation::leaky_relu(0.01), 4);
    const double c = 0.37;
    const std::size_t i = 2;
    std::vector<DenseLayer> L = m.layers();
    Matrix w1(6, 4);
    w1 << L[0].weight, Matrix::Zero(1, 4);
    w1(5, static_cast<Eigen::Index>(i)) = c;
    Vector b1(6);
    b1 << L[0].bias, 1000.0;
    Matrix w2(1, 6);
    w2 << L[1].weight, 1.0;
    Mlp aug(std::vector<DenseLayer>{{w1, b1}, {w2, L[1].bias}}, m.activation());
    const Vector x = Vector::LinSpaced(4, -0.3, 0.3);
    const ExplainOptions opt{Postprocess::raw, OutputKind::logit};
    const MlpSaliency s0(m, 1, opt), s1(aug, 1, opt);
    const auto a = pairwise_thickness_relaxed(s0, x, i, 0, ball(0.5, 7));
    const auto b = pairwise_thickness_relaxed(s1, x, i, 0, ball(0.5, 7));
    CHECK(b.value - a.value == doctest::Approx(c).epsilon(1e-9));
  }

  TEST_CASE("top-k thickness matches the explicit double loop") {
    Rng rng(5);
    for (int t = 0; t < 5; ++t) {
      Mlp m({6, 8, 1}, Activation::softplus(1.0), static_cast<std::uint64_t>(t));
      const Vector x = rng.normal_vector(6);
      const NeighborhoodSpec nb = ball(0.8, 11 + t);
      const auto top = top_k(simple_grad(m, x).scores, 2);
      for (ThicknessEstimator est : {ThicknessEstimator::relaxed, ThicknessEstimator::indicator}) {
        double brute = 0;
        for (std::size_t i : top)
          for (std::size_t j = 0; j < 6; ++j) {
            if (std::find(top.begin(), top.end(), j) != top.end()) continue;
            brute += est == ThicknessEstimator::relaxed ? pairwise_thickness_relaxed(m, x, i, j, nb).value
                                                         : pairwise_thickness_indicator(m, x, i, j, nb).value;
          }
        CHECK(topk_thickness(m, x, 2, nb, {}, est).value == doctest::Approx(brute / 8.0).epsilon(1e-10));
      }
    }
    CHECK_THROWS_AS(topk_thickness(Mlp({3, 2, 1}, Activation::relu(), 0), Vector::Zero(3), 3, ball(0.1)),
                    std::invalid_argument);
  }

  TEST_CASE("n = 2, k = 1 reduces to the single pair") {
    Mlp m({2, 3, 1}, Activation::softplus(1.0), 6);
    const Vector x = Vector::LinSpaced(2, 0.2, -0.4);
    const auto top = top_k(simple_grad(m, x).scores, 1);
    const std::size_t i = top[0], j = 1 - i;
    const NeighborhoodSpec nb = ball(0.3, 2);
    CHECK(topk_thickness(m, x, 1, nb).value ==
          doctest::Approx(pairwise_thickness_relaxed(m, x, i, j, nb).value).epsilon(1e-12));
  }

  TEST_CASE("top-k thickness is invariant to feature relabeling") {
    Mlp m({5, 6, 1}, Activation::softplus(1.0), 8);
    const std::vector<Eigen::Index> perm{2, 4, 0, 3, 1};
    Mlp p = m;
    for (Eigen::Index c = 0; c < 5; ++c)
      p.mutable_layers()[0].weight.col(c) = m.layers()[0].weight.col(perm[static_cast<std::size_t>(c)]);
    auto permute = [&](const Vector& v) {
      Vector o(5);
      for (Eigen::Index c = 0; c < 5; ++c) o[c] = v[perm[static_cast<std::size_t>(c)]];
      return o;
    };
    Rng rng(4);
    std::vector<Vector> deltas;
    for (int r = 0; r < 10; ++r) deltas.push_back(rng.uniform_ball(5, 0.5));
    NeighborhoodSpec a = ball(0.5), b = ball(0.5);
    a.kind = b.kind = NeighborhoodKind::adversarial;
    a.adversary = [&](const Vector& x, std::size_t r) -> Vector { return x + deltas[r]; };
    b.adversary = [&](const Vector& x, std::size_t r) -> Vector { return x + permute(deltas[r]); };
    a.m1 = b.m1 = 10;
    const Vector x = Vector::LinSpaced(5, -1, 1);
    CHECK(topk_thickness(p, permute(x), 2, b).value ==
          doctest::Approx(topk_thickness(m, x, 2, a).value).epsilon(1e-10));
  }

  TEST_CASE("bounds collapse to the gap as eps shrinks") {
    Mlp m({4, 5, 1}, Activation::softplus(1.0), 9);
    const Vector x = Vector::LinSpaced(4, -1, 1);
    const double h = gap(simple_grad(m, x), 0, 1);
    const ThicknessBounds b = thickness_bounds(m, x, 0, 1, 1e-9, 10);
    CHECK(b.lower == doctest::Approx(h).epsilon(1e-7));
    CHECK(b.upper == doctest::Approx(h).epsilon(1e-7));
    CHECK_THROWS_AS(thickness_bounds(m, x, 0, 1, 0.0), std::invalid_argument);
  }

  TEST_CASE("bounds on a constant-Hessian fixture match the closed form") {
    Matrix a(3, 3);
    a << 2.0, 0.5, -1.0, 0.5, 1.0, 0.3, -1.0, 0.3, 3.0;
    Vector b(3);
    b << 1.0, 0.2, -0.4;
    const QuadraticField q(a, b);
    const Vector x = Vector::LinSpaced(3, 0.1, 0.5);
    const double eps = 0.2;
    const ThicknessBounds tb = thickness_bounds(q, x, 0, 2, eps, 25);
    const Vector s = a * x + b;
    const double h = s[0] - s[2];
    CHECK(tb.lower == doctest::Approx(h - eps * 0.5 * (a.row(0) - a.row(2)).norm()).epsilon(1e-12));
    CHECK(tb.upper == doctest::Approx(h + eps * (a.row(0).norm() + a.row(2).norm())).epsilon(1e-12));
    // Linear saliency: the relaxed thickness equals the gap (zero-mean ball).
    const auto rel = pairwise_thickness_relaxed(q, x, 0, 2, ball(eps, 3, 400));
    CHECK(rel.value >= tb.lower - 3 * rel.std_error);
    CHECK(rel.value <= tb.upper + 3 * rel.std_error);
  }

  TEST_CASE("Monte-Carlo relaxed thickness lies inside the bounds") {
    Rng rng(13);
    int fails = 0;
    for (int t = 0; t < 30; ++t) {
      Mlp m({5, 8, 1}, Activation::softplus(1.0), static_cast<std::uint64_t>(500 + t));
      const Vector x = rng.normal_vector(5);
      const double eps = rng.uniform(0.01, 0.1);
      const std::size_t i = rng.below(5);
      const std::size_t j = (i + 1 + rng.below(4)) % 5;
      const auto rel = pairwise_thickness_relaxed(m, x, i, j, ball(eps, 40 + t));
      const ThicknessBounds b = thickness_bounds(m, x, i, j, eps, 20, t);
      if (rel.value < b.lower - 3 * rel.std_error || rel.value > b.upper + 3 * rel.std_error) ++fails;
    }
    CHECK(fails == 0);
  }

  TEST_CASE("model thickness aggregation") {
    Mlp m({4, 5, 1}, Activation::softplus(1.0), 10);
    Rng rng(6);
    Matrix xs(5, 4);
    for (Eigen::Index r = 0; r < 5; ++r) xs.row(r) = rng.normal_vector(4).transpose();
    const NeighborhoodSpec nb = ball(0.3, 21);
    const ThicknessReport one = model_thickness(m, xs.topRows(1), 2, nb);
    CHECK(one.mean == one.values[0]);
    const ThicknessReport all = model_thickness(m, xs, 2, nb, {}, ThicknessEstimator::relaxed, 3);
    const ThicknessReport serial = model_thickness(m, xs, 2, nb);
    CHECK(all.values == serial.values);
    // Reordering samples permutes values and keeps the mean.
    Matrix rev = xs.colwise().reverse();
    ThicknessReport r = model_thickness(m, rev, 2, nb);
    double s1 = 0, s2 = 0;
    for (double v : all.values) s1 += v;
    for (double v : r.values) s2 += v;
    // Per-sample streams follow the row index, so values differ only by sampling.
    CHECK(std::abs(s1 - s2) / 5.0 < 0.1 * std::max(1e-3, std::abs(all.mean)) + 1e-3);
    // With a zero radius every stream gives the clean value: exact invariance.
    const ThicknessReport z1 = model_thickness(m, xs, 2, ball(0.0));
    const ThicknessReport z2 = model_thickness(m, rev, 2, ball(0.0));
    CHECK(z1.mean == doctest::Approx(z2.mean).epsilon(1e-14));
    CHECK_THROWS_AS(model_thickness(m, Matrix(0, 4), 2, nb), std::invalid_argument);
  }

  TEST_CASE("empirical risks: extremes, sandwich and phi_u Lipschitz") {
    Vector sep(4);
    sep << 5.0, 4.0, 1.0, 0.0;
    const auto r0 = empirical_risks(make_map(sep), 2, 0.5);
    CHECK(r0.r01 == 0.0);
    CHECK(r0.r_phi_u == 0.0);
    CHECK(r0.r01_u == 0.0);
    const std::vector<std::size_t> inverted{2, 3};
    const auto r1 = empirical_risks(sep, inverted, 0.5);
    CHECK(r1.r01 == 1.0);
    CHECK(r1.r_phi_u == 1.0);
    CHECK(r1.r01_u == 1.0);
    CHECK_THROWS_AS(empirical_risks(make_map(sep), 2, 0.0), std::invalid_argument);
    Rng rng(7);
    int violations = 0;
    for (int t = 0; t < 10000; ++t) {
      const Vector s = rng.normal_vector(10);
      const std::size_t k = 1 + rng.below(9);
      std::vector<std::size_t> top;
      for (std::size_t f : rng.permutation(10)) {
        if (top.size() == k) break;
        top.push_back(f);
      }
      const double u = rng.uniform(0.01, 2.0);
      const auto r = empirical_risks(s, top, u);
      if (!(r.r01 <= r.r_phi_u && r.r_phi_u <= r.r01_u)) ++violations;
      const double a = rng.normal(), b = rng.normal();
      if (std::abs(phi_u(a, u) - phi_u(b, u)) > std::abs(a - b) / u + 1e-15) ++violations;
    }
    CHECK(violations == 0);
  }
}
