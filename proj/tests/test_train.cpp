#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "rankrobust/data/dataset.hpp"
#include "rankrobust/eval/metrics.hpp"
#include "rankrobust/net/checkpoint.hpp"
#include "rankrobust/train/at_equivalence.hpp"
#include "rankrobust/train/regularizer.hpp"
#include "rankrobust/train/trainer.hpp"

using namespace rankrobust;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

TrainSpec spec_for(Method m, std::size_t k = 2, std::size_t kp = 1) {
  TrainSpec s;
  s.method = m;
  s.k = k;
  s.k_prime = kp;
  return s;
}

// Brute-force min-gap selection: all candidate pairs sorted by (gap, rank i, rank j).
PairList brute_min_gap(const Vector& s, std::size_t k, std::size_t kp) {
  const std::vector<std::size_t> order = ranking(s);
  std::vector<std::tuple<double, std::size_t, std::size_t>> all;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = k; b < order.size(); ++b) {
      if (a + kp < k || b >= k + kp) continue;
      all.emplace_back(s[static_cast<Eigen::Index>(order[a])] - s[static_cast<Eigen::Index>(order[b])], a, b);
    }
  std::sort(all.begin(), all.end());
  PairList out;
  for (std::size_t q = 0; q < kp; ++q) out.emplace_back(order[std::get<1>(all[q])], order[std::get<2>(all[q])]);
  return out;
}

bool same_weights(const Mlp& a, const Mlp& b) {
  if (a.layers().size() != b.layers().size()) return false;
  for (std::size_t l = 0; l < a.layers().size(); ++l)
    if (a.layers()[l].weight != b.layers()[l].weight || a.layers()[l].bias != b.layers()[l].bias) return false;
  return true;
}

Dataset small_data(double sep, std::uint64_t seed, std::size_t n = 10, std::size_t samples = 400) {
  return standardize(split(synth_gaussian(n, samples, sep, seed), {0.7, 0.15, 0.15}, seed));
}

TrainSpec quick(Method m, std::size_t epochs) {
  TrainSpec s;
  s.method = m;
  s.k = 3;
  s.k_prime = 2;
  s.hidden = {8};
  s.max_epochs = epochs;
  s.val_attack_iters = 5;
  s.val_attack_samples = 8;
  s.seed = 1;
  return s;
}

// Closed-form saliency field I(x) = A x + b.
class LinearField : public SaliencyField {
 public:
  LinearField(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {}
  std::size_t input_dim() const override { return static_cast<std::size_t>(a_.cols()); }
  Vector scores(const Vector& x) const override { return a_ * x + b_; }
  Matrix jacobian(const Vector&) const override { return a_; }

 private:
  Matrix a_;
  Vector b_;
};

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("method, pair mode and gap form names") {
    for (const char* n : {"vanilla", "wd", "sp", "est_h", "exact_h", "ssr", "at", "r2et", "r2et_noH", "r2et_mm", "r2et_mm_noH"})
      CHECK(to_string(parse_method(n)) == n);
    CHECK_THROWS_AS(parse_method("r3et"), ConfigError);
    CHECK(parse_pair_mode("min_gap") == PairMode::min_gap);
    CHECK(parse_gap_form("exponential") == GapForm::exponential);
    CHECK(spec_for(Method::r2et).pair_mode_or_default() == PairMode::all);
    CHECK(spec_for(Method::r2et_mm).pair_mode_or_default() == PairMode::min_gap);
    TrainSpec e = spec_for(Method::r2et);
    e.gap_form = GapForm::exponential;
    CHECK(e.pair_mode_or_default() == PairMode::boundary);
  }

  TEST_CASE("train spec JSON round trip and strict keys") {
    TrainSpec s = spec_for(Method::r2et_mm, 4, 3);
    s.lambda1 = 0.1;
    s.hidden = {16, 4};
    s.auc_threshold = 0.86;
    const TrainSpec back = train_spec_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
    CHECK_THROWS_AS(train_spec_from_json({{"methd", "r2et"}}), ConfigError);
    try {
      train_spec_from_json({{"lambda1", "big"}});
      FAIL("wrong type accepted");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("lambda1") != std::string::npos);
    }
    TrainSpec bad;
    bad.k_prime = 9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("pair selection examples") {
    const SaliencyMap s = make_map(vec({9, 8, 1.1, 1.0, 0.5, 0.2}));
    CHECK(select_pairs(s, 2, 1, PairMode::boundary) == PairList{{1, 2}});
    CHECK(select_pairs(s, 2, 2, PairMode::boundary) == PairList{{1, 2}, {0, 3}});
    CHECK(select_pairs(s, 2, 2, PairMode::min_gap).front() == std::make_pair<std::size_t, std::size_t>(1, 2));
    CHECK(select_pairs(s, 2, 1, PairMode::all).size() == 8);
    CHECK_THROWS_AS(select_pairs(s, 2, 3, PairMode::boundary), std::invalid_argument);
    CHECK_THROWS_AS(select_pairs(s, 5, 2, PairMode::min_gap), std::invalid_argument);
  }

  TEST_CASE("min-gap selection matches enumeration on random maps") {
    Rng rng(9);
    for (int t = 0; t < 300; ++t) {
      const std::size_t n = 4 + rng.below(8);
      const std::size_t k = 1 + rng.below(n - 1);
      const std::size_t kp = 1 + rng.below(std::min(k, n - k));
      Vector sc = rng.normal_vector(n);
      if (t % 3 == 0) sc = sc.unaryExpr([](double v) { return std::round(2.0 * v) / 2.0; });
      const PairList got = select_pairs(make_map(sc), k, kp, PairMode::min_gap);
      CHECK(got == brute_min_gap(sc, k, kp));
      CHECK(std::set<std::pair<std::size_t, std::size_t>>(got.begin(), got.end()).size() == kp);
    }
  }

  TEST_CASE("zero weights give a zero regularizer; no-regularizer methods are rejected") {
    const Mlp m({6, 5, 1}, Activation::softplus(1.0), 3);
    const Vector x = Vector::LinSpaced(6, -1, 1);
    TrainSpec s = spec_for(Method::r2et);
    s.lambda1 = s.lambda2 = 0.0;
    CHECK(regularizer_value(m, x, s) == 0.0);
    CHECK(regularizer_weight_grad(m, x, s).flatten() == std::vector<double>(m.parameter_count(), 0.0));
    for (Method bad : {Method::vanilla, Method::wd, Method::sp, Method::at})
      CHECK_THROWS_AS(regularizer_value(m, x, spec_for(bad)), ConfigError);
  }

  TEST_CASE("full-pair gap sum matches the double loop") {
    Rng rng(10);
    for (int t = 0; t < 20; ++t) {
      const Mlp m({6, 5, 1}, Activation::softplus(1.0), static_cast<std::uint64_t>(t));
      const Vector x = rng.normal_vector(6);
      TrainSpec s = spec_for(Method::r2et_noh, 2, 1);
      const RegularizerTerms terms = regularizer_terms(m, x, s);
      MlpSaliency sal(m, m.predict(x), s.explain, MlpSaliency::Mode::finite_difference, s.kappa);
      const Vector sc = sal.scores(x);
      const std::vector<std::size_t> order = ranking(sc);
      double brute = 0.0;
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 2; b < 6; ++b) brute += sc[static_cast<Eigen::Index>(order[a])] - sc[static_cast<Eigen::Index>(order[b])];
      CHECK(terms.gap_sum == doctest::Approx(brute).epsilon(1e-12));
      CHECK(terms.value == doctest::Approx(-brute).epsilon(1e-12));
    }
  }

  TEST_CASE("Hessian terms match their definitions") {
    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
      const Mlp m({5, 4, 1}, Activation::softplus(1.0), static_cast<std::uint64_t>(20 + t));
      const Vector x = rng.normal_vector(5);
      const std::size_t c = m.predict(x);
      const Matrix h = m.hessian_input(x, c).hessian;
      CHECK(regularizer_terms(m, x, spec_for(Method::exact_h)).hessian == doctest::Approx(h.norm()).epsilon(1e-10));
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
      CHECK(regularizer_terms(m, x, spec_for(Method::ssr)).hessian ==
            doctest::Approx(eig.eigenvalues().cwiseAbs().maxCoeff()).epsilon(1e-10));
      // Est-H: finite difference of the gradient along its normalized sign pattern.
      const Vector g = m.grad_input(x, c);
      const Vector v = g.unaryExpr([](double a) { return a > 0 ? 1.0 : -1.0; }).normalized();
      const Vector d = (m.grad_input(x + 1e-4 * v, c) - g) / 1e-4;
      CHECK(regularizer_terms(m, x, spec_for(Method::est_h)).hessian == doctest::Approx(d.norm()).epsilon(1e-9));
      CHECK(std::abs(d.norm() - (h * v).norm()) < 1e-2 * (h * v).norm() + 1e-8);
    }
  }

  TEST_CASE("regularizer weight gradient matches the double-FD oracle") {
    Rng rng(12);
    std::vector<TrainSpec> specs;
    for (Method m : {Method::r2et, Method::r2et_noh, Method::r2et_mm, Method::r2et_mm_noh, Method::est_h,
                     Method::exact_h, Method::ssr})
      specs.push_back(spec_for(m, 2, 2));
    TrainSpec expo = spec_for(Method::r2et_noh, 2, 2);
    expo.gap_form = GapForm::exponential;
    specs.push_back(expo);
    for (const TrainSpec& s : specs) {
      CAPTURE(to_string(s.method));
      for (int t = 0; t < 4; ++t) {
        const Mlp m({4, 3, 1}, Activation::softplus(1.0), static_cast<std::uint64_t>(40 + t));
        const Vector x = 1.5 * rng.normal_vector(4);
        const auto g = regularizer_weight_grad(m, x, s).flatten();
        const auto fd = oracle::fd_weight_gradient(m, [&](const Mlp& mm) { return regularizer_value(mm, x, s); }, 1e-5);
        CHECK(oracle::max_rel_error(g, fd) < 2e-2);
      }
    }
    // 2-3-1 net, single pair.
    const Mlp tiny({2, 3, 1}, Activation::softplus(1.0), 7);
    const Vector x = vec({0.3, -0.8});
    const TrainSpec s = spec_for(Method::r2et, 1, 1);
    const auto g = regularizer_weight_grad(tiny, x, s).flatten();
    const auto fd = oracle::fd_weight_gradient(tiny, [&](const Mlp& mm) { return regularizer_value(mm, x, s); }, 1e-5);
    CHECK(oracle::max_rel_error(g, fd) < 2e-2);
  }

  TEST_CASE("gap gradient is linear in lambda1") {
    const Mlp m({6, 5, 1}, Activation::softplus(1.0), 5);
    const Vector x = Vector::LinSpaced(6, -1, 0.5);
    TrainSpec a = spec_for(Method::r2et_noh), b = a;
    b.lambda1 = 2.0;
    const auto ga = regularizer_weight_grad(m, x, a).flatten();
    const auto gb = regularizer_weight_grad(m, x, b).flatten();
    for (std::size_t i = 0; i < ga.size(); ++i) CHECK(gb[i] == doctest::Approx(2.0 * ga[i]).epsilon(1e-12));
    CHECK(regularizer_value(m, x, b) == doctest::Approx(2.0 * regularizer_value(m, x, a)).epsilon(1e-12));
  }

  TEST_CASE("fast AT step") {
    Mlp dead({5, 4, 1}, Activation::softplus(1.0), 0);
    for (auto& l : dead.mutable_layers()) l.weight.setZero();
    const Vector x0 = Vector::LinSpaced(5, -1, 1);
    CHECK(fast_at_step(dead, x0, 2, 0.1) == x0);
    CHECK_THROWS_AS(fast_at_step(dead, x0, 2, 0.0), std::invalid_argument);

    Rng rng(13);
    int decreased = 0;
    for (int t = 0; t < 40; ++t) {
      const Mlp m({6, 8, 1}, Activation::softplus(2.0), static_cast<std::uint64_t>(60 + t));
      const Vector x = rng.normal_vector(6);
      const Vector xp = fast_at_step(m, x, 2, 1e-3);
      CHECK((xp - x).norm() <= 1e-3 * (1.0 + 1e-12));
      const SaliencyMap s0 = simple_grad(m, x);
      const Vector c = collapsed_direction(top_k(s0, 2), 6);
      MlpSaliency sal = MlpSaliency::at(m, x, {}, MlpSaliency::Mode::exact);
      if (c.dot(sal.scores(xp)) < c.dot(sal.scores(x))) ++decreased;
    }
    CHECK(decreased == 40);
  }

  TEST_CASE("linearized AT objective: closed form, corners and random search") {
    Rng rng(14);
    for (int t = 0; t < 20; ++t) {
      const Matrix a = Matrix::NullaryExpr(6, 6, [&]() { return rng.normal(); });
      const LinearField f(a, rng.normal_vector(6));
      const Vector x = rng.normal_vector(6);
      const AtEquivalence r = at_equivalence(f, x, 2, 0.1, 2000, static_cast<std::uint64_t>(t));
      CHECK(std::abs(r.nu - r.corner_min) < 1e-8);
      CHECK(r.nu <= r.search_min + 1e-12);
    }
  }

  TEST_CASE("vanilla training separates separable data") {
    const Dataset ds = small_data(4.0, 2);
    TrainSpec s = quick(Method::vanilla, 300);
    s.val_attack_iters = 0;
    const TrainedModel tm = train(s, ds);
    CHECK(tm.val_auc >= 0.95);
    CHECK(tm.threshold_met);
    CHECK(tm.log.size() >= tm.epoch);
    CHECK(tm.log[tm.epoch - 1].val_auc >= tm.auc_threshold);
  }

  TEST_CASE("zero lambdas reproduce the vanilla trajectory bitwise") {
    const Dataset ds = small_data(2.0, 3);
    const TrainedModel v = train(quick(Method::vanilla, 15), ds);
    TrainSpec r = quick(Method::r2et, 15);
    r.lambda1 = r.lambda2 = 0.0;
    const TrainedModel z = train(r, ds);
    CHECK(same_weights(v.model, z.model));
    REQUIRE(v.log.size() == z.log.size());
    for (std::size_t e = 0; e < v.log.size(); ++e) CHECK(v.log[e].train_loss == z.log[e].train_loss);
  }

  TEST_CASE("training is deterministic and independent of the job count") {
    const Dataset ds = small_data(2.0, 4);
    TrainSpec s = quick(Method::r2et, 6);
    const TrainedModel a = train(s, ds);
    const TrainedModel b = train(s, ds);
    TrainOptions par;
    par.jobs = 3;
    const TrainedModel c = train(s, ds, par);
    CHECK(same_weights(a.model, b.model));
    CHECK(same_weights(a.model, c.model));
    s.batch_size = 32;
    CHECK(same_weights(train(s, ds).model, train(s, ds, par).model));
  }

  TEST_CASE("sp uses Softplus everywhere, the others LeakyReLU") {
    const Dataset ds = small_data(2.0, 5);
    const TrainedModel sp = train(quick(Method::sp, 3), ds);
    CHECK(sp.model.activation().kind == ActivationKind::softplus);
    const TrainedModel wd = train(quick(Method::wd, 3), ds);
    CHECK(wd.model.activation().kind == ActivationKind::leaky_relu);
    const TrainedModel at = train(quick(Method::at, 3), ds);
    CHECK(at.model.activation().kind == ActivationKind::leaky_relu);
  }

  TEST_CASE("weight decay shrinks the weights relative to vanilla") {
    const Dataset ds = small_data(2.0, 6);
    TrainSpec v = quick(Method::vanilla, 40), w = quick(Method::wd, 40);
    v.early_stop_patience = w.early_stop_patience = 0;
    v.auc_threshold = w.auc_threshold = 0.0;
    w.weight_decay = 0.5;
    auto norm = [](const Mlp& m) {
      double s = 0;
      for (const auto& l : m.layers()) s += l.weight.squaredNorm();
      return s;
    };
    CHECK(norm(train(w, ds).model) < norm(train(v, ds).model));
  }

  TEST_CASE("retraining starts from the checkpoint and writes its log") {
    const Dataset ds = small_data(3.0, 7);
    const auto dir = std::filesystem::temp_directory_path() / "rankrobust_test_train";
    std::filesystem::create_directories(dir);
    TrainOptions opt;
    opt.checkpoint_path = (dir / "vanilla.json").string();
    opt.log_path = (dir / "vanilla_log.csv").string();
    const TrainedModel v = train(quick(Method::vanilla, 30), ds, opt);
    CHECK(std::filesystem::exists(opt.log_path));
    TrainSpec r = quick(Method::r2et, 10);
    r.retrain_from = opt.checkpoint_path;
    r.lr = 1e-12;
    r.auc_threshold = v.val_auc - 0.01;
    const TrainedModel t = train(r, ds);
    CHECK(t.log.size() <= 10);
    CHECK(t.val_auc == doctest::Approx(v.val_auc).epsilon(1e-6));
    r.retrain_from = (dir / "missing.json").string();
    CHECK_THROWS_AS(train(r, ds), MissingArtifact);
  }

  TEST_CASE("divergence and bad inputs raise typed errors") {
    const Dataset ds = small_data(2.0, 8);
    TrainSpec s = quick(Method::vanilla, 5);
    s.lr = 1e308;
    CHECK_THROWS_AS(train(s, ds), NumericalError);
    TrainSpec big = quick(Method::vanilla, 1);
    big.k = 10;
    CHECK_THROWS_AS(train(big, ds), ConfigError);
    Dataset nosplit = ds;
    nosplit.split = {};
    CHECK_THROWS_AS(train(quick(Method::vanilla, 1), nosplit), ConfigError);
  }
}
