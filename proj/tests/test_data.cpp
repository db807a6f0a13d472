#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "rankrobust/data/dataset.hpp"
#include "rankrobust/eval/metrics.hpp"

using namespace rankrobust;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "rankrobust_test_data";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

void check_cover(const SplitIndices& s, std::size_t n) {
  std::vector<std::size_t> all;
  for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(all.end(), part->begin(), part->end());
  std::sort(all.begin(), all.end());
  REQUIRE(all.size() == n);
  for (std::size_t i = 0; i < n; ++i) CHECK(all[i] == i);
}

// Plain logistic regression by gradient descent, scored by training AUC.
double logistic_probe_auc(const Dataset& ds) {
  const auto n = static_cast<Eigen::Index>(ds.dim());
  Vector w = Vector::Zero(n);
  double b = 0.0;
  for (int it = 0; it < 300; ++it) {
    Vector gw = Vector::Zero(n);
    double gb = 0.0;
    for (std::size_t r = 0; r < ds.size(); ++r) {
      const Vector x = ds.sample(r);
      const double p = 1.0 / (1.0 + std::exp(-(w.dot(x) + b)));
      const double e = p - static_cast<double>(ds.labels[r]);
      gw += e * x;
      gb += e;
    }
    w -= 0.5 * gw / static_cast<double>(ds.size());
    b -= 0.5 * gb / static_cast<double>(ds.size());
  }
  std::vector<double> s(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) s[r] = w.dot(ds.sample(r)) + b;
  return auc_scores(s, ds.labels);
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("CSV fixture parses to the exact matrix") {
    const fs::path p = scratch("fixture.csv");
    write_text(p, "a,label,b\n1.5,0,-2\n0,1,3.25\n-0.125,1,1e-3\n");
    const Dataset ds = load_csv(p.string());
    REQUIRE(ds.size() == 3);
    REQUIRE(ds.dim() == 2);
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.labels == std::vector<std::size_t>{0, 1, 1});
    Matrix expect(3, 2);
    expect << 1.5, -2, 0, 3.25, -0.125, 1e-3;
    CHECK(ds.features == expect);
    CHECK(ds.provenance == p.string());
  }

  TEST_CASE("CSV errors") {
    CHECK_THROWS_AS(load_csv(scratch("does_not_exist.csv").string()), MissingArtifact);
    write_text(scratch("empty.csv"), "");
    CHECK_THROWS_AS(load_csv(scratch("empty.csv").string()), ConfigError);
    write_text(scratch("nolabel.csv"), "a,b\n1,2\n");
    CHECK_THROWS_AS(load_csv(scratch("nolabel.csv").string()), ConfigError);
    write_text(scratch("text.csv"), "a,label\nred,1\n");
    CHECK_THROWS_AS(load_csv(scratch("text.csv").string()), ConfigError);
    write_text(scratch("nan.csv"), "a,label\nnan,1\n");
    CHECK_THROWS_AS(load_csv(scratch("nan.csv").string()), ConfigError);
    write_text(scratch("badlabel.csv"), "a,label\n1,2\n");
    CHECK_THROWS_AS(load_csv(scratch("badlabel.csv").string()), ConfigError);
    write_text(scratch("other.csv"), "y,a\n1,0.5\n0,0.25\n");
    CHECK(load_csv(scratch("other.csv").string(), "y").labels == std::vector<std::size_t>{1, 0});
  }

  TEST_CASE("CSV round trip is bit exact") {
    Dataset ds = synth_gaussian(5, 40, 2.0, 11);
    ds.features(0, 0) = 1.0 / 3.0;
    ds.features(1, 1) = -1e-300;
    ds.features(2, 2) = 123456789.123456789;
    const fs::path p = scratch("roundtrip.csv");
    write_csv(ds, p.string());
    const Dataset back = load_csv(p.string());
    CHECK(back.labels == ds.labels);
    CHECK(back.feature_names == ds.feature_names);
    CHECK(back.features.rows() == ds.features.rows());
    bool same = true;
    for (Eigen::Index r = 0; r < ds.features.rows(); ++r)
      for (Eigen::Index c = 0; c < ds.features.cols(); ++c)
        same = same && std::memcmp(&back.features(r, c), &ds.features(r, c), sizeof(double)) == 0;
    CHECK(same);
  }

  TEST_CASE("split sizes, determinism and the disjoint cover") {
    const Dataset base = synth_gaussian(3, 100, 1.0, 1);
    const Dataset a = split(base, {0.7, 0.15, 0.15}, 5);
    CHECK(a.split.train.size() == 70);
    CHECK(a.split.val.size() == 15);
    CHECK(a.split.test.size() == 15);
    check_cover(a.split, 100);
    const Dataset b = split(base, {0.7, 0.15, 0.15}, 5);
    CHECK(a.split.train == b.split.train);
    CHECK(a.split.val == b.split.val);
    CHECK(a.split.test == b.split.test);
    CHECK(split(base, {0.7, 0.15, 0.15}, 6).split.train != a.split.train);
    CHECK_THROWS_AS(split(base, {0.7, 0.2, 0.2}, 5), ConfigError);
    CHECK_THROWS_AS(split(base, {1.2, -0.1, -0.1}, 5), ConfigError);

    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
      const std::size_t n = 3 + rng.below(300);
      const double r0 = 0.2 + 0.6 * rng.uniform(), r1 = (1.0 - r0) * rng.uniform();
      const std::array<double, 3> ratios{r0, r1, 1.0 - r0 - r1};
      const Dataset d = split(synth_gaussian(2, n, 1.0, static_cast<std::uint64_t>(t)), ratios, static_cast<std::uint64_t>(t));
      check_cover(d.split, n);
      const std::size_t sizes[3] = {d.split.train.size(), d.split.val.size(), d.split.test.size()};
      for (int q = 0; q < 3; ++q)
        CHECK(std::abs(static_cast<double>(sizes[q]) - ratios[static_cast<std::size_t>(q)] * static_cast<double>(n)) <= 1.0 + 1e-9);
    }
  }

  TEST_CASE("standardization fits on train only") {
    Dataset ds = split(synth_gaussian(4, 200, 3.0, 8), {0.7, 0.15, 0.15}, 8);
    ds.features.col(3).setConstant(2.5);
    const Dataset s = standardize(ds);
    REQUIRE(s.standardization.has_value());
    const Matrix tr = s.rows(s.split.train);
    for (Eigen::Index c = 0; c < 3; ++c) {
      const double mean = tr.col(c).mean();
      const double var = (tr.col(c).array() - mean).square().sum() / static_cast<double>(tr.rows());
      CHECK(std::abs(mean) < 1e-12);
      CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(s.standardization->scale[3] == 1.0);
    CHECK(s.features.col(3).cwiseAbs().maxCoeff() == 0.0);
    // Test rows follow the train statistics.
    const std::size_t r = s.split.test[0];
    CHECK(s.features(static_cast<Eigen::Index>(r), 0) ==
          doctest::Approx((ds.features(static_cast<Eigen::Index>(r), 0) - s.standardization->mean[0]) /
                          s.standardization->scale[0]));
  }

  TEST_CASE("sidecar restores split and standardization") {
    const Dataset raw = split(synth_gaussian(6, 120, 2.0, 4), {0.7, 0.15, 0.15}, 4);
    const Dataset st = standardize(raw);
    const fs::path p = scratch("sidecar.json");
    save_sidecar(st, p.string());
    Dataset again = raw;
    again.split = {};
    load_sidecar(again, p.string());
    CHECK(again.split.train == st.split.train);
    CHECK(again.split.test == st.split.test);
    CHECK((again.features - st.features).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(again.signal_features == st.signal_features);
    CHECK_THROWS_AS(load_sidecar(again, scratch("missing_sidecar.json").string()), MissingArtifact);
  }

  TEST_CASE("synthetic generator: balance, planted subset and provenance") {
    SynthOptions opt;
    opt.signal_features = 3;
    const Dataset ds = synth_gaussian(10, 4000, 2.0, 21, opt);
    ds.validate();
    CHECK(std::count(ds.labels.begin(), ds.labels.end(), 1u) == 2000);
    REQUIRE(ds.signal_features.size() == 3);
    for (std::size_t s : ds.signal_features) CHECK(s < 10);
    CHECK(ds.provenance.find("seed=21") != std::string::npos);
    CHECK(ds.provenance.find("signal=3") != std::string::npos);

    // Class-mean difference: norm `separation` on the planted subset, zero elsewhere.
    Vector m1 = Vector::Zero(10), m0 = Vector::Zero(10);
    for (std::size_t r = 0; r < ds.size(); ++r) (ds.labels[r] ? m1 : m0) += ds.sample(r);
    const Vector d = m1 / 2000.0 - m0 / 2000.0;
    const double se = std::sqrt(1.0 / 2000.0 + 1.0 / 2000.0);
    double on = 0.0;
    for (Eigen::Index c = 0; c < 10; ++c) {
      const bool planted = std::count(ds.signal_features.begin(), ds.signal_features.end(), static_cast<std::size_t>(c)) > 0;
      if (planted) on += d[c] * d[c];
      else CHECK(std::abs(d[c]) < 4.0 * se);
    }
    CHECK(std::abs(std::sqrt(on) - 2.0) < 3.0 * se * std::sqrt(3.0));

    const Dataset again = synth_gaussian(10, 4000, 2.0, 21, opt);
    CHECK(again.features == ds.features);
    CHECK_THROWS_AS(synth_gaussian(1, 10, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(synth_gaussian(4, 10, -1.0, 0), ConfigError);
  }

  TEST_CASE("separation controls linear separability") {
    const double wide = logistic_probe_auc(synth_gaussian(28, 1000, 6.0, 3));
    CHECK(wide >= 0.99);
    std::vector<double> s;
    const Dataset none = synth_gaussian(28, 4000, 0.0, 3);
    Vector w = Vector::LinSpaced(28, -1, 1);
    for (std::size_t r = 0; r < none.size(); ++r) s.push_back(w.dot(none.sample(r)));
    CHECK(std::abs(auc_scores(s, none.labels) - 0.5) < 0.03);
  }

  TEST_CASE("validation rejects broken datasets") {
    Dataset ds = split(synth_gaussian(3, 30, 1.0, 0), {0.7, 0.15, 0.15}, 0);
    ds.validate();
    Dataset overlap = ds;
    overlap.split.val.push_back(overlap.split.train[0]);
    CHECK_THROWS_AS(overlap.validate(), ConfigError);
    Dataset bad_label = ds;
    bad_label.labels[0] = 3;
    CHECK_THROWS_AS(bad_label.validate(), ConfigError);
    Dataset nan = ds;
    nan.features(0, 0) = std::nan("");
    CHECK_THROWS_AS(nan.validate(), ConfigError);
  }
}
