#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "penlab/regressogram.hpp"
#include "penlab/rng.hpp"

using namespace penlab;

namespace {

Dataset make_dataset(std::vector<double> x, std::vector<double> y) {
  Dataset d;
  d.x = std::move(x);
  d.y = std::move(y);
  d.order.resize(d.x.size());
  std::iota(d.order.begin(), d.order.end(), 0);
  std::sort(d.order.begin(), d.order.end(), [&](int a, int b) { return d.x[a] < d.x[b]; });
  return d;
}

}  // namespace

TEST_CASE("fit computes per-bin means and counts") {
  const Dataset d = make_dataset({0.1, 0.3, 0.7}, {1.0, 3.0, 5.0});
  const FittedHistogram f = fit(d, build_partition(ModelIndex::two_regime(1, 1)));
  REQUIRE(f.count == std::vector<int>{2, 1});
  CHECK(f.mean[0] == doctest::Approx(2.0));
  CHECK(f.mean[1] == doctest::Approx(5.0));
  CHECK(f.fallback == std::vector<char>{0, 0});

  const FittedHistogram one = fit(d, build_partition(ModelIndex::constant()));
  CHECK(one.mean[0] == doctest::Approx(3.0));  // sample mean
}

TEST_CASE("empty bins follow the chosen policy") {
  // no point lands in [0.25, 0.5)
  const Dataset d = make_dataset({0.1, 0.2, 0.6, 0.9}, {1.0, 2.0, 3.0, 6.0});
  const Partition p = build_partition(ModelIndex::two_regime(2, 2));
  const FittedHistogram f = fit(d, p, EmptyBinPolicy::GlobalMean);
  CHECK(f.mean[1] == doctest::Approx(3.0));  // global mean of y
  CHECK(f.fallback == std::vector<char>{0, 1, 0, 0});
  CHECK_THROWS(fit(d, p, EmptyBinPolicy::Strict));
}

TEST_CASE("empirical risk matches the sufficient statistics") {
  RngStream g(3, 0, 0);
  Dataset d;
  for (int i = 0; i < 50; ++i) {
    d.x.push_back(g.uniform());
    d.y.push_back(g.normal());
  }
  const Partition p = build_partition(ModelIndex::two_regime(3, 4));
  const FittedHistogram f = fit(d, p);
  CHECK(empirical_risk(f, d) == doctest::Approx(training_risk(f)).epsilon(1e-12));
}

TEST_CASE("one-bin risk is the biased sample variance") {
  const Dataset d = make_dataset({0.1, 0.4, 0.8, 0.9}, {1.0, 2.0, 3.0, 6.0});
  const FittedHistogram f = fit(d, build_partition(ModelIndex::constant()));
  const double mean = 3.0;
  double var = 0.0;
  for (double y : d.y) var += (y - mean) * (y - mean);
  var /= d.n();
  CHECK(training_risk(f) == doctest::Approx(var).epsilon(1e-14));
}

TEST_CASE("risk vanishes when y is constant per bin") {
  const Dataset d = make_dataset({0.1, 0.2, 0.6, 0.9}, {2.0, 2.0, -1.0, -1.0});
  const FittedHistogram f = fit(d, build_partition(ModelIndex::two_regime(1, 1)));
  CHECK(training_risk(f) == doctest::Approx(0.0));
}

TEST_CASE("noiseless fits respect the within-bin variance bound") {
  // population variance within a bin is at most (width * sup|s'|)^2 / 4
  RegressionScenario sc = custom_scenario("noiseless", regression_shape("linear"),
                                          two_level_noise(0.0, 0.0), 0.5, 300);
  const Dataset d = sample(sc, 17);
  const Partition p = build_partition(ModelIndex::two_regime(5, 5));  // widths 1/10
  const FittedHistogram f = fit(d, p);
  CHECK(training_risk(f) <= 0.1 * 0.1 / 4 + 1e-15);
}

TEST_CASE("excess loss matches closed forms for the uniform design") {
  RegressionScenario sc = custom_scenario("uniform-linear", regression_shape("linear"),
                                          two_level_noise(1.0, 1.0), 0.5, 10);
  const Partition one_bin = build_partition(ModelIndex::constant());
  const BinMoments m = bin_moments(sc, one_bin);

  const std::vector<double> zero = {0.0};
  CHECK(excess_loss_of_values(zero, m) == doctest::Approx(1.0 / 3).epsilon(1e-13));
  const std::vector<double> half = {0.5};
  CHECK(excess_loss_of_values(half, m) == doctest::Approx(1.0 / 12).epsilon(1e-13));
}

TEST_CASE("excess loss vanishes when the fit equals a piecewise-constant s") {
  RegressionScenario sc = custom_scenario(
      "steps",
      PiecewiseFunction({{0.0, 0.5, [](double) { return 2.0; }, [](double) { return 0.0; }},
                         {0.5, 1.0, [](double) { return -1.0; }, [](double) { return 0.0; }}}),
      two_level_noise(0.5, 0.5), 0.5, 10);
  const BinMoments m = bin_moments(sc, build_partition(ModelIndex::two_regime(1, 1)));
  const std::vector<double> values = {2.0, -1.0};
  CHECK(excess_loss_of_values(values, m) == doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
}

TEST_CASE("projection bias has the h^3/12 closed form for linear s") {
  RegressionScenario sc = custom_scenario("uniform-linear", regression_shape("linear"),
                                          two_level_noise(1.0, 0.5), 0.5, 10);
  // regular 4-bin grid, two encodings of the same partition
  CHECK(projection_bias(sc, build_partition(ModelIndex::two_regime(2, 2))) ==
        doctest::Approx(1.0 / 192).epsilon(1e-12));
  CHECK(projection_bias(sc, build_partition(ModelIndex::two_regime(1, 3, 0.25))) ==
        doctest::Approx(1.0 / 192).epsilon(1e-12));

  RegressionScenario flat = custom_scenario(
      "flat", PiecewiseFunction({{0.0, 1.0, [](double) { return 3.0; }, [](double) { return 0.0; }}}),
      two_level_noise(1.0, 1.0), 0.5, 10);
  for (int d : {1, 3, 9}) {
    CHECK(projection_bias(flat, build_partition(ModelIndex::two_regime(d, d))) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-13));
  }
}

TEST_CASE("the projection minimizes the excess loss over bin values") {
  const RegressionScenario sc = make_scenario("XS1-05");
  const Partition p = build_partition(ModelIndex::two_regime(3, 5));
  const BinMoments m = bin_moments(sc, p);
  const double bias = projection_bias(m);

  RngStream g(23, 0, 0);
  std::vector<double> values(p.bins());
  for (int it = 0; it < 200; ++it) {
    for (double& v : values) v = 2.0 * g.uniform() - 0.5;
    CHECK(excess_loss_of_values(values, m) >= bias - 1e-12);
  }
  // equality at the projection itself
  for (int b = 0; b < p.bins(); ++b) values[b] = m.bin[b].m1 / m.bin[b].m0;
  CHECK(excess_loss_of_values(values, m) == doctest::Approx(bias).epsilon(1e-12));
}

TEST_CASE("excess loss splits into bias plus estimation error") {
  const RegressionScenario sc = make_scenario("X1-005");
  const Partition p = build_partition(ModelIndex::two_regime(4, 4));
  const BinMoments m = bin_moments(sc, p);
  const Dataset d = sample(sc, 55);
  const FittedHistogram f = fit(d, p);

  double quad = 0.0;  // sum_bins m0 * (fitted - projection)^2
  for (int b = 0; b < p.bins(); ++b) {
    const double proj = m.bin[b].m1 / m.bin[b].m0;
    quad += m.bin[b].m0 * (f.mean[b] - proj) * (f.mean[b] - proj);
  }
  const double excess = excess_loss_of_values(f.mean, m);
  CHECK(excess - projection_bias(m) == doctest::Approx(quad).epsilon(1e-10));
  CHECK(excess >= projection_bias(m));
  CHECK(excess_loss(f, sc) == doctest::Approx(excess).epsilon(1e-13));
}

TEST_CASE("fitting is invariant under permutations of the data") {
  const RegressionScenario sc = make_scenario("X1-005");
  Dataset d = sample(sc, 7);
  const Partition p = build_partition(ModelIndex::two_regime(6, 2));
  const FittedHistogram f1 = fit(d, p);

  RngStream g(70, 0, 0);
  std::vector<int> perm(d.n());
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(perm, g);
  Dataset shuffled;
  for (int i : perm) {
    shuffled.x.push_back(d.x[i]);
    shuffled.y.push_back(d.y[i]);
  }
  const FittedHistogram f2 = fit(shuffled, p);
  for (int b = 0; b < p.bins(); ++b) {
    CHECK(f1.count[b] == f2.count[b]);
    CHECK(f1.mean[b] == doctest::Approx(f2.mean[b]).epsilon(1e-13));
  }
}

TEST_CASE("risk report bundles the three quantities") {
  const RegressionScenario sc = make_scenario("X1-005");
  const Dataset d = sample(sc, 3);
  const Partition p = build_partition(ModelIndex::two_regime(2, 2));
  const FittedHistogram f = fit(d, p);
  const RiskReport r = risk_report(f, d, sc);
  CHECK(r.emp_risk == doctest::Approx(training_risk(f)).epsilon(1e-12));
  CHECK(r.excess_loss == doctest::Approx(excess_loss(f, sc)).epsilon(1e-12));
  CHECK(r.bias == doctest::Approx(projection_bias(sc, p)).epsilon(1e-12));
  CHECK(r.excess_loss >= r.bias);
  CHECK(r.bias >= 0.0);

  // CSV serialization carries the model coordinates and all three values
  const std::string row = risk_report_csv_row(ModelIndex::two_regime(2, 2), r);
  CHECK(row.rfind("(2,2),2,2,", 0) == 0);
  const std::string const_row =
      risk_report_csv_row(ModelIndex::constant(), RiskReport{0.5, 0.25, 0.125});
  CHECK(const_row == "const,0,0,0.5,0.25,0.125");
}
