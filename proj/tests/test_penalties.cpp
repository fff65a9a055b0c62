#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "penlab/penalties.hpp"
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

Dataset random_dataset(int n, RngStream& g) {
  Dataset d;
  d.x.resize(n);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) {
    d.x[i] = g.uniform();
    d.y[i] = g.normal() + 2.0 * d.x[i];
  }
  d.order.resize(n);
  std::iota(d.order.begin(), d.order.end(), 0);
  std::sort(d.order.begin(), d.order.end(), [&](int a, int b) { return d.x[a] < d.x[b]; });
  return d;
}

// direct evaluation of the fold penalty from refitted histograms
double naive_vfold(const Dataset& data, const Partition& part, const FoldAssignment& folds) {
  const int n = data.n();
  double pen = 0.0;
  for (int j = 0; j < folds.V; ++j) {
    Dataset train;
    for (int i = 0; i < n; ++i) {
      if (folds.fold_of[i] != j) {
        train.x.push_back(data.x[i]);
        train.y.push_back(data.y[i]);
      }
    }
    const FittedHistogram f = fit(train, part, EmptyBinPolicy::GlobalMean);
    pen += empirical_risk(f, data) - empirical_risk(f, train);
  }
  return pen * (folds.V - 1.0) / folds.V;
}

}  // namespace

TEST_CASE("occupancy correction matches enumeration for small n") {
  for (int n = 1; n <= 12; ++n) {
    for (int pi = 1; pi <= 9; ++pi) {
      const double p = pi / 10.0;
      // brute force over all binomial outcomes
      double target = -1.0;
      for (int k = 1; k <= n; ++k) {
        double binom = 1.0;
        for (int i = 0; i < k; ++i) binom *= double(n - i) / (k - i);
        target += binom * std::pow(p, k) * std::pow(1 - p, n - k) * n * p / k;
      }
      CHECK(occupancy_correction(n, p) == doctest::Approx(target).epsilon(1e-12));
    }
  }
}

TEST_CASE("occupancy correction closed cases") {
  CHECK(occupancy_correction(5, 1.0) == 0.0);       // Z = n almost surely
  CHECK(occupancy_correction(123456, 1.0) == 0.0);
  CHECK(occupancy_correction(2, 0.5) == doctest::Approx(-0.375).epsilon(1e-14));
  CHECK_THROWS(occupancy_correction(10, 0.0));
  CHECK_THROWS(occupancy_correction(0, 0.5));

  // large n*p keeps the correction small, and it always exceeds -1
  CHECK(std::abs(occupancy_correction(1000000, 0.01)) <= 0.2);  // n*p = 1e4
  for (int n : {1, 3, 10, 500}) {
    for (double p : {0.01, 0.2, 0.9}) {
      CHECK(occupancy_correction(n, p) > -1.0);
    }
  }
}

TEST_CASE("expected ideal penalty specializes to the homoscedastic formula") {
  // constant noise, constant s, equal-mass bins: (2 + corr) * sigma^2 * D / n
  RegressionScenario sc = custom_scenario(
      "flat", PiecewiseFunction({{0.0, 1.0, [](double) { return 1.5; }, [](double) { return 0.0; }}}),
      two_level_noise(0.7, 0.7), 0.5, 100);
  for (int d : {1, 2, 5}) {
    const Partition p = build_partition(ModelIndex::two_regime(d, d));
    const double corr = occupancy_correction(100, 1.0 / (2 * d));
    const double expect = (2.0 + corr) * 0.49 * 2 * d / 100.0;
    CHECK(expected_ideal_penalty(sc, p, 100) == doctest::Approx(expect).epsilon(1e-12));
  }

  // zero noise, constant s: no penalty at all
  RegressionScenario quiet = custom_scenario(
      "quiet", PiecewiseFunction({{0.0, 1.0, [](double) { return 1.5; }, [](double) { return 0.0; }}}),
      two_level_noise(0.0, 0.0), 0.5, 100);
  CHECK(expected_ideal_penalty(quiet, build_partition(ModelIndex::two_regime(3, 3)), 100) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("expected ideal penalty approaches twice the variance sum") {
  // with every n*p_bin large the correction disappears
  const RegressionScenario sc = make_scenario("X1-005");
  const Partition p = build_partition(ModelIndex::two_regime(4, 4));
  const BinMoments m = bin_moments(sc, p);
  double var_sum = 0.0;
  for (const IntervalMoments& im : m.bin) {
    var_sum += im.v2 / im.m0 + (im.m2 - im.m1 * im.m1 / im.m0) / im.m0;
  }
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {80, 800, 80000}) {  // n*p_bin in {10, 100, 10000}
    const double ratio = expected_ideal_penalty(m, n) / (2.0 * var_sum / n);
    CHECK(ratio > 1.0);
    CHECK(ratio - 1.0 < prev);
    prev = ratio - 1.0;
  }
  CHECK(prev < 2e-4);
}

TEST_CASE("first-difference variance estimator on tiny inputs") {
  CHECK(estimate_variance_diff(make_dataset({0.2, 0.8}, {0.0, 2.0})) == doctest::Approx(2.0));
  CHECK(estimate_variance_diff(make_dataset({0.8, 0.2}, {2.0, 0.0})) == doctest::Approx(2.0));
  const Dataset constant = make_dataset({0.1, 0.5, 0.7, 0.9}, {3.0, 3.0, 3.0, 3.0});
  CHECK(estimate_variance_diff(constant) == doctest::Approx(0.0));
  CHECK_THROWS(estimate_variance_diff(make_dataset({0.5}, {1.0})));
  // odd n drops the last sorted point
  const Dataset odd = make_dataset({0.1, 0.2, 0.9}, {1.0, 5.0, 100.0});
  CHECK(estimate_variance_diff(odd) == doctest::Approx(8.0));  // (5-1)^2 / 2
}

TEST_CASE("variance estimator is consistent under smooth signals") {
  RegressionScenario sc = custom_scenario("smooth", regression_shape("half-sine"),
                                          two_level_noise(0.8, 0.8), 0.5, 10000);
  double sum = 0.0, sumsq = 0.0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    RngStream g(1000, r, 0);
    const double v = estimate_variance_diff(sample(sc, g));
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sumsq / reps - mean * mean) / (reps - 1));
  CHECK(std::abs(mean - 0.64) <= 5 * se);
}

TEST_CASE("fold assignments are stratified over the sorted order") {
  const RegressionScenario sc = make_scenario("X1-005");
  RngStream g(2, 0, 0);
  const Dataset d = sample(sc, 100);

  for (int V : {2, 5, 10}) {
    RngStream gf(2, 1, V);
    const FoldAssignment a = make_vfold_assignment(d, V, gf);
    // each consecutive X-sorted block of V indices hits every fold once
    for (int block = 0; block + V <= d.n(); block += V) {
      std::set<int> seen;
      for (int i = 0; i < V; ++i) seen.insert(a.fold_of[d.order[block + i]]);
      CHECK(seen.size() == static_cast<std::size_t>(V));
    }
    for (int j = 0; j < V; ++j) {
      CHECK(std::abs(a.fold_size[j] - double(d.n()) / V) < 1.0);
    }
  }

  // remainder block lands on distinct folds
  Dataset odd = d;
  odd.x.resize(97);
  odd.y.resize(97);
  odd.order.clear();
  odd.order.resize(97);
  std::iota(odd.order.begin(), odd.order.end(), 0);
  std::sort(odd.order.begin(), odd.order.end(),
            [&](int a2, int b2) { return odd.x[a2] < odd.x[b2]; });
  RngStream gr(2, 2, 0);
  const FoldAssignment rem = make_vfold_assignment(odd, 5, gr);
  std::set<int> tail;
  for (int i = 95; i < 97; ++i) tail.insert(rem.fold_of[odd.order[i]]);
  CHECK(tail.size() == 2);
  for (int j = 0; j < 5; ++j) {
    CHECK(std::abs(rem.fold_size[j] - 97.0 / 5) < 1.0);
  }

  CHECK_THROWS(make_vfold_assignment(d, 1, g));
  CHECK_THROWS(make_vfold_assignment(d, d.n() + 1, g));
}

TEST_CASE("V = n yields singleton folds") {
  RngStream gd(3, 0, 0);
  const Dataset d = random_dataset(12, gd);
  RngStream g(3, 1, 0);
  const FoldAssignment a = make_vfold_assignment(d, 12, g);
  std::set<int> folds(a.fold_of.begin(), a.fold_of.end());
  CHECK(folds.size() == 12);  // a permutation
  for (int s : a.fold_size) CHECK(s == 1);
}

TEST_CASE("holdout splits take one index per sorted pair") {
  const RegressionScenario sc = make_scenario("X1-005");
  const Dataset d = sample(sc, 10);
  RngStream g(4, 0, 0);
  const HoldoutSplit s = make_holdout_split(d, g);
  CHECK(s.train_size == d.n() / 2);
  for (int k = 0; k + 1 < d.n(); k += 2) {
    CHECK(s.in_train[d.order[k]] + s.in_train[d.order[k + 1]] == 1);
  }

  const Dataset two = make_dataset({0.3, 0.6}, {1.0, 2.0});
  int first = 0, second = 0;
  for (int r = 0; r < 2000; ++r) {
    RngStream gr(5, r, 0);
    const HoldoutSplit sp = make_holdout_split(two, gr);
    CHECK(sp.train_size == 1);
    first += sp.in_train[0];
    second += sp.in_train[1];
  }
  CHECK(first + second == 2000);
  CHECK(std::abs(first - 1000) < 5 * std::sqrt(2000 * 0.25));
}

TEST_CASE("fold penalty matches a hand evaluation") {
  const Dataset d = make_dataset({0.1, 0.3, 0.6, 0.9}, {1.0, 3.0, 2.0, 6.0});
  FoldAssignment folds;
  folds.V = 2;
  folds.fold_of = {0, 1, 0, 1};
  folds.fold_size = {2, 2};
  const Partition one = build_partition(ModelIndex::constant());
  // fold 0 out: train means 4.5; fold 1 out: train mean 1.5; both P_n gamma = 23/4
  CHECK(pen_vfold(d, one, folds) == doctest::Approx(4.5).epsilon(1e-14));
  CHECK(pen_vfold(d, one, folds) == doctest::Approx(naive_vfold(d, one, folds)).epsilon(1e-12));
}

TEST_CASE("fold penalty is invariant under fold relabeling") {
  RngStream g(6, 0, 0);
  const Dataset d = random_dataset(40, g);
  const Partition p = build_partition(ModelIndex::two_regime(2, 3));
  RngStream gf(6, 1, 0);
  FoldAssignment a = make_vfold_assignment(d, 5, gf);
  const double base = pen_vfold(d, p, a);

  FoldAssignment relabeled = a;
  for (int& f : relabeled.fold_of) f = (f + 2) % 5;
  std::rotate(relabeled.fold_size.begin(), relabeled.fold_size.begin() + 3,
              relabeled.fold_size.end());
  CHECK(pen_vfold(d, p, relabeled) == doctest::Approx(base).epsilon(1e-13));
}

TEST_CASE("fold penalty vanishes on constant responses") {
  const Dataset d = make_dataset({0.05, 0.35, 0.55, 0.75}, {2.0, 2.0, 2.0, 2.0});
  FoldAssignment folds;
  folds.V = 2;
  folds.fold_of = {0, 1, 1, 0};
  folds.fold_size = {2, 2};
  CHECK(pen_vfold(d, build_partition(ModelIndex::constant()), folds) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  const HoldoutSplit split{{1, 0, 1, 0}, 2};
  CHECK(pen_holdout(d, build_partition(ModelIndex::constant()), split) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("fold penalty agrees with naive refits") {
  RngStream g(7, 0, 0);
  for (int it = 0; it < 25; ++it) {
    const int n = 10 + static_cast<int>(g.below(30));
    const Dataset d = random_dataset(n, g);
    const int V = 2 + static_cast<int>(g.below(4));
    RngStream gf(7, 100 + it, 0);
    const FoldAssignment folds = make_vfold_assignment(d, V, gf);
    const Partition p = build_partition(
        ModelIndex::two_regime(1 + static_cast<int>(g.below(4)), 1 + static_cast<int>(g.below(4))));
    CHECK(pen_vfold(d, p, folds) == doctest::Approx(naive_vfold(d, p, folds)).epsilon(1e-10));
  }
}

TEST_CASE("holdout penalty matches a hand evaluation") {
  const Dataset d = make_dataset({0.1, 0.3, 0.6, 0.9}, {1.0, 3.0, 2.0, 6.0});
  const HoldoutSplit split{{1, 0, 1, 0}, 2};  // train on (0.1,1) and (0.6,2)
  const Partition p = build_partition(ModelIndex::two_regime(1, 1));
  // trained means (1, 2); P_n gamma = 5, train risk = 0, prefactor 1
  CHECK(pen_holdout(d, p, split) == doctest::Approx(5.0).epsilon(1e-14));

  // even split keeps the prefactor at exactly one: compare the two factors
  RngStream g(8, 0, 0);
  const Dataset big = random_dataset(60, g);
  RngStream gs(8, 1, 0);
  const HoldoutSplit s2 = make_holdout_split(big, gs);
  CHECK(s2.train_size == 30);
}

TEST_CASE("leave-one-out penalty equals naive refits") {
  RngStream g(9, 0, 0);
  for (int it = 0; it < 100; ++it) {
    const int n = 5 + static_cast<int>(g.below(36));
    const Dataset d = random_dataset(n, g);
    const Partition p = build_partition(
        ModelIndex::two_regime(1 + static_cast<int>(g.below(3)), 1 + static_cast<int>(g.below(3))));
    const double fast = pen_loo(d, p);
    const double slow = naive_vfold(d, p, loo_assignment(n));
    CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
  }
}

TEST_CASE("fold penalties track the expected ideal penalty") {
  // Monte Carlo mean over replications against the exact expectation, with
  // the data-independent fold partition of the fold-penalty theory
  const RegressionScenario sc = make_scenario("X1-005");
  const ModelIndex model = ModelIndex::two_regime(4, 4);
  const Partition part = build_partition(model);
  const double target = expected_ideal_penalty(sc, part, sc.n);

  const int reps = 2000;
  for (int V : {2, 5, 10}) {
    const FoldAssignment folds = fixed_fold_assignment(sc.n, V);
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < reps; ++r) {
      RngStream gs(77, r, 0);
      const Dataset d = sample(sc, gs);
      const double pen = pen_vfold(d, part, folds);
      sum += pen;
      sumsq += pen * pen;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sumsq / reps - mean * mean) / (reps - 1));
    INFO("V = " << V << " mean " << mean << " target " << target << " se " << se);
    CHECK(std::abs(mean - target) <= 3 * se);
  }

  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < reps; ++r) {
    RngStream gs(77, r, 0);
    const Dataset d = sample(sc, gs);
    const double pen = pen_loo(d, part);
    sum += pen;
    sumsq += pen * pen;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sumsq / reps - mean * mean) / (reps - 1));
  INFO("loo mean " << mean << " target " << target << " se " << se);
  CHECK(std::abs(mean - target) <= 3 * se);
}

TEST_CASE("penalty_value dispatches every kind") {
  const RegressionScenario sc = make_scenario("X1-005");
  const Dataset d = sample(sc, 12);
  const ModelIndex model = ModelIndex::two_regime(5, 5);

  PenaltyContext ctx;
  ctx.data = &d;
  ctx.scenario = &sc;

  // K * D / n
  CHECK(penalty_value({PenaltyTag::Linear, 1.0, 0.5}, model, ctx) ==
        doctest::Approx(0.5 * 10 / 200.0).epsilon(1e-14));
  // 2 * sup(sigma)^2 * D / n with sup = 1
  CHECK(penalty_value({PenaltyTag::MallowsMax}, model, ctx) ==
        doctest::Approx(0.1).epsilon(1e-14));
  CHECK(penalty_value({PenaltyTag::MallowsEst}, model, ctx) ==
        doctest::Approx(2.0 * estimate_variance_diff(d) * 10 / 200.0).epsilon(1e-12));
  CHECK(penalty_value({PenaltyTag::ExpectedIdeal}, model, ctx) ==
        doctest::Approx(expected_ideal_penalty(sc, build_partition(model), 200)).epsilon(1e-12));

  RngStream g(13, 0, 0);
  const FoldAssignment folds = make_vfold_assignment(d, 5, g);
  ctx.folds = &folds;
  CHECK(penalty_value({PenaltyTag::VFold, 1.0, 0.0, 5}, model, ctx) ==
        doctest::Approx(pen_vfold(d, build_partition(model), folds)).epsilon(1e-13));

  RngStream gs(13, 1, 0);
  const HoldoutSplit split = make_holdout_split(d, gs);
  ctx.split = &split;
  CHECK(penalty_value({PenaltyTag::HoldOutPen}, model, ctx) ==
        doctest::Approx(pen_holdout(d, build_partition(model), split)).epsilon(1e-13));
  CHECK(penalty_value({PenaltyTag::LeaveOneOut}, model, ctx) ==
        doctest::Approx(pen_loo(d, build_partition(model))).epsilon(1e-13));

  // overpenalization scales multiplicatively, exactly
  for (PenaltyTag tag : {PenaltyTag::Linear, PenaltyTag::MallowsEst, PenaltyTag::VFold,
                         PenaltyTag::LeaveOneOut}) {
    PenaltyKind base{tag, 1.0, 0.7, 5};
    PenaltyKind doubled{tag, 2.0, 0.7, 5};
    CHECK(penalty_value(doubled, model, ctx) == 2.0 * penalty_value(base, model, ctx));
  }

  // missing context is an error
  PenaltyContext bare;
  bare.data = &d;
  CHECK_THROWS(penalty_value({PenaltyTag::MallowsMax}, model, bare));
  CHECK_THROWS(penalty_value({PenaltyTag::ExpectedIdeal}, model, bare));
  CHECK_THROWS(penalty_value({PenaltyTag::VFold, 1.0, 0.0, 5}, model, bare));
  CHECK_THROWS(penalty_value({PenaltyTag::HoldOutPen}, model, bare));
}
