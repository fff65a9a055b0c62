#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "penlab/quadrature.hpp"
#include "penlab/rng.hpp"

using namespace penlab;

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  // degree 63 is the highest the 32-point rule must handle exactly
  for (int degree : {0, 1, 2, 5, 17, 40, 63}) {
    const double got = integrate([&](double x) { return std::pow(x, degree); }, 0.0, 1.0);
    CHECK(got == doctest::Approx(1.0 / (degree + 1)).epsilon(1e-13));
  }
  const double weight_sum = std::accumulate(gauss_legendre_32().weight.begin(),
                                            gauss_legendre_32().weight.end(), 0.0);
  CHECK(weight_sum == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("gauss-legendre handles oscillatory integrands") {
  const double pi = 3.14159265358979323846;
  // int_0^{1/2} sin(16 pi x) dx = 0
  CHECK(std::abs(integrate([&](double x) { return std::sin(16 * pi * x); }, 0.0, 0.5)) < 1e-13);
  // int_{1/2}^1 sin^2(16 pi x) dx = 1/4
  CHECK(integrate([&](double x) { const double v = std::sin(16 * pi * x); return v * v; },
                  0.5, 1.0) == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(42, 7, 3);
  RngStream b(42, 7, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c(42, 7, 4);
  RngStream d(42, 8, 3);
  RngStream e(43, 7, 3);
  int same_c = 0, same_d = 0, same_e = 0;
  RngStream a2(42, 7, 3);
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t v = a2.next_u64();
    same_c += v == c.next_u64();
    same_d += v == d.next_u64();
    same_e += v == e.next_u64();
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
  CHECK(same_e == 0);
}

TEST_CASE("uniform and normal have the right moments") {
  RngStream g(1, 0, 0);
  const int n = 1000000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = g.normal();
    sn += z;
    sn2 += z * z;
  }
  // 5 standard errors
  CHECK(std::abs(su / n - 0.5) < 5.0 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(su2 / n - 1.0 / 3) < 5.0 * std::sqrt(0.1 / n));
  CHECK(std::abs(sn / n) < 5.0 / std::sqrt(double(n)));
  CHECK(std::abs(sn2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("truncated normal is bounded with unit variance") {
  RngStream g(5, 0, 0);
  const double cutoff = 2.5;
  const double bound = cutoff / RngStream::truncated_sd(cutoff);
  const int n = 400000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = g.truncated_normal(cutoff);
    REQUIRE(std::abs(z) <= bound + 1e-12);
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 5.0 / std::sqrt(double(n)));
  CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("below is unbiased over small ranges") {
  RngStream g(9, 1, 0);
  std::vector<int> counts(5, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[g.below(5)] += 1;
  for (int c : counts) CHECK(std::abs(c - n / 5.0) < 5.0 * std::sqrt(n * 0.2 * 0.8));
}

TEST_CASE("shuffle produces permutations") {
  RngStream g(11, 2, 0);
  std::vector<int> v(10);
  std::iota(v.begin(), v.end(), 0);
  shuffle(v, g);
  std::set<int> seen(v.begin(), v.end());
  CHECK(seen.size() == 10);
}
