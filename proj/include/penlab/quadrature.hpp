#pragma once

#include <array>

namespace penlab {

// 32-point Gauss-Legendre rule on [-1,1]; exact for polynomials up to
// degree 63, effectively exact in double precision for analytic integrands
// on the sub-intervals used here.
struct GaussLegendreRule {
  std::array<double, 32> node;
  std::array<double, 32> weight;
};

const GaussLegendreRule& gauss_legendre_32();

template <typename F>
double integrate(F&& f, double a, double b) {
  const GaussLegendreRule& rule = gauss_legendre_32();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (int i = 0; i < 32; ++i) {
    acc += rule.weight[i] * f(mid + half * rule.node[i]);
  }
  return acc * half;
}

}  // namespace penlab
