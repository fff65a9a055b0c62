#include "penlab/quadrature.hpp"

#include <cmath>

namespace penlab {

namespace {

// Legendre P_n(x) and its derivative by the three-term recurrence.
void legendre(int n, double x, double* p, double* dp) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  *p = p1;
  *dp = n * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

const GaussLegendreRule& gauss_legendre_32() {
  static const GaussLegendreRule rule = [] {
    GaussLegendreRule r{};
    const int n = 32;
    for (int i = 0; i < n / 2; ++i) {
      double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
      double p = 0.0, dp = 0.0;
      for (int it = 0; it < 64; ++it) {
        legendre(n, x, &p, &dp);
        const double dx = p / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      legendre(n, x, &p, &dp);
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      r.node[i] = -x;
      r.node[n - 1 - i] = x;
      r.weight[i] = w;
      r.weight[n - 1 - i] = w;
    }
    return r;
  }();
  return rule;
}

}  // namespace penlab
