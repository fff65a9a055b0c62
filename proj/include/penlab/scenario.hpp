#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "penlab/piecewise.hpp"
#include "penlab/rng.hpp"

namespace penlab {

enum class NoiseLaw { Gaussian, TruncatedGaussian };

// Data-generating distribution on [0,1): Y = s(X) + sigma(X) * eps with eps
// of mean 0 and variance 1. The design density is 2*mu on [0,1/2) and
// 2*(1-mu) on [1/2,1), so mu is the design mass of the left half.
struct RegressionScenario {
  std::string name;
  PiecewiseFunction s;
  StepFunction sigma;
  double mu = 0.5;
  int n = 0;
  NoiseLaw noise = NoiseLaw::Gaussian;
  double noise_cutoff = 4.0;  // TruncatedGaussian only

  double density(double x) const { return x < 0.5 ? 2.0 * mu : 2.0 * (1.0 - mu); }
  double design_cdf(double x) const;
  double inv_design_cdf(double u) const;
  double sigma_sup() const { return sigma.max_level(); }

  // sorted union of the breakpoints of s, sigma and the design density
  const std::vector<double>& breakpoints() const { return breaks_; }

  std::vector<double> breaks_;  // filled by the factories below
};

// Scenario with explicit ingredients; validates and indexes breakpoints.
RegressionScenario custom_scenario(std::string name, PiecewiseFunction s,
                                   StepFunction sigma, double mu, int n,
                                   NoiseLaw noise = NoiseLaw::Gaussian,
                                   double noise_cutoff = 4.0);

// The four named experiments (X1-005, S0-1, XS1-05, X1-005mu02).
RegressionScenario make_scenario(const std::string& name);

// Named regression shapes used by the experiments and the config format:
// "linear", "half-sine", "piecewise-linear-sine" (alias "quarter-linear").
PiecewiseFunction regression_shape(const std::string& shape);

// Noise profile that is sigma_left on [0,1/2) and sigma_right on [1/2,1).
StepFunction two_level_noise(double sigma_left, double sigma_right);

struct Dataset {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<int> order;  // permutation sorting x nondecreasingly

  int n() const { return static_cast<int>(x.size()); }
};

Dataset sample(const RegressionScenario& scenario, RngStream& g);
Dataset sample(const RegressionScenario& scenario, std::uint64_t seed);

// Exact moments of the design restricted to [a,b):
//   m0 = P(X in [a,b)),  m1 = int s p,  m2 = int s^2 p,  v2 = int sigma^2 p.
struct IntervalMoments {
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double v2 = 0.0;

  IntervalMoments& operator+=(const IntervalMoments& o) {
    m0 += o.m0;
    m1 += o.m1;
    m2 += o.m2;
    v2 += o.v2;
    return *this;
  }
};

IntervalMoments interval_moments(const RegressionScenario& scenario, double a, double b);

}  // namespace penlab
