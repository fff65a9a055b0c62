#include "penlab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "penlab/quadrature.hpp"

namespace penlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> merged_breakpoints(const PiecewiseFunction& s, const StepFunction& sigma) {
  std::vector<double> breaks = s.breakpoints();
  breaks.insert(breaks.end(), sigma.edges.begin(), sigma.edges.end());
  breaks.push_back(0.0);
  breaks.push_back(0.5);  // design density jump
  breaks.push_back(1.0);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  return breaks;
}

std::string normalized(std::string name) {
  std::string out;
  for (char c : name) {
    if (c == '-' && !out.empty() && out.back() == '-') continue;  // "X1--005" form
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

RegressionScenario custom_scenario(std::string name, PiecewiseFunction s, StepFunction sigma,
                                   double mu, int n, NoiseLaw noise, double noise_cutoff) {
  if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("mu must lie in (0,1)");
  if (n < 1) throw std::invalid_argument("sample size must be positive");
  sigma.validate();
  if (noise == NoiseLaw::TruncatedGaussian && !(noise_cutoff > 0.0)) {
    throw std::invalid_argument("noise cutoff must be positive");
  }
  RegressionScenario sc;
  sc.name = std::move(name);
  sc.s = std::move(s);
  sc.sigma = std::move(sigma);
  sc.mu = mu;
  sc.n = n;
  sc.noise = noise;
  sc.noise_cutoff = noise_cutoff;
  sc.breaks_ = merged_breakpoints(sc.s, sc.sigma);
  return sc;
}

PiecewiseFunction regression_shape(const std::string& shape) {
  const std::string key = normalized(shape);
  if (key == "linear") {
    return PiecewiseFunction({{0.0, 1.0, [](double x) { return x; }, [](double) { return 1.0; }}});
  }
  if (key == "half-sine" || key == "halfsine") {
    return PiecewiseFunction({{0.0, 1.0, [](double x) { return std::sin(kPi * x); },
                               [](double x) { return kPi * std::cos(kPi * x); }}});
  }
  if (key == "piecewise-linear-sine" || key == "quarter-linear") {
    return PiecewiseFunction(
        {{0.0, 0.5, [](double x) { return 0.25 * x; }, [](double) { return 0.25; }},
         {0.5, 1.0, [](double x) { return 0.125 + (2.0 / 3.0) * std::sin(16.0 * kPi * x); },
          [](double x) { return (32.0 * kPi / 3.0) * std::cos(16.0 * kPi * x); }}});
  }
  throw std::invalid_argument("unknown regression shape: " + shape);
}

StepFunction two_level_noise(double sigma_left, double sigma_right) {
  StepFunction f;
  f.edges = {0.0, 0.5, 1.0};
  f.levels = {sigma_left, sigma_right};
  f.validate();
  return f;
}

RegressionScenario make_scenario(const std::string& name) {
  const std::string key = normalized(name);
  if (key == "x1-005") {
    return custom_scenario("X1-005", regression_shape("linear"), two_level_noise(1.0, 0.05),
                           0.5, 200);
  }
  if (key == "s0-1") {
    return custom_scenario("S0-1", regression_shape("half-sine"), two_level_noise(0.0, 1.0),
                           0.5, 200);
  }
  if (key == "xs1-05") {
    return custom_scenario("XS1-05", regression_shape("piecewise-linear-sine"),
                           two_level_noise(1.0, 0.5), 0.5, 500);
  }
  if (key == "x1-005mu02") {
    return custom_scenario("X1-005mu02", regression_shape("linear"), two_level_noise(1.0, 0.05),
                           0.2, 1000);
  }
  throw std::invalid_argument("unknown experiment: " + name);
}

double RegressionScenario::design_cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x < 0.5 ? 2.0 * mu * x : mu + 2.0 * (1.0 - mu) * (x - 0.5);
}

double RegressionScenario::inv_design_cdf(double u) const {
  if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("u outside [0,1)");
  return u < mu ? u / (2.0 * mu) : 0.5 + (u - mu) / (2.0 * (1.0 - mu));
}

Dataset sample(const RegressionScenario& scenario, RngStream& g) {
  Dataset d;
  d.x.resize(scenario.n);
  d.y.resize(scenario.n);
  for (int i = 0; i < scenario.n; ++i) {
    const double x = scenario.inv_design_cdf(g.uniform());
    const double eps = scenario.noise == NoiseLaw::Gaussian
                           ? g.normal()
                           : g.truncated_normal(scenario.noise_cutoff);
    d.x[i] = x;
    d.y[i] = scenario.s(x) + scenario.sigma(x) * eps;
  }
  d.order.resize(scenario.n);
  std::iota(d.order.begin(), d.order.end(), 0);
  std::sort(d.order.begin(), d.order.end(), [&](int a, int b) {
    return d.x[a] < d.x[b] || (d.x[a] == d.x[b] && a < b);
  });
  return d;
}

Dataset sample(const RegressionScenario& scenario, std::uint64_t seed) {
  RngStream g(seed, 0, 0);
  return sample(scenario, g);
}

IntervalMoments interval_moments(const RegressionScenario& scenario, double a, double b) {
  if (!(a < b)) throw std::invalid_argument("degenerate interval");
  if (!(a >= 0.0 && b <= 1.0)) throw std::invalid_argument("interval outside [0,1]");

  const std::vector<double>& breaks = scenario.breakpoints();
  std::vector<double> cuts;
  cuts.push_back(a);
  for (double t : breaks) {
    if (t > a && t < b) cuts.push_back(t);
  }
  cuts.push_back(b);

  IntervalMoments m;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i], hi = cuts[i + 1];
    const double p = scenario.density(lo);
    const double sig = scenario.sigma(lo);
    const double len = hi - lo;
    m.m0 += p * len;
    m.v2 += sig * sig * p * len;
    m.m1 += p * integrate([&](double x) { return scenario.s(x); }, lo, hi);
    m.m2 += p * integrate([&](double x) { const double v = scenario.s(x); return v * v; }, lo, hi);
  }
  return m;
}

}  // namespace penlab
