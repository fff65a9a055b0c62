#include "penlab/risk_decomposition.hpp"

#include <cmath>
#include <stdexcept>

#include "penlab/penalties.hpp"
#include "penlab/quadrature.hpp"

namespace penlab {

namespace {

double bin_variance(const IntervalMoments& im) {
  if (!(im.m0 > 0.0)) throw std::domain_error("bin with zero design mass");
  const double noise = im.v2 / im.m0;
  const double approx = std::max(0.0, (im.m2 - im.m1 * im.m1 / im.m0) / im.m0);
  return noise + approx;
}

}  // namespace

double expected_estimation_error(const BinMoments& moments, int n) {
  double acc = 0.0;
  for (const IntervalMoments& im : moments.bin) {
    acc += (1.0 + occupancy_correction(n, std::min(im.m0, 1.0))) * bin_variance(im);
  }
  return acc / n;
}

double expected_estimation_error(const RegressionScenario& scenario, const Partition& partition,
                                 int n) {
  return expected_estimation_error(bin_moments(scenario, partition), n);
}

double expected_training_gain(const BinMoments& moments, int n) {
  double acc = 0.0;
  for (const IntervalMoments& im : moments.bin) acc += bin_variance(im);
  return acc / n;
}

double expected_training_gain(const RegressionScenario& scenario, const Partition& partition,
                              int n) {
  return expected_training_gain(bin_moments(scenario, partition), n);
}

DecompositionRecord decompose(const Dataset& data, const RegressionScenario& scenario,
                              const Partition& partition) {
  return decompose(data, scenario, partition, bin_moments(scenario, partition));
}

DecompositionRecord decompose(const Dataset& data, const RegressionScenario& scenario,
                              const Partition& partition, const BinMoments& moments) {
  const int n = data.n();
  const FittedHistogram f = fit(data, partition, EmptyBinPolicy::GlobalMean);

  // projection values per bin
  std::vector<double> proj(moments.bin.size());
  for (std::size_t b = 0; b < moments.bin.size(); ++b) {
    const IntervalMoments& im = moments.bin[b];
    proj[b] = im.m0 > 0.0 ? im.m1 / im.m0 : 0.0;
  }

  const double noise_risk = moments.total.v2;  // P gamma(s)
  const double p_fit = excess_loss_of_values(f.mean, moments) + noise_risk;
  const double p_proj = excess_loss_of_values(proj, moments) + noise_risk;

  double pn_fit = 0.0, pn_proj = 0.0, pn_bayes = 0.0;
  for (int i = 0; i < n; ++i) {
    const int b = bin_index(partition, data.x[i]);
    const double rf = f.mean[b] - data.y[i];
    const double rp = proj[b] - data.y[i];
    const double rb = scenario.s(data.x[i]) - data.y[i];
    pn_fit += rf * rf;
    pn_proj += rp * rp;
    pn_bayes += rb * rb;
  }
  pn_fit /= n;
  pn_proj /= n;
  pn_bayes /= n;

  DecompositionRecord rec;
  rec.estimation_error = p_fit - p_proj;
  rec.training_gain = pn_proj - pn_fit;
  rec.bias_deviation = (pn_proj - pn_bayes) - (p_proj - noise_risk);
  rec.optimism = p_fit - pn_fit;
  return rec;
}

BiasExpansion bias_expansion(const RegressionScenario& scenario, const ModelIndex& model) {
  if (std::abs(scenario.mu - 0.5) > 1e-12) {
    throw std::domain_error("bias expansion requires the uniform design (mu = 1/2)");
  }
  if (!scenario.s.has_derivatives()) {
    throw std::domain_error("bias expansion requires a differentiable regression function");
  }
  if (model.kind != ModelKind::TwoRegime || model.split != 0.5) {
    throw std::domain_error("bias expansion applies to two-regime models split at 1/2");
  }

  const auto energy = [&](double lo, double hi) {
    // integrate (s')^2, splitting at the declared breakpoints
    const std::vector<double>& breaks = scenario.breakpoints();
    std::vector<double> cuts{lo};
    for (double t : breaks) {
      if (t > lo && t < hi) cuts.push_back(t);
    }
    cuts.push_back(hi);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      acc += integrate(
          [&](double x) {
            const double d = scenario.s.derivative(x);
            return d * d;
          },
          cuts[i], cuts[i + 1]);
    }
    return acc;
  };

  BiasExpansion out;
  out.coeff_left = energy(0.0, 0.5) / 48.0;
  out.coeff_right = energy(0.5, 1.0) / 48.0;
  out.predicted_bias = out.coeff_left / (static_cast<double>(model.d1) * model.d1) +
                       out.coeff_right / (static_cast<double>(model.d2) * model.d2);
  return out;
}

}  // namespace penlab
