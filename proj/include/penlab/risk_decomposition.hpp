#pragma once

#include "penlab/models.hpp"
#include "penlab/regressogram.hpp"
#include "penlab/scenario.hpp"

namespace penlab {

// Sample-level decomposition of the optimism of a fitted regressogram.
// With P the true and P_n the empirical distribution, s_m the design
// projection and the fitted model shat:
//   estimation_error = P gamma(shat) - P gamma(s_m)        (>= 0)
//   training_gain    = P_n gamma(s_m) - P_n gamma(shat)    (>= 0)
//   bias_deviation   = (P_n - P)(gamma(s_m) - gamma(s))
//   optimism         = P gamma(shat) - P_n gamma(shat)
// and identically
//   optimism = estimation_error + training_gain - bias_deviation
//              - [P_n gamma(s) - P gamma(s)].
struct DecompositionRecord {
  double estimation_error = 0.0;
  double training_gain = 0.0;
  double bias_deviation = 0.0;
  double optimism = 0.0;
};

DecompositionRecord decompose(const Dataset& data, const RegressionScenario& scenario,
                              const Partition& partition);
DecompositionRecord decompose(const Dataset& data, const RegressionScenario& scenario,
                              const Partition& partition, const BinMoments& moments);

// E[estimation_error] = (1/n) sum_bins (1 + correction(n, p_bin)) * var_bin.
double expected_estimation_error(const BinMoments& moments, int n);
double expected_estimation_error(const RegressionScenario& scenario,
                                 const Partition& partition, int n);

// E[training_gain] = (1/n) sum_bins var_bin.
double expected_training_gain(const BinMoments& moments, int n);
double expected_training_gain(const RegressionScenario& scenario,
                              const Partition& partition, int n);

// Large-dimension expansion of the projection bias for two-regime models
// under the uniform design: bias ~ coeff_left/d1^2 + coeff_right/d2^2 with
// coeff = (1/48) * int (s')^2 over the corresponding half. Exact (zero
// remainder) when s'' = 0.
struct BiasExpansion {
  double coeff_left = 0.0;
  double coeff_right = 0.0;
  double predicted_bias = 0.0;
};

BiasExpansion bias_expansion(const RegressionScenario& scenario, const ModelIndex& model);

}  // namespace penlab
