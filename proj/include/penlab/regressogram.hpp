#pragma once

#include <span>
#include <vector>

#include "penlab/models.hpp"
#include "penlab/scenario.hpp"

namespace penlab {

enum class EmptyBinPolicy { GlobalMean, Strict };

// Least-squares piecewise-constant fit with per-bin sufficient statistics.
// Bins without training points take the training sample's global mean under
// the GlobalMean policy and are flagged in `fallback`.
struct FittedHistogram {
  Partition partition;
  std::vector<int> count;
  std::vector<double> sum;
  std::vector<double> sumsq;
  std::vector<double> mean;
  std::vector<char> fallback;
  int n_train = 0;
  double train_mean = 0.0;

  double value(double x) const { return mean[bin_index(partition, x)]; }
};

FittedHistogram fit(const Dataset& data, const Partition& partition,
                    EmptyBinPolicy policy = EmptyBinPolicy::GlobalMean);

// (1/n) sum_i (fit(x_i) - y_i)^2 over eval_data (may differ from the
// training data).
double empirical_risk(const FittedHistogram& fit, const Dataset& eval_data);

// In-sample risk straight from the sufficient statistics.
double training_risk(const FittedHistogram& fit);

// Exact design moments of every bin of a partition, plus their total.
struct BinMoments {
  std::vector<IntervalMoments> bin;
  IntervalMoments total;
};

BinMoments bin_moments(const RegressionScenario& scenario, const Partition& partition);

// Exact excess loss of the piecewise-constant function with the given bin
// values: sum_bins (m2 - 2 v m1 + v^2 m0).
double excess_loss_of_values(std::span<const double> bin_values, const BinMoments& moments);

double excess_loss(const FittedHistogram& fit, const RegressionScenario& scenario);

// Excess loss of the design projection (per-bin value m1/m0).
double projection_bias(const BinMoments& moments);
double projection_bias(const RegressionScenario& scenario, const Partition& partition);

struct RiskReport {
  double emp_risk = 0.0;
  double excess_loss = 0.0;
  double bias = 0.0;
};

RiskReport risk_report(const FittedHistogram& fit, const Dataset& train_data,
                       const RegressionScenario& scenario);

// CSV row "model,d1,d2,emp_risk,excess_loss,bias" (constant model -> 0,0).
inline constexpr const char* kRiskReportCsvHeader = "model,d1,d2,emp_risk,excess_loss,bias";
std::string risk_report_csv_row(const ModelIndex& model, const RiskReport& report);

}  // namespace penlab
