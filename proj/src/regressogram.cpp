#include "penlab/regressogram.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace penlab {

FittedHistogram fit(const Dataset& data, const Partition& partition, EmptyBinPolicy policy) {
  const int n = data.n();
  if (n < 1) throw std::invalid_argument("cannot fit on an empty sample");

  FittedHistogram f;
  f.partition = partition;
  const int bins = partition.bins();
  f.count.assign(bins, 0);
  f.sum.assign(bins, 0.0);
  f.sumsq.assign(bins, 0.0);
  f.mean.assign(bins, 0.0);
  f.fallback.assign(bins, 0);
  f.n_train = n;

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const int b = bin_index(partition, data.x[i]);
    f.count[b] += 1;
    f.sum[b] += data.y[i];
    f.sumsq[b] += data.y[i] * data.y[i];
    total += data.y[i];
  }
  f.train_mean = total / n;

  for (int b = 0; b < bins; ++b) {
    if (f.count[b] > 0) {
      f.mean[b] = f.sum[b] / f.count[b];
    } else if (policy == EmptyBinPolicy::GlobalMean) {
      f.mean[b] = f.train_mean;
      f.fallback[b] = 1;
    } else {
      throw std::runtime_error("empty bin " + std::to_string(b) + " under strict policy");
    }
  }
  return f;
}

double empirical_risk(const FittedHistogram& fit, const Dataset& eval_data) {
  const int n = eval_data.n();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = fit.value(eval_data.x[i]) - eval_data.y[i];
    acc += d * d;
  }
  return acc / n;
}

double training_risk(const FittedHistogram& fit) {
  double acc = 0.0;
  for (std::size_t b = 0; b < fit.mean.size(); ++b) {
    // sum_i (y_i - v)^2 over the bin, with v its fitted value
    acc += fit.sumsq[b] - 2.0 * fit.mean[b] * fit.sum[b] + fit.count[b] * fit.mean[b] * fit.mean[b];
  }
  return acc / fit.n_train;
}

BinMoments bin_moments(const RegressionScenario& scenario, const Partition& partition) {
  BinMoments m;
  m.bin.reserve(partition.bins());
  for (int b = 0; b < partition.bins(); ++b) {
    m.bin.push_back(interval_moments(scenario, partition.edges[b], partition.edges[b + 1]));
    m.total += m.bin.back();
  }
  return m;
}

double excess_loss_of_values(std::span<const double> bin_values, const BinMoments& moments) {
  if (bin_values.size() != moments.bin.size()) {
    throw std::invalid_argument("bin value count does not match the partition");
  }
  double acc = 0.0;
  for (std::size_t b = 0; b < moments.bin.size(); ++b) {
    const IntervalMoments& im = moments.bin[b];
    const double v = bin_values[b];
    acc += im.m2 - 2.0 * v * im.m1 + v * v * im.m0;
  }
  return acc;
}

double excess_loss(const FittedHistogram& fit, const RegressionScenario& scenario) {
  return excess_loss_of_values(fit.mean, bin_moments(scenario, fit.partition));
}

double projection_bias(const BinMoments& moments) {
  double acc = 0.0;
  for (const IntervalMoments& im : moments.bin) {
    if (im.m0 > 0.0) {
      acc += im.m2 - im.m1 * im.m1 / im.m0;
    } else {
      acc += im.m2;  // zero design mass: the projection value is immaterial
    }
  }
  return acc;
}

double projection_bias(const RegressionScenario& scenario, const Partition& partition) {
  return projection_bias(bin_moments(scenario, partition));
}

RiskReport risk_report(const FittedHistogram& fit, const Dataset& train_data,
                       const RegressionScenario& scenario) {
  const BinMoments moments = bin_moments(scenario, fit.partition);
  RiskReport r;
  r.emp_risk = empirical_risk(fit, train_data);
  r.excess_loss = excess_loss_of_values(fit.mean, moments);
  r.bias = projection_bias(moments);
  return r;
}

std::string risk_report_csv_row(const ModelIndex& model, const RiskReport& report) {
  const bool constant = model.kind == ModelKind::Constant;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s,%d,%d,%.17g,%.17g,%.17g", model.label().c_str(),
                constant ? 0 : model.d1, constant ? 0 : model.d2, report.emp_risk,
                report.excess_loss, report.bias);
  return buf;
}

}  // namespace penlab
