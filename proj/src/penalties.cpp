#include "penlab/penalties.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace penlab {

double occupancy_correction(std::int64_t n, double p) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in (0,1]");
  if (p == 1.0) return 0.0;

  const double q = 1.0 - p;
  const double np = static_cast<double>(n) * p;
  const std::int64_t mode = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(std::llround(np)), 1, n);

  // weight at the mode via log-gamma, then multiplicative recurrences outward
  const double log_w0 = std::lgamma(n + 1.0) - std::lgamma(mode + 1.0) -
                        std::lgamma(n - mode + 1.0) + mode * std::log(p) +
                        (n - mode) * std::log(q);
  const double w0 = std::exp(log_w0);
  const double ratio = p / q;

  double total = w0 * np / mode;
  double w = w0;
  for (std::int64_t k = mode + 1; k <= n; ++k) {
    w *= ratio * static_cast<double>(n - k + 1) / static_cast<double>(k);
    total += w * np / k;
    if (w < 1e-18 * total) break;
  }
  w = w0;
  for (std::int64_t k = mode - 1; k >= 1; --k) {
    w *= (static_cast<double>(k + 1) / static_cast<double>(n - k)) / ratio;
    total += w * np / k;
    if (w < 1e-18 * total) break;
  }
  return total - 1.0;
}

namespace {

// Per-bin response variance conditional on the bin: noise plus the spread of
// the regression function around its bin projection.
double bin_variance(const IntervalMoments& im) {
  const double noise = im.v2 / im.m0;
  const double approx = std::max(0.0, (im.m2 - im.m1 * im.m1 / im.m0) / im.m0);
  return noise + approx;
}

}  // namespace

double expected_ideal_penalty(const BinMoments& moments, int n) {
  double acc = 0.0;
  for (const IntervalMoments& im : moments.bin) {
    if (!(im.m0 > 0.0)) throw std::domain_error("bin with zero design mass");
    acc += (2.0 + occupancy_correction(n, std::min(im.m0, 1.0))) * bin_variance(im);
  }
  return acc / n;
}

double expected_ideal_penalty(const RegressionScenario& scenario, const Partition& partition,
                              int n) {
  return expected_ideal_penalty(bin_moments(scenario, partition), n);
}

double estimate_variance_diff(const Dataset& data) {
  const int n = data.n();
  if (n < 2) throw std::invalid_argument("need at least 2 points");
  const int pairs = n / 2;
  double acc = 0.0;
  for (int k = 0; k < pairs; ++k) {
    const double d = data.y[data.order[2 * k + 1]] - data.y[data.order[2 * k]];
    acc += d * d;
  }
  return acc / (2.0 * pairs);
}

FoldAssignment make_vfold_assignment(const Dataset& data, int V, RngStream& g) {
  const int n = data.n();
  if (V < 2 || V > n) throw std::invalid_argument("V must lie in {2,...,n}");

  FoldAssignment a;
  a.V = V;
  a.fold_of.assign(n, -1);
  a.fold_size.assign(V, 0);

  std::vector<int> labels(V);
  std::iota(labels.begin(), labels.end(), 0);

  int pos = 0;
  for (; pos + V <= n; pos += V) {
    shuffle(labels, g);
    for (int i = 0; i < V; ++i) {
      a.fold_of[data.order[pos + i]] = labels[i];
    }
  }
  const int rest = n - pos;
  if (rest > 0) {
    shuffle(labels, g);  // the first `rest` labels are a uniform distinct draw
    for (int i = 0; i < rest; ++i) {
      a.fold_of[data.order[pos + i]] = labels[i];
    }
  }
  for (int f : a.fold_of) a.fold_size[f] += 1;
  return a;
}

FoldAssignment loo_assignment(int n) {
  FoldAssignment a;
  a.V = n;
  a.fold_of.resize(n);
  std::iota(a.fold_of.begin(), a.fold_of.end(), 0);
  a.fold_size.assign(n, 1);
  return a;
}

FoldAssignment fixed_fold_assignment(int n, int V) {
  if (V < 2 || V > n) throw std::invalid_argument("V must lie in {2,...,n}");
  FoldAssignment a;
  a.V = V;
  a.fold_of.resize(n);
  a.fold_size.assign(V, 0);
  for (int i = 0; i < n; ++i) {
    a.fold_of[i] = i % V;
    a.fold_size[i % V] += 1;
  }
  return a;
}

HoldoutSplit make_holdout_split(const Dataset& data, RngStream& g) {
  const int n = data.n();
  if (n < 2) throw std::invalid_argument("need at least 2 points");
  HoldoutSplit s;
  s.in_train.assign(n, 0);
  for (int k = 0; k + 1 < n; k += 2) {
    const int pick = static_cast<int>(g.below(2));
    s.in_train[data.order[k + pick]] = 1;
  }
  if (n % 2 == 1 && g.below(2) == 0) {
    s.in_train[data.order[n - 1]] = 1;
  }
  s.train_size = 0;
  for (char c : s.in_train) s.train_size += c;
  return s;
}

namespace {

struct BinAccum {
  std::vector<int> count;
  std::vector<double> sum;
  std::vector<double> sumsq;
  double total_sum = 0.0;
  int total_count = 0;

  explicit BinAccum(int bins) : count(bins, 0), sum(bins, 0.0), sumsq(bins, 0.0) {}

  void add(int b, double y) {
    count[b] += 1;
    sum[b] += y;
    sumsq[b] += y * y;
    total_sum += y;
    total_count += 1;
  }
};

std::vector<int> bin_assignments(const Dataset& data, const Partition& partition) {
  std::vector<int> bin(data.n());
  for (int i = 0; i < data.n(); ++i) bin[i] = bin_index(partition, data.x[i]);
  return bin;
}

// Risk sums of a subset evaluated against per-bin values: both returned as
// un-normalized sums of squared residuals.
struct SubsetEval {
  double full = 0.0;   // over all points
  double train = 0.0;  // over the training subset
  double val = 0.0;    // over the complement
};

}  // namespace

double pen_vfold(const Dataset& data, const Partition& partition, const FoldAssignment& folds) {
  const int n = data.n();
  if (static_cast<int>(folds.fold_of.size()) != n) {
    throw std::invalid_argument("fold assignment does not match the dataset");
  }
  const int bins = partition.bins();
  const int V = folds.V;
  const std::vector<int> bin = bin_assignments(data, partition);

  BinAccum full(bins);
  std::vector<BinAccum> per_fold(V, BinAccum(bins));
  for (int i = 0; i < n; ++i) {
    full.add(bin[i], data.y[i]);
    per_fold[folds.fold_of[i]].add(bin[i], data.y[i]);
  }

  double pen = 0.0;
  for (int j = 0; j < V; ++j) {
    const BinAccum& fj = per_fold[j];
    const int n_train = n - folds.fold_size[j];
    if (folds.fold_size[j] < 1 || n_train < 1) {
      throw std::invalid_argument("degenerate fold sizes");
    }
    const double g_train = (full.total_sum - fj.total_sum) / n_train;
    double full_eval = 0.0, train_eval = 0.0;
    for (int b = 0; b < bins; ++b) {
      const int c_train = full.count[b] - fj.count[b];
      const double v = c_train > 0 ? (full.sum[b] - fj.sum[b]) / c_train : g_train;
      full_eval += full.sumsq[b] - 2.0 * v * full.sum[b] + full.count[b] * v * v;
      train_eval += (full.sumsq[b] - fj.sumsq[b]) - 2.0 * v * (full.sum[b] - fj.sum[b]) +
                    c_train * v * v;
    }
    pen += full_eval / n - train_eval / n_train;
  }
  return pen * (static_cast<double>(V) - 1.0) / V;
}

double vfcv_criterion(const Dataset& data, const Partition& partition,
                      const FoldAssignment& folds) {
  const int n = data.n();
  if (static_cast<int>(folds.fold_of.size()) != n) {
    throw std::invalid_argument("fold assignment does not match the dataset");
  }
  const int bins = partition.bins();
  const int V = folds.V;
  const std::vector<int> bin = bin_assignments(data, partition);

  BinAccum full(bins);
  std::vector<BinAccum> per_fold(V, BinAccum(bins));
  for (int i = 0; i < n; ++i) {
    full.add(bin[i], data.y[i]);
    per_fold[folds.fold_of[i]].add(bin[i], data.y[i]);
  }

  double crit = 0.0;
  for (int j = 0; j < V; ++j) {
    const BinAccum& fj = per_fold[j];
    const int n_train = n - folds.fold_size[j];
    if (folds.fold_size[j] < 1 || n_train < 1) {
      throw std::invalid_argument("degenerate fold sizes");
    }
    const double g_train = (full.total_sum - fj.total_sum) / n_train;
    double val_eval = 0.0;
    for (int b = 0; b < bins; ++b) {
      const int c_train = full.count[b] - fj.count[b];
      const double v = c_train > 0 ? (full.sum[b] - fj.sum[b]) / c_train : g_train;
      val_eval += fj.sumsq[b] - 2.0 * v * fj.sum[b] + fj.count[b] * v * v;
    }
    crit += val_eval / folds.fold_size[j];
  }
  return crit / V;
}

double pen_loo(const Dataset& data, const Partition& partition) {
  const int n = data.n();
  if (n < 2) throw std::invalid_argument("need at least 2 points");
  const int bins = partition.bins();
  const std::vector<int> bin = bin_assignments(data, partition);

  BinAccum full(bins);
  for (int i = 0; i < n; ++i) full.add(bin[i], data.y[i]);

  // full-sample per-bin residual sums; bins are never empty at their own
  // data, so the fitted value is the exact bin mean
  std::vector<double> bin_risk(bins, 0.0);
  double full_risk = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (full.count[b] > 0) {
      const double m = full.sum[b] / full.count[b];
      bin_risk[b] = full.sumsq[b] - full.count[b] * m * m;
    }
    full_risk += bin_risk[b];
  }

  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const int b = bin[i];
    const double yi = data.y[i];
    const int c = full.count[b];
    const double v = c > 1 ? (full.sum[b] - yi) / (c - 1)
                           : (full.total_sum - yi) / (n - 1);
    const double new_bin_risk =
        full.sumsq[b] - 2.0 * v * full.sum[b] + full.count[b] * v * v;
    const double full_eval = full_risk - bin_risk[b] + new_bin_risk;
    const double resid = v - yi;
    const double train_eval = full_eval - resid * resid;
    acc += full_eval / n - train_eval / (n - 1);
  }
  return acc * (static_cast<double>(n) - 1.0) / n;
}

double pen_holdout(const Dataset& data, const Partition& partition, const HoldoutSplit& split) {
  const int n = data.n();
  if (static_cast<int>(split.in_train.size()) != n) {
    throw std::invalid_argument("split does not match the dataset");
  }
  const int bins = partition.bins();
  const std::vector<int> bin = bin_assignments(data, partition);

  BinAccum full(bins);
  BinAccum train(bins);
  for (int i = 0; i < n; ++i) {
    full.add(bin[i], data.y[i]);
    if (split.in_train[i]) train.add(bin[i], data.y[i]);
  }
  const int n_train = split.train_size;
  if (n_train == 0 || n_train == n) throw std::invalid_argument("degenerate split");
  const double g_train = train.total_sum / n_train;

  double full_eval = 0.0, train_eval = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double v = train.count[b] > 0 ? train.sum[b] / train.count[b] : g_train;
    full_eval += full.sumsq[b] - 2.0 * v * full.sum[b] + full.count[b] * v * v;
    train_eval += train.sumsq[b] - 2.0 * v * train.sum[b] + train.count[b] * v * v;
  }
  const double prefactor = static_cast<double>(n_train) / (n - n_train);
  return prefactor * (full_eval / n - train_eval / n_train);
}

double holdout_criterion(const Dataset& data, const Partition& partition,
                         const HoldoutSplit& split) {
  const int n = data.n();
  if (static_cast<int>(split.in_train.size()) != n) {
    throw std::invalid_argument("split does not match the dataset");
  }
  const int bins = partition.bins();
  const std::vector<int> bin = bin_assignments(data, partition);

  BinAccum train(bins);
  BinAccum val(bins);
  for (int i = 0; i < n; ++i) {
    (split.in_train[i] ? train : val).add(bin[i], data.y[i]);
  }
  if (train.total_count == 0 || val.total_count == 0) {
    throw std::invalid_argument("degenerate split");
  }
  const double g_train = train.total_sum / train.total_count;

  double val_eval = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double v = train.count[b] > 0 ? train.sum[b] / train.count[b] : g_train;
    val_eval += val.sumsq[b] - 2.0 * v * val.sum[b] + val.count[b] * v * v;
  }
  return val_eval / val.total_count;
}

double penalty_value(const PenaltyKind& kind, const ModelIndex& model,
                     const PenaltyContext& context) {
  if (!(kind.overpen >= 0.0)) throw std::invalid_argument("overpen factor must be >= 0");
  if (context.data == nullptr) throw std::invalid_argument("penalty needs data context");
  const int n = context.data->n();
  const double dim = model.dim();

  double base = 0.0;
  switch (kind.tag) {
    case PenaltyTag::Linear:
      base = kind.linear_k * dim / n;
      break;
    case PenaltyTag::MallowsEst:
      base = 2.0 * estimate_variance_diff(*context.data) * dim / n;
      break;
    case PenaltyTag::MallowsMax: {
      if (context.scenario == nullptr) {
        throw std::invalid_argument("MallowsMax needs the scenario");
      }
      const double sup = context.scenario->sigma_sup();
      base = 2.0 * sup * sup * dim / n;
      break;
    }
    case PenaltyTag::ExpectedIdeal:
      if (context.scenario == nullptr) {
        throw std::invalid_argument("ExpectedIdeal needs the scenario");
      }
      base = expected_ideal_penalty(*context.scenario, build_partition(model), n);
      break;
    case PenaltyTag::VFold:
      if (context.folds == nullptr) throw std::invalid_argument("VFold needs folds");
      base = pen_vfold(*context.data, build_partition(model), *context.folds);
      break;
    case PenaltyTag::HoldOutPen:
      if (context.split == nullptr) throw std::invalid_argument("HoldOutPen needs a split");
      base = pen_holdout(*context.data, build_partition(model), *context.split);
      break;
    case PenaltyTag::LeaveOneOut:
      base = pen_loo(*context.data, build_partition(model));
      break;
  }
  return kind.overpen * base;
}

}  // namespace penlab
