#pragma once

#include <cstdint>
#include <vector>

#include "penlab/models.hpp"
#include "penlab/regressogram.hpp"
#include "penlab/rng.hpp"
#include "penlab/scenario.hpp"

namespace penlab {

// n*p*E[1/Z | Z > 0] - 1 for Z ~ Binomial(n, p): the small-count correction
// appearing in the expected optimism of a regressogram bin. Exact sum with
// log-space weights; terms below 1e-18 of the running total are dropped.
double occupancy_correction(std::int64_t n, double p);

// Expectation of the ideal penalty of the model with the given partition:
// (1/n) * sum_bins (2 + correction(n, p_bin)) * bin_response_variance, where
// the response variance conditional on the bin splits into a noise part
// (v2/m0) and an approximation part ((m2 - m1^2/m0)/m0).
double expected_ideal_penalty(const BinMoments& moments, int n);
double expected_ideal_penalty(const RegressionScenario& scenario,
                              const Partition& partition, int n);

// First-difference variance estimator on the X-sorted responses:
// (1/2m) * sum_{i=1}^{m} (Y_(2i) - Y_(2i-1))^2 with m = floor(n/2) pairs;
// an odd trailing point is dropped.
double estimate_variance_diff(const Dataset& data);

// Block-stratified fold assignment: every consecutive block of V X-sorted
// indices holds exactly one index of each fold; a trailing remainder block
// goes to distinct uniformly chosen folds.
struct FoldAssignment {
  int V = 0;
  std::vector<int> fold_of;    // per data index
  std::vector<int> fold_size;  // per fold
};

FoldAssignment make_vfold_assignment(const Dataset& data, int V, RngStream& g);

// Singleton folds (V = n); no randomness involved.
FoldAssignment loo_assignment(int n);

// Deterministic partition over the raw index order (B_j = {i : i mod V = j});
// data-independent, the fixed-partition setting of the fold-penalty theory.
FoldAssignment fixed_fold_assignment(int n, int V);

// Train/validation split keeping exactly one index of each consecutive
// X-sorted pair in the training set I.
struct HoldoutSplit {
  std::vector<char> in_train;  // per data index
  int train_size = 0;
};

HoldoutSplit make_holdout_split(const Dataset& data, RngStream& g);

// ((V-1)/V) * sum_j [ P_n gamma(fit_-j) - P_n^(-j) gamma(fit_-j) ], where
// fit_-j is trained outside fold j with the GlobalMean empty-bin policy and
// P_n^(-j) is normalized by n - |B_j|.
double pen_vfold(const Dataset& data, const Partition& partition,
                 const FoldAssignment& folds);

// Fast V = n path via per-bin downdates; equals pen_vfold with singleton folds.
double pen_loo(const Dataset& data, const Partition& partition);

// (|I|/(n-|I|)) * [ P_n gamma(fit_I) - P_n^(I) gamma(fit_I) ].
double pen_holdout(const Dataset& data, const Partition& partition,
                   const HoldoutSplit& split);

// (1/V) * sum_j P_n^(B_j) gamma(fit_-j): the V-fold cross-validation score.
double vfcv_criterion(const Dataset& data, const Partition& partition,
                      const FoldAssignment& folds);

// P_n^(I^c) gamma(fit_I): the hold-out cross-validation score.
double holdout_criterion(const Dataset& data, const Partition& partition,
                         const HoldoutSplit& split);

enum class PenaltyTag {
  Linear,         // K * D / n
  MallowsEst,     // 2 * sigma2_hat * D / n, first-difference estimator
  MallowsMax,     // 2 * sup(sigma)^2 * D / n, true noise sup
  ExpectedIdeal,  // expected_ideal_penalty
  VFold,
  HoldOutPen,
  LeaveOneOut,
};

struct PenaltyKind {
  PenaltyTag tag = PenaltyTag::Linear;
  double overpen = 1.0;  // multiplicative factor applied to the base penalty
  double linear_k = 0.0;
  int vfold_v = 0;
};

struct PenaltyContext {
  const Dataset* data = nullptr;
  const RegressionScenario* scenario = nullptr;
  const FoldAssignment* folds = nullptr;
  const HoldoutSplit* split = nullptr;
};

// overpen * base penalty for the model; throws when the context required by
// the penalty kind is missing.
double penalty_value(const PenaltyKind& kind, const ModelIndex& model,
                     const PenaltyContext& context);

}  // namespace penlab
