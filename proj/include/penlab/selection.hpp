#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "penlab/models.hpp"
#include "penlab/penalties.hpp"
#include "penlab/regressogram.hpp"
#include "penlab/scenario.hpp"

namespace penlab {

struct CriterionRow {
  ModelIndex model;
  double emp_risk = 0.0;
  double penalty = 0.0;
  double criterion = 0.0;               // emp_risk + penalty
  double excess_loss = 0.0;             // exact loss when a scenario is known
  bool has_excess_loss = false;
};

struct CriterionTable {
  std::vector<CriterionRow> rows;
};

struct SelectionOutcome {
  ModelIndex model;
  int row = -1;
  double criterion = 0.0;
  double excess_loss = 0.0;
  bool tie_broken = false;
};

// Models whose every bin holds at least 2 data points; throws when nothing
// survives (the collection is too rich for the sample).
std::vector<ModelIndex> admissible_models(const Dataset& data,
                                          const std::vector<ModelIndex>& models);

int min_bin_count(const Dataset& data, const Partition& partition);

// Minimizer of the criterion; ties broken by model_less, deterministically.
SelectionOutcome select_penalized(const CriterionTable& table);

SelectionOutcome select_vfcv(const Dataset& data, const std::vector<ModelIndex>& models,
                             const FoldAssignment& folds);

SelectionOutcome select_holdout(const Dataset& data, const std::vector<ModelIndex>& models,
                                const HoldoutSplit& split);

// For each realized total dimension D, the row minimizing the empirical
// risk among models of that dimension; ties by smaller |d1-d2|, then
// smaller d1. Keyed by D, values are row indices into the table.
std::map<int, int> best_per_dimension_rows(const CriterionTable& table);

std::map<int, ModelIndex> best_per_dimension(const Dataset& data,
                                             const std::vector<ModelIndex>& models);

// One vertex of the selection path K -> argmin { emp_risk + K * pen_shape }.
// Vertices are ordered from K = +inf (smallest shape) toward K = 0; the
// half-open intervals [k_lo, k_hi) partition [0, inf). At a breakpoint two
// vertices tie; each vertex is the unique minimizer on the interval's
// interior.
struct PathVertex {
  int row = -1;
  double pen_shape = 0.0;
  double emp_risk = 0.0;
  double k_lo = 0.0;
  double k_hi = 0.0;
};

struct PathResult {
  std::vector<PathVertex> vertices;
};

// Exact breakpoint path over multipliers K >= 0, via the lower-left convex
// hull of the points (pen_shape, emp_risk).
PathResult penalty_path(const CriterionTable& table, std::span<const double> pen_shape);

// Among the per-dimension empirical minimizers, the one with the smallest
// exact excess loss (requires losses in the table).
SelectionOutcome ideal_dim(const CriterionTable& table);

// Among the path vertices of pen_shape, the one with the smallest exact
// excess loss; equivalent to optimizing the multiplier K >= 0.
SelectionOutcome ideal_pen(const CriterionTable& table, std::span<const double> pen_shape);

// Bundle of the scenario-aware reference procedures: "IdDim", "IdLin", and
// "IdPen:<name>" for every supplied penalty shape.
std::map<std::string, SelectionOutcome> ideal_procedures(
    const Dataset& data, const std::vector<ModelIndex>& models,
    const RegressionScenario& scenario,
    const std::map<std::string, std::vector<double>>& pen_shapes);

}  // namespace penlab
