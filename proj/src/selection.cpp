#include "penlab/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace penlab {

int min_bin_count(const Dataset& data, const Partition& partition) {
  std::vector<int> count(partition.bins(), 0);
  for (int i = 0; i < data.n(); ++i) count[bin_index(partition, data.x[i])] += 1;
  return *std::min_element(count.begin(), count.end());
}

std::vector<ModelIndex> admissible_models(const Dataset& data,
                                          const std::vector<ModelIndex>& models) {
  std::vector<ModelIndex> kept;
  kept.reserve(models.size());
  for (const ModelIndex& m : models) {
    if (min_bin_count(data, build_partition(m)) >= 2) kept.push_back(m);
  }
  if (kept.empty()) {
    throw std::runtime_error("all models filtered: sample too small for the collection");
  }
  return kept;
}

namespace {

// index of the best row by (value, model order); flags exact-value ties
int argmin_rows(const CriterionTable& table, const std::vector<double>& value,
                bool* tie_broken) {
  int best = 0;
  bool tie = false;
  for (int i = 1; i < static_cast<int>(value.size()); ++i) {
    if (value[i] < value[best]) {
      best = i;
      tie = false;
    } else if (value[i] == value[best]) {
      tie = true;
      if (model_less(table.rows[i].model, table.rows[best].model)) best = i;
    }
  }
  if (tie_broken != nullptr) *tie_broken = tie;
  return best;
}

SelectionOutcome outcome_for(const CriterionTable& table, int row, double criterion,
                             bool tie_broken) {
  SelectionOutcome out;
  out.model = table.rows[row].model;
  out.row = row;
  out.criterion = criterion;
  out.excess_loss = table.rows[row].excess_loss;
  out.tie_broken = tie_broken;
  return out;
}

}  // namespace

SelectionOutcome select_penalized(const CriterionTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("empty criterion table");
  std::vector<double> crit(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) crit[i] = table.rows[i].criterion;
  bool tie = false;
  const int best = argmin_rows(table, crit, &tie);
  return outcome_for(table, best, crit[best], tie);
}

SelectionOutcome select_vfcv(const Dataset& data, const std::vector<ModelIndex>& models,
                             const FoldAssignment& folds) {
  if (models.empty()) throw std::invalid_argument("no candidate models");
  CriterionTable table;
  table.rows.resize(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    table.rows[i].model = models[i];
    table.rows[i].emp_risk = vfcv_criterion(data, build_partition(models[i]), folds);
    table.rows[i].criterion = table.rows[i].emp_risk;
  }
  return select_penalized(table);
}

SelectionOutcome select_holdout(const Dataset& data, const std::vector<ModelIndex>& models,
                                const HoldoutSplit& split) {
  if (models.empty()) throw std::invalid_argument("no candidate models");
  CriterionTable table;
  table.rows.resize(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    table.rows[i].model = models[i];
    table.rows[i].emp_risk = holdout_criterion(data, build_partition(models[i]), split);
    table.rows[i].criterion = table.rows[i].emp_risk;
  }
  return select_penalized(table);
}

std::map<int, int> best_per_dimension_rows(const CriterionTable& table) {
  std::map<int, int> best;
  for (int i = 0; i < static_cast<int>(table.rows.size()); ++i) {
    const CriterionRow& row = table.rows[i];
    const auto [it, inserted] = best.try_emplace(row.model.dim(), i);
    if (inserted) continue;
    const CriterionRow& cur = table.rows[it->second];
    const auto key = [](const CriterionRow& r) {
      const int spread = r.model.kind == ModelKind::Constant
                             ? 0
                             : std::abs(r.model.d1 - r.model.d2);
      const int d1 = r.model.kind == ModelKind::Constant ? 0 : r.model.d1;
      return std::make_tuple(r.emp_risk, spread, d1);
    };
    if (key(row) < key(cur) ||
        (key(row) == key(cur) && model_less(row.model, cur.model))) {
      it->second = i;
    }
  }
  return best;
}

std::map<int, ModelIndex> best_per_dimension(const Dataset& data,
                                             const std::vector<ModelIndex>& models) {
  CriterionTable table;
  table.rows.resize(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    table.rows[i].model = models[i];
    const FittedHistogram f = fit(data, build_partition(models[i]));
    table.rows[i].emp_risk = training_risk(f);
  }
  std::map<int, ModelIndex> out;
  for (const auto& [dim, row] : best_per_dimension_rows(table)) {
    out.emplace(dim, table.rows[row].model);
  }
  return out;
}

PathResult penalty_path(const CriterionTable& table, std::span<const double> pen_shape) {
  const std::size_t m = table.rows.size();
  if (m == 0) throw std::invalid_argument("empty criterion table");
  if (pen_shape.size() != m) throw std::invalid_argument("shape size mismatch");
  for (double g : pen_shape) {
    if (!std::isfinite(g)) throw std::invalid_argument("penalty shape must be finite");
  }

  // sort candidates by (shape, risk, model order)
  std::vector<int> idx(m);
  for (std::size_t i = 0; i < m; ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (pen_shape[a] != pen_shape[b]) return pen_shape[a] < pen_shape[b];
    if (table.rows[a].emp_risk != table.rows[b].emp_risk) {
      return table.rows[a].emp_risk < table.rows[b].emp_risk;
    }
    return model_less(table.rows[a].model, table.rows[b].model);
  });

  // keep the strictly-improving risk front: equal shapes keep the first
  // (preferred) entry; larger shapes must strictly lower the risk to ever win
  std::vector<int> front;
  for (int i : idx) {
    if (!front.empty() && pen_shape[i] == pen_shape[front.back()]) continue;
    if (!front.empty() && table.rows[i].emp_risk >= table.rows[front.back()].emp_risk) continue;
    front.push_back(i);
  }

  // lower-left convex hull: breakpoints must increase toward smaller shapes
  std::vector<int> hull;
  for (int i : front) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      // pop b when the a-b breakpoint is not strictly above the b-i one
      const double lhs = (table.rows[b].emp_risk - table.rows[i].emp_risk) *
                         (pen_shape[b] - pen_shape[a]);
      const double rhs = (table.rows[a].emp_risk - table.rows[b].emp_risk) *
                         (pen_shape[i] - pen_shape[b]);
      if (lhs >= rhs) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }

  PathResult path;
  path.vertices.resize(hull.size());
  for (std::size_t v = 0; v < hull.size(); ++v) {
    PathVertex& vert = path.vertices[v];
    vert.row = hull[v];
    vert.pen_shape = pen_shape[hull[v]];
    vert.emp_risk = table.rows[hull[v]].emp_risk;
  }
  for (std::size_t v = 0; v + 1 < hull.size(); ++v) {
    const double k = (path.vertices[v].emp_risk - path.vertices[v + 1].emp_risk) /
                     (path.vertices[v + 1].pen_shape - path.vertices[v].pen_shape);
    path.vertices[v].k_lo = k;
    path.vertices[v + 1].k_hi = k;
  }
  path.vertices.front().k_hi = std::numeric_limits<double>::infinity();
  path.vertices.back().k_lo = 0.0;
  return path;
}

namespace {

void require_losses(const CriterionTable& table) {
  for (const CriterionRow& row : table.rows) {
    if (!row.has_excess_loss) {
      throw std::invalid_argument("ideal procedures need exact losses in the table");
    }
  }
}

}  // namespace

SelectionOutcome ideal_dim(const CriterionTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("empty criterion table");
  require_losses(table);
  const std::map<int, int> best = best_per_dimension_rows(table);
  int chosen = -1;
  bool tie = false;
  for (const auto& [dim, row] : best) {
    if (chosen < 0 || table.rows[row].excess_loss < table.rows[chosen].excess_loss) {
      chosen = row;
      tie = false;
    } else if (table.rows[row].excess_loss == table.rows[chosen].excess_loss) {
      tie = true;
      if (model_less(table.rows[row].model, table.rows[chosen].model)) chosen = row;
    }
  }
  return outcome_for(table, chosen, table.rows[chosen].criterion, tie);
}

SelectionOutcome ideal_pen(const CriterionTable& table, std::span<const double> pen_shape) {
  require_losses(table);
  const PathResult path = penalty_path(table, pen_shape);
  int chosen = -1;
  bool tie = false;
  for (const PathVertex& v : path.vertices) {
    if (chosen < 0 || table.rows[v.row].excess_loss < table.rows[chosen].excess_loss) {
      chosen = v.row;
      tie = false;
    } else if (table.rows[v.row].excess_loss == table.rows[chosen].excess_loss) {
      tie = true;
      if (model_less(table.rows[v.row].model, table.rows[chosen].model)) chosen = v.row;
    }
  }
  return outcome_for(table, chosen, table.rows[chosen].criterion, tie);
}

std::map<std::string, SelectionOutcome> ideal_procedures(
    const Dataset& data, const std::vector<ModelIndex>& models,
    const RegressionScenario& scenario,
    const std::map<std::string, std::vector<double>>& pen_shapes) {
  if (models.empty()) throw std::invalid_argument("no candidate models");

  CriterionTable table;
  table.rows.resize(models.size());
  std::vector<double> dims(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) {
    const Partition part = build_partition(models[i]);
    const FittedHistogram f = fit(data, part);
    table.rows[i].model = models[i];
    table.rows[i].emp_risk = training_risk(f);
    table.rows[i].criterion = table.rows[i].emp_risk;
    table.rows[i].excess_loss = excess_loss(f, scenario);
    table.rows[i].has_excess_loss = true;
    dims[i] = models[i].dim();
  }

  std::map<std::string, SelectionOutcome> out;
  out.emplace("IdDim", ideal_dim(table));
  out.emplace("IdLin", ideal_pen(table, dims));
  for (const auto& [name, shape] : pen_shapes) {
    out.emplace("IdPen:" + name, ideal_pen(table, shape));
  }
  return out;
}

}  // namespace penlab
