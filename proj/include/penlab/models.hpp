#pragma once

#include <string>
#include <vector>

namespace penlab {

enum class ModelKind { Constant, TwoRegime };

// A histogram model: either the constant model on [0,1), or d1 equal bins on
// [0,split) next to d2 equal bins on [split,1). Regular D-bin histograms are
// the special case TwoRegime(1, D-1, 1/D), whose bins all have width 1/D.
struct ModelIndex {
  ModelKind kind = ModelKind::Constant;
  int d1 = 0;
  int d2 = 0;
  double split = 0.5;

  int dim() const { return kind == ModelKind::Constant ? 1 : d1 + d2; }
  std::string label() const;

  static ModelIndex constant() { return ModelIndex{}; }
  static ModelIndex two_regime(int d1, int d2, double split = 0.5) {
    return ModelIndex{ModelKind::TwoRegime, d1, d2, split};
  }
};

bool operator==(const ModelIndex& a, const ModelIndex& b);

// Deterministic tie order used by every selection rule: smaller total
// dimension first, then smaller d1 (the constant model sorts first).
bool model_less(const ModelIndex& a, const ModelIndex& b);

struct Partition {
  std::vector<double> edges;  // strictly increasing, edges.front()=0, back()=1

  int bins() const { return static_cast<int>(edges.size()) - 1; }
};

Partition build_partition(const ModelIndex& index);

// 0-based bin of x, bins right-open; throws if x is outside [0,1).
int bin_index(const Partition& partition, double x);

struct CollectionSpec {
  enum class Family { Regular, TwoRegimeHalf, TwoRegimeAt, TwoRegimeVariable };
  enum class MaxDimRule { LogN, LogSqN, Explicit };

  Family family = Family::TwoRegimeHalf;
  MaxDimRule rule = MaxDimRule::LogN;
  int explicit_max = 0;
  double split = 0.5;  // TwoRegimeAt only

  int max_dim(int n) const;
  std::string label() const;
};

// All models of the collection for sample size n, duplicate-free and in a
// deterministic order (constant model first).
std::vector<ModelIndex> enumerate_models(const CollectionSpec& spec, int n);

}  // namespace penlab
