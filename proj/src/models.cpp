#include "penlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <tuple>

namespace penlab {

std::string ModelIndex::label() const {
  if (kind == ModelKind::Constant) return "const";
  std::string out = "(" + std::to_string(d1) + "," + std::to_string(d2) + ")";
  if (split != 0.5) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "@%g", split);
    out += buf;
  }
  return out;
}

bool operator==(const ModelIndex& a, const ModelIndex& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == ModelKind::Constant) return true;
  return a.d1 == b.d1 && a.d2 == b.d2 && a.split == b.split;
}

bool model_less(const ModelIndex& a, const ModelIndex& b) {
  const auto key = [](const ModelIndex& m) {
    const bool constant = m.kind == ModelKind::Constant;
    return std::make_tuple(m.dim(), constant ? 0 : m.d1, constant ? 0 : m.d2,
                           constant ? 0.5 : m.split);
  };
  return key(a) < key(b);
}

Partition build_partition(const ModelIndex& index) {
  Partition p;
  if (index.kind == ModelKind::Constant) {
    p.edges = {0.0, 1.0};
    return p;
  }
  if (index.d1 < 1 || index.d2 < 1) throw std::invalid_argument("bin counts must be >= 1");
  if (!(index.split > 0.0 && index.split < 1.0)) {
    throw std::invalid_argument("split must lie in (0,1)");
  }
  p.edges.reserve(index.d1 + index.d2 + 1);
  for (int i = 0; i < index.d1; ++i) {
    p.edges.push_back(index.split * (static_cast<double>(i) / index.d1));
  }
  for (int j = 0; j < index.d2; ++j) {
    p.edges.push_back(index.split +
                      (1.0 - index.split) * (static_cast<double>(j) / index.d2));
  }
  p.edges.push_back(1.0);
  return p;
}

int bin_index(const Partition& partition, double x) {
  if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("x outside [0,1)");
  const auto it = std::upper_bound(partition.edges.begin(), partition.edges.end(), x);
  return static_cast<int>(it - partition.edges.begin()) - 1;
}

int CollectionSpec::max_dim(int n) const {
  if (n < 2) throw std::invalid_argument("need n >= 2");
  int m = 0;
  switch (rule) {
    case MaxDimRule::LogN:
      m = static_cast<int>(std::floor(n / std::log(n)));
      break;
    case MaxDimRule::LogSqN:
      m = static_cast<int>(std::floor(n / (std::log(n) * std::log(n))));
      break;
    case MaxDimRule::Explicit:
      m = explicit_max;
      break;
  }
  return std::min(m, n);
}

std::string CollectionSpec::label() const {
  std::string fam;
  switch (family) {
    case Family::Regular:
      fam = "reg";
      break;
    case Family::TwoRegimeHalf:
      fam = "reg-half";
      break;
    case Family::TwoRegimeAt: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "reg-t=%g", split);
      fam = buf;
      break;
    }
    case Family::TwoRegimeVariable:
      fam = "reg-var";
      break;
  }
  switch (rule) {
    case MaxDimRule::LogN:
      return fam + "/log";
    case MaxDimRule::LogSqN:
      return fam + "/log2";
    case MaxDimRule::Explicit:
      return fam + "/" + std::to_string(explicit_max);
  }
  return fam;
}

std::vector<ModelIndex> enumerate_models(const CollectionSpec& spec, int n) {
  const int max_dim = spec.max_dim(n);
  if (max_dim < 2) throw std::invalid_argument("empty collection: max dimension < 2");

  std::vector<ModelIndex> out;
  out.push_back(ModelIndex::constant());

  const auto add_two_regime = [&](double split) {
    const int side_max = max_dim / 2;
    for (int d1 = 1; d1 <= side_max; ++d1) {
      for (int d2 = 1; d2 <= side_max; ++d2) {
        out.push_back(ModelIndex::two_regime(d1, d2, split));
      }
    }
  };

  switch (spec.family) {
    case CollectionSpec::Family::Regular:
      for (int d = 2; d <= max_dim; ++d) {
        out.push_back(ModelIndex::two_regime(1, d - 1, 1.0 / d));
      }
      break;
    case CollectionSpec::Family::TwoRegimeHalf:
      add_two_regime(0.5);
      break;
    case CollectionSpec::Family::TwoRegimeAt:
      if (!(spec.split > 0.0 && spec.split < 1.0)) {
        throw std::invalid_argument("split must lie in (0,1)");
      }
      add_two_regime(spec.split);
      break;
    case CollectionSpec::Family::TwoRegimeVariable: {
      const int k_max = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))) - 1;
      for (int k = 1; k <= k_max; ++k) {
        const double t = k / std::sqrt(static_cast<double>(n));
        if (t <= 0.0 || t >= 1.0) continue;
        add_two_regime(t);
      }
      break;
    }
  }
  return out;
}

}  // namespace penlab
