#include "penlab/piecewise.hpp"

#include <cmath>
#include <stdexcept>

namespace penlab {

PiecewiseFunction::PiecewiseFunction(std::vector<SmoothPiece> pieces)
    : pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw std::invalid_argument("piecewise function needs pieces");
  if (pieces_.front().lo != 0.0 || pieces_.back().hi != 1.0) {
    throw std::invalid_argument("pieces must cover [0,1)");
  }
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (!(pieces_[i].lo < pieces_[i].hi)) {
      throw std::invalid_argument("piece interval is degenerate");
    }
    if (!pieces_[i].value) throw std::invalid_argument("piece has no value function");
    if (i + 1 < pieces_.size() && pieces_[i].hi != pieces_[i + 1].lo) {
      throw std::invalid_argument("pieces must be contiguous");
    }
  }
}

int PiecewiseFunction::piece_of(double x) const {
  if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("x outside [0,1)");
  int lo = 0, hi = static_cast<int>(pieces_.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (x < pieces_[mid].hi) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

double PiecewiseFunction::operator()(double x) const {
  const SmoothPiece& p = pieces_[piece_of(x)];
  return p.value(x);
}

double PiecewiseFunction::derivative(double x) const {
  const SmoothPiece& p = pieces_[piece_of(x)];
  if (!p.deriv) throw std::logic_error("piece has no derivative");
  return p.deriv(x);
}

bool PiecewiseFunction::has_derivatives() const {
  for (const SmoothPiece& p : pieces_) {
    if (!p.deriv) return false;
  }
  return !pieces_.empty();
}

std::vector<double> PiecewiseFunction::breakpoints() const {
  std::vector<double> breaks;
  breaks.reserve(pieces_.size() + 1);
  for (const SmoothPiece& p : pieces_) breaks.push_back(p.lo);
  breaks.push_back(1.0);
  return breaks;
}

double StepFunction::operator()(double x) const {
  if (!(x >= 0.0 && x < 1.0)) throw std::domain_error("x outside [0,1)");
  int lo = 0, hi = static_cast<int>(levels.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (x < edges[mid + 1]) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return levels[lo];
}

double StepFunction::max_level() const {
  double m = 0.0;
  for (double v : levels) m = std::max(m, v);
  return m;
}

void StepFunction::validate() const {
  if (levels.empty() || edges.size() != levels.size() + 1) {
    throw std::invalid_argument("step function needs one level per cell");
  }
  if (edges.front() != 0.0 || edges.back() != 1.0) {
    throw std::invalid_argument("step function must cover [0,1)");
  }
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i] < edges[i + 1])) throw std::invalid_argument("edges not increasing");
  }
  for (double v : levels) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("noise level must be nonnegative");
    }
  }
}

}  // namespace penlab
