#pragma once

#include <functional>
#include <vector>

namespace penlab {

// One smooth piece of a function on [lo, hi). `deriv` may be empty when the
// derivative is not needed (it is only required by the bias expansion).
struct SmoothPiece {
  double lo = 0.0;
  double hi = 1.0;
  std::function<double(double)> value;
  std::function<double(double)> deriv;
};

// Piecewise-smooth function tiling [0,1); all kinks and jumps sit on piece
// boundaries so that quadrature can split there.
class PiecewiseFunction {
 public:
  PiecewiseFunction() = default;
  explicit PiecewiseFunction(std::vector<SmoothPiece> pieces);

  double operator()(double x) const;
  double derivative(double x) const;
  bool has_derivatives() const;

  const std::vector<SmoothPiece>& pieces() const { return pieces_; }
  std::vector<double> breakpoints() const;

 private:
  int piece_of(double x) const;
  std::vector<SmoothPiece> pieces_;
};

// Piecewise-constant nonnegative function on [0,1) given by edges and levels.
struct StepFunction {
  std::vector<double> edges;   // 0 = e0 < e1 < ... < ek = 1
  std::vector<double> levels;  // one level per cell, size k

  double operator()(double x) const;
  double max_level() const;
  void validate() const;
};

}  // namespace penlab
