#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "superdensity/geometry.hpp"

namespace superdensity {

/// C^1 parametrization phi: G -> R^n of a k-dimensional surface, with G an
/// open box in R^k.
struct SurfaceChart {
  std::string name;
  int k = 1;
  int n = 2;
  std::function<Point(const Point&)> phi;
  /// n x k Jacobian; when empty, central differences are used.
  std::function<Matrix(const Point&)> jacobian;
  Box g;
  /// Upper bound for the operator norm of D phi on G (used to enclose images of cells).
  double lipschitz = 1.0;
  /// Exact min and max of the Jacobian factor over a parameter box (optional).
  std::function<std::pair<double, double>(const Box&)> jacobian_range;
  std::vector<double> params;

  Point eval(const Point& y) const { return phi(y); }
  Matrix jac(const Point& y) const;
  double fd_step() const;
};

/// sqrt(det(D phi^T D phi)) at y; throws InvalidArgument when not positive.
double jacobian_factor(const SurfaceChart& chart, const Point& y);

}  // namespace superdensity
