#include "superdensity/chart.hpp"

#include <cmath>

namespace superdensity {

double SurfaceChart::fd_step() const {
  double diam = 0.0;
  for (int a = 0; a < k; ++a) diam = std::max(diam, g.side(a));
  return 1e-5 * (diam > 0.0 ? diam : 1.0);
}

Matrix SurfaceChart::jac(const Point& y) const {
  if (jacobian) return jacobian(y);
  const double h = fd_step();
  Matrix m(n, k);
  for (int j = 0; j < k; ++j) {
    Point yp = y, ym = y;
    yp[j] += h;
    ym[j] -= h;
    const Point fp = phi(yp), fm = phi(ym);
    for (int i = 0; i < n; ++i) m(i, j) = (fp[i] - fm[i]) / (2.0 * h);
  }
  return m;
}

double jacobian_factor(const SurfaceChart& chart, const Point& y) {
  const Matrix d = chart.jac(y);
  const Matrix g = d.transpose() * d;
  double det = 0.0;
  switch (chart.k) {
    case 1: det = g(0, 0); break;
    case 2: det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0); break;
    case 3:
      det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1)) - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0)) +
            g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
      break;
    default: throw InvalidArgument("charts support parameter dimension 1..3");
  }
  if (!(det > 0.0)) throw InvalidArgument("chart '" + chart.name + "' has degenerate Jacobian");
  return std::sqrt(det);
}

}  // namespace superdensity
