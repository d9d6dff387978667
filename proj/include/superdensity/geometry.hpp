#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <vector>

#include "superdensity/error.hpp"

namespace superdensity {

inline constexpr int kMaxDim = 8;

/// Point of R^n with n <= kMaxDim, stored inline.
class Point {
 public:
  Point() = default;
  explicit Point(int dim) : dim_(dim) {
    if (dim < 0 || dim > kMaxDim) throw InvalidArgument("point dimension out of range");
  }
  Point(std::initializer_list<double> values) : dim_(static_cast<int>(values.size())) {
    if (dim_ > kMaxDim) throw InvalidArgument("point dimension out of range");
    std::copy(values.begin(), values.end(), c_.begin());
  }
  explicit Point(std::span<const double> values) : Point(static_cast<int>(values.size())) {
    std::copy(values.begin(), values.end(), c_.begin());
  }
  static Point filled(int dim, double v) {
    Point p(dim);
    std::fill_n(p.c_.begin(), dim, v);
    return p;
  }

  int dim() const { return dim_; }
  double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  const double* data() const { return c_.data(); }
  double* data() { return c_.data(); }
  std::span<const double> coords() const { return {c_.data(), static_cast<std::size_t>(dim_)}; }

  Point& operator+=(const Point& o) {
    for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Point& operator-=(const Point& o) {
    for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Point& operator*=(double s) {
    for (int i = 0; i < dim_; ++i) c_[i] *= s;
    return *this;
  }
  friend Point operator+(Point a, const Point& b) { return a += b; }
  friend Point operator-(Point a, const Point& b) { return a -= b; }
  friend Point operator*(Point a, double s) { return a *= s; }
  friend Point operator*(double s, Point a) { return a *= s; }
  friend bool operator==(const Point& a, const Point& b) {
    if (a.dim_ != b.dim_) return false;
    for (int i = 0; i < a.dim_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }
  /// Lexicographic order on coordinates.
  friend bool lex_less(const Point& a, const Point& b) {
    for (int i = 0; i < a.dim_; ++i) {
      if (a.c_[i] < b.c_[i]) return true;
      if (b.c_[i] < a.c_[i]) return false;
    }
    return false;
  }

 private:
  std::array<double, kMaxDim> c_{};
  int dim_ = 0;
};

inline void require_dim(const Point& p, int dim) {
  if (p.dim() != dim) throw DimensionMismatch(dim, p.dim());
}

inline double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(const Point& a) { return dot(a, a); }
inline double norm(const Point& a) { return std::sqrt(norm2(a)); }
inline double dist2(const Point& a, const Point& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}
inline double dist(const Point& a, const Point& b) { return std::sqrt(dist2(a, b)); }

/// Axis-aligned box [lo, hi]; openness is decided by the caller.
struct Box {
  Point lo;
  Point hi;

  int dim() const { return lo.dim(); }
  double side(int i) const { return hi[i] - lo[i]; }
  double volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= side(i);
    return v;
  }
  Point center() const {
    Point c(dim());
    for (int i = 0; i < dim(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
  }
  double half_diagonal() const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += 0.25 * side(i) * side(i);
    return std::sqrt(s);
  }
  double max_side() const {
    double m = 0.0;
    for (int i = 0; i < dim(); ++i) m = std::max(m, side(i));
    return m;
  }
  double min_side() const {
    double m = side(0);
    for (int i = 1; i < dim(); ++i) m = std::min(m, side(i));
    return m;
  }
  bool contains_closed(const Point& x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  static Box around(const Point& c, double r) {
    Box b{c, c};
    for (int i = 0; i < c.dim(); ++i) {
      b.lo[i] -= r;
      b.hi[i] += r;
    }
    return b;
  }
};

/// Squared distance from x to the closed box; zero inside.
inline double box_dist2(const Box& b, const Point& x) {
  double s = 0.0;
  for (int i = 0; i < b.dim(); ++i) {
    const double d = std::max({0.0, b.lo[i] - x[i], x[i] - b.hi[i]});
    s += d * d;
  }
  return s;
}
/// Squared distance from x to the farthest corner of the box.
inline double box_far2(const Box& b, const Point& x) {
  double s = 0.0;
  for (int i = 0; i < b.dim(); ++i) {
    const double d = std::max(std::abs(x[i] - b.lo[i]), std::abs(b.hi[i] - x[i]));
    s += d * d;
  }
  return s;
}

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Dense row-major matrix with at most kMaxDim rows and columns.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0 || rows > kMaxDim || cols > kMaxDim)
      throw InvalidArgument("matrix size out of range");
  }
  Matrix(int rows, int cols, std::initializer_list<double> values) : Matrix(rows, cols) {
    if (static_cast<int>(values.size()) != rows * cols) throw InvalidArgument("matrix initializer size");
    std::copy(values.begin(), values.end(), a_.begin());
  }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * cols_ + j)]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * cols_ + j)]; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }
  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw DimensionMismatch(a.cols_, b.rows_);
    Matrix m(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int j = 0; j < b.cols_; ++j) {
        double s = 0.0;
        for (int l = 0; l < a.cols_; ++l) s += a(i, l) * b(l, j);
        m(i, j) = s;
      }
    return m;
  }
  friend Matrix operator-(const Matrix& a, const Matrix& b) {
    Matrix m(a.rows_, a.cols_);
    for (int i = 0; i < a.rows_ * a.cols_; ++i) m.a_[i] = a.a_[i] - b.a_[i];
    return m;
  }
  /// Hilbert-Schmidt (Frobenius) norm.
  double hs_norm() const {
    double s = 0.0;
    for (int i = 0; i < rows_ * cols_; ++i) s += a_[i] * a_[i];
    return std::sqrt(s);
  }
  Point apply(const Point& v) const {
    Point out(rows_);
    for (int i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * v[j];
      out[i] = s;
    }
    return out;
  }

 private:
  std::array<double, kMaxDim * kMaxDim> a_{};
  int rows_ = 0;
  int cols_ = 0;
};

/// Flat storage for many points of the same dimension.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(int dim) : dim_(dim) {}
  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return data_.empty(); }
  void reserve(std::size_t n) { data_.reserve(n * static_cast<std::size_t>(dim_)); }
  void push_back(const Point& p) {
    require_dim(p, dim_);
    data_.insert(data_.end(), p.data(), p.data() + dim_);
  }
  Point operator[](std::size_t i) const {
    return Point(std::span<const double>(data_.data() + i * static_cast<std::size_t>(dim_),
                                         static_cast<std::size_t>(dim_)));
  }
  double coord(std::size_t i, int axis) const { return data_[i * static_cast<std::size_t>(dim_) + axis]; }

 private:
  int dim_ = 0;
  std::vector<double> data_;
};

/// Neumaier compensated accumulator; order-dependent but deterministic.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace superdensity
