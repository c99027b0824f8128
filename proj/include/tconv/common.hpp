#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tconv {

using Index = std::int64_t;
using Point = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Raised when a call violates an operation's precondition on its arguments.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a profile is evaluated outside the range it was computed on.
class OutOfRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Raised when a projection is requested outside the reach tube.
class AmbiguityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a local fit does not have enough points in its ball.
class InsufficientNeighborsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by brute-force routines whose cost grows exponentially in n.
class ResourceGuardError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

/// Numeric tolerances shared by every module.
struct Tolerances {
  double meb_relative = 1e-9;       // enclosing-ball containment, relative to 1 + r
  double hull_step = 1e-10;         // projected gradient stop on barycentric change
  int hull_max_iterations = 10000;
  double hull_absolute = 1e-8;      // promised accuracy of dist_point_to_hull
  double full_defect_accuracy = 1e-4;
  double projection = 1e-10;        // numeric projections onto a manifold
  double on_manifold = 1e-8;        // tangent_at input check
  double orthonormal = 1e-12;       // Subspace basis check
};

inline constexpr Tolerances kTolerances{};

// ---------------------------------------------------------------------------
// Geometry values
// ---------------------------------------------------------------------------

/// Squared Euclidean distance with a fixed summation order.  Every exact
/// comparison between distances (neighbor ranking, tie-breaks, edge bounds)
/// goes through this routine so that index and brute force agree bit for bit.
inline double squared_distance(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

/// Finite sample of points sharing one ambient dimension, stored column-wise.
class PointCloud {
 public:
  PointCloud() = default;

  /// Takes a D x n matrix; rejects n = 0, D = 0 and non-finite entries.
  explicit PointCloud(Eigen::MatrixXd columns);

  static PointCloud from_points(const std::vector<Point>& points);
  static PointCloud from_rows(const std::vector<std::vector<double>>& rows);

  Index size() const { return static_cast<Index>(data_.cols()); }
  int dim() const { return static_cast<int>(data_.rows()); }
  bool empty() const { return data_.cols() == 0; }

  auto operator[](Index i) const { return data_.col(i); }
  const double* ptr(Index i) const { return data_.col(i).data(); }
  const Eigen::MatrixXd& matrix() const { return data_; }

  std::vector<Point> points() const;
  PointCloud subset(const std::vector<Index>& indices) const;

 private:
  Eigen::MatrixXd data_;
};

struct Ball {
  Point center;
  double radius = 0.0;
};

/// Affine subspace origin + span(basis); basis columns are orthonormal.
class Subspace {
 public:
  Subspace() = default;
  /// Validates orthonormality of `basis` (D x d) within the given tolerance.
  Subspace(Point origin, Eigen::MatrixXd basis, double tol = kTolerances.orthonormal);

  /// Orthonormalizes arbitrary spanning vectors (D x d, full column rank).
  static Subspace from_spanning(Point origin, const Eigen::MatrixXd& vectors);

  const Point& origin() const { return origin_; }
  const Eigen::MatrixXd& basis() const { return basis_; }
  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }

  Eigen::MatrixXd projector() const { return basis_ * basis_.transpose(); }
  /// Norm of the component of v orthogonal to the span.
  double normal_residual(const Eigen::Ref<const Eigen::VectorXd>& v) const;

 private:
  Point origin_;
  Eigen::MatrixXd basis_;
};

}  // namespace tconv
