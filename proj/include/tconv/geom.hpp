#pragma once

#include <span>
#include <vector>

#include "tconv/common.hpp"

namespace tconv {

/// Smallest enclosing ball by the move-to-front support-set recursion.
/// Input order is processed as given (no shuffling), so the result is a pure
/// function of the sequence.  Throws ArgumentError on empty input or mixed
/// dimensions.
Ball min_enclosing_ball(std::span<const Point> points, const Tolerances& tol = kTolerances);

/// Same, for a subset of a cloud given by indices.
Ball min_enclosing_ball(const PointCloud& cloud, std::span<const Index> indices,
                        const Tolerances& tol = kTolerances);

/// Radius only; avoids allocating the center for the 2- and 3-point cases.
double enclosing_radius(const PointCloud& cloud, std::span<const Index> indices,
                        const Tolerances& tol = kTolerances);

/// Smallest ball having every column of `support` on its boundary, centered
/// in their affine hull (the circumball inside the affine span).
Ball circumball(const Eigen::MatrixXd& support);

/// Euclidean distance from p to the convex hull of `vertices`.
/// Exact for one or two vertices; otherwise accelerated projected gradient on
/// barycentric coordinates followed by an exact solve on the detected face.
double dist_point_to_hull(const Point& p, std::span<const Point> vertices,
                          const Tolerances& tol = kTolerances);

/// Matrix form: vertices are the columns of `vertices` (D x k).
double dist_point_to_hull(const Eigen::Ref<const Eigen::VectorXd>& p,
                          const Eigen::Ref<const Eigen::MatrixXd>& vertices,
                          const Tolerances& tol = kTolerances);

/// Distance from p to the segment [a, b].
double dist_point_to_segment(const Eigen::Ref<const Eigen::VectorXd>& p,
                             const Eigen::Ref<const Eigen::VectorXd>& a,
                             const Eigen::Ref<const Eigen::VectorXd>& b);

enum class HausdorffMode { asymmetric, symmetric };

/// Asymmetric mode returns sup_{a in A} d(a, B); symmetric takes the max of
/// both directions.  Exact for finite sets.
double hausdorff(const PointCloud& a, const PointCloud& b,
                 HausdorffMode mode = HausdorffMode::symmetric);

/// Operator norm of the difference of the orthogonal projectors onto the two
/// linear spans (origins are ignored).  Requires equal ambient and intrinsic
/// dimensions.
double subspace_angle(const Subspace& u, const Subspace& v);

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

}  // namespace tconv
