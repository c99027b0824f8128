#pragma once

#include <span>
#include <string>
#include <vector>

#include "tconv/common.hpp"
#include "tconv/spatial.hpp"

namespace tconv {

enum class ProfileKind { full, graph };

std::string to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& s);

/// Piecewise-constant convexity defect: values[m] holds on
/// [breakpoints[m], breakpoints[m+1]).  The function is 0 below the first
/// breakpoint and undefined above `horizon`.
struct DefectProfile {
  ProfileKind kind = ProfileKind::graph;
  double horizon = 0.0;
  std::vector<double> breakpoints;
  std::vector<double> values;

  bool empty() const { return breakpoints.empty(); }
};

/// Edge-based defect using the K-nearest-neighbor horizon.  Per-edge defects
/// are exact: the supremum over the segment of the distance to the cloud.
DefectProfile graph_defect_profile(const PointCloud& cloud, const NeighborIndex& index, int k,
                                   int threads = 1);

/// Defect over every subset of the cloud.  Exponential; refuses n > 15.
/// Values are certified upper bounds within `tol.full_defect_accuracy`.
DefectProfile full_defect_profile(const PointCloud& cloud, const Tolerances& tol = kTolerances);

/// Largest-breakpoint-below-t lookup.
double eval_defect(const DefectProfile& profile, double t);

struct TLambda {
  double t = 0.0;
  bool saturated = false;  // no breakpoint qualified; t is the horizon
};

/// First breakpoint t with h(t) <= lambda * t, for lambda in (0, 1].
TLambda t_lambda(const DefectProfile& profile, double lambda);

/// sup over the segment [a, b] of the distance to the nearest candidate.
/// The candidates must contain a and b's nearest samples for the result to be
/// the distance to a larger set; the value is clamped to half the length.
double segment_defect(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                      const PointCloud& cloud, std::span<const Index> candidates);

/// Exact d_H(Conv({X_i, X_j}) | X) for one edge of an indexed cloud.
double edge_defect(const NeighborIndex& index, Index i, Index j);

struct SupBound {
  double lower = 0.0;  // attained by some hull point
  double upper = 0.0;  // certified
};

/// Bounds on sup over Conv(vertices) of d(x, cloud) by branch and bound,
/// stopping once upper - lower <= accuracy or upper <= stop_below.
SupBound hull_sup_distance(const PointCloud& cloud, std::span<const Index> vertices, double accuracy,
                           double stop_below = -1.0);

}  // namespace tconv
