#include "tconv/defect.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <queue>

#include "tconv/geom.hpp"
#include "tconv/parallel.hpp"

namespace tconv {

std::string to_string(ProfileKind kind) { return kind == ProfileKind::full ? "full" : "graph"; }

ProfileKind profile_kind_from_string(const std::string& s) {
  if (s == "full") return ProfileKind::full;
  if (s == "graph") return ProfileKind::graph;
  throw ArgumentError("unknown profile kind: " + s);
}

// ---------------------------------------------------------------------------
// Per-edge defect
// ---------------------------------------------------------------------------

double segment_defect(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                      const PointCloud& cloud, std::span<const Index> candidates) {
  if (candidates.empty()) throw ArgumentError("segment_defect: no candidates");
  const int dim = cloud.dim();
  const double length = std::sqrt(squared_distance(a.data(), b.data(), dim));
  if (length == 0.0) return 0.0;
  const Eigen::VectorXd u = (b - a) / length;

  // |a + s u - z|^2 = s^2 + (c_z - 2 w_z s) for s in [0, length].
  struct Line {
    double w, c;
  };
  std::vector<Line> lines;
  lines.reserve(candidates.size());
  for (Index z : candidates) {
    const auto zc = cloud[z];
    lines.push_back({u.dot(zc - a), squared_distance(zc.data(), a.data(), dim)});
  }
  std::sort(lines.begin(), lines.end(), [](const Line& x, const Line& y) {
    return x.w < y.w || (x.w == y.w && x.c < y.c);
  });

  // Lower envelope of c - 2 w s, slopes decreasing left to right.
  std::vector<Line> hull;
  hull.reserve(lines.size());
  for (const Line& l : lines) {
    if (!hull.empty() && hull.back().w == l.w) continue;  // same slope, larger intercept
    while (hull.size() >= 2) {
      const Line& l1 = hull[hull.size() - 2];
      const Line& l2 = hull.back();
      // l2 is redundant when l1 and l3 cross no later than l1 and l2.
      const double lhs = (l.c - l1.c) * (l2.w - l1.w);
      const double rhs = (l2.c - l1.c) * (l.w - l1.w);
      if (lhs <= rhs)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(l);
  }

  auto envelope_at = [&](double s) {
    double best = std::numeric_limits<double>::infinity();
    for (const Line& l : hull) best = std::min(best, l.c - 2.0 * l.w * s);
    return s * s + best;
  };
  double worst = std::max(envelope_at(0.0), envelope_at(length));
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    const Line& l1 = hull[k];
    const Line& l2 = hull[k + 1];
    const double s = (l2.c - l1.c) / (2.0 * (l2.w - l1.w));
    if (!(s > 0.0 && s < length)) continue;
    const double v = s * s + std::min(l1.c - 2.0 * l1.w * s, l2.c - 2.0 * l2.w * s);
    worst = std::max(worst, v);
  }
  return std::min(std::sqrt(std::max(0.0, worst)), 0.5 * length);
}

namespace {

// Exact defect given an upper bound on it: every sample that is nearest to
// some segment point lies within half_length + upper of the midpoint.
double exact_edge_defect(const NeighborIndex& index, Index i, Index j, double upper) {
  const PointCloud& cloud = index.cloud();
  const Eigen::VectorXd mid = 0.5 * (cloud[i] + cloud[j]);
  const double half = 0.5 * std::sqrt(squared_distance(cloud.ptr(i), cloud.ptr(j), cloud.dim()));
  const double radius = (half + std::min(upper, half)) * (1.0 + 1e-9) + 1e-300;
  std::vector<Index> cand{i, j};
  for (const auto& nb : index.radius_query(mid.data(), radius)) cand.push_back(nb.index);
  return segment_defect(cloud[i], cloud[j], cloud, cand);
}

}  // namespace

double edge_defect(const NeighborIndex& index, Index i, Index j) {
  const PointCloud& cloud = index.cloud();
  if (i < 0 || j < 0 || i >= cloud.size() || j >= cloud.size()) throw ArgumentError("edge_defect: bad index");
  const Index pair[2] = {i, j};
  const double upper = segment_defect(cloud[i], cloud[j], cloud, pair);
  return exact_edge_defect(index, i, j, upper);
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

DefectProfile graph_defect_profile(const PointCloud& cloud, const NeighborIndex& index, int k, int threads) {
  const Index n = cloud.size();
  if (&index.cloud() != &cloud) throw ArgumentError("graph_defect_profile: index built on another cloud");
  if (k <= 0 || k >= n) throw ArgumentError("graph_defect_profile: K must satisfy 1 <= K <= n - 1");

  const KnnTable table = index.knn_table(k, threads);
  double worst = 0.0;
  for (Index i = 0; i < n; ++i) worst = std::max(worst, table.kth_dist2(i));

  DefectProfile profile;
  profile.kind = ProfileKind::graph;
  profile.horizon = 0.5 * std::sqrt(worst);
  const std::vector<Edge> edges = index.edges_within(profile.horizon);

  // Cheap upper bounds from a few neighbors of each endpoint.
  const int few = std::min(k, 16);
  std::vector<double> upper(edges.size());
  parallel_for(static_cast<Index>(edges.size()), threads, [&](Index begin, Index end) {
    std::vector<Index> cand;
    for (Index e = begin; e < end; ++e) {
      const Edge& edge = edges[static_cast<std::size_t>(e)];
      if (edge.degenerate()) continue;
      cand.assign({edge.i, edge.j});
      const auto ri = table.row(edge.i);
      const auto rj = table.row(edge.j);
      cand.insert(cand.end(), ri.begin(), ri.begin() + few);
      cand.insert(cand.end(), rj.begin(), rj.begin() + few);
      upper[static_cast<std::size_t>(e)] = segment_defect(cloud[edge.i], cloud[edge.j], cloud, cand);
    }
  });

  // Ascending scan; an edge whose bound cannot raise the running max is skipped.
  double running = 0.0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    if (edge.degenerate()) continue;
    if (upper[e] > running) running = std::max(running, exact_edge_defect(index, edge.i, edge.j, upper[e]));
    const bool last_of_group = e + 1 == edges.size() || edges[e + 1].half_length != edge.half_length;
    if (last_of_group) {
      profile.breakpoints.push_back(edge.half_length);
      profile.values.push_back(running);
    }
  }
  return profile;
}

SupBound hull_sup_distance(const PointCloud& cloud, std::span<const Index> vertices, double accuracy,
                           double stop_below) {
  if (vertices.empty()) throw ArgumentError("hull_sup_distance: empty simplex");
  if (!(accuracy > 0.0)) throw ArgumentError("hull_sup_distance: accuracy must be positive");
  const int dim = cloud.dim();
  const Index n = cloud.size();

  auto nearest = [&](const Eigen::VectorXd& x) {
    Neighbor best{-1, std::numeric_limits<double>::infinity()};
    for (Index j = 0; j < n; ++j) {
      const Neighbor cand{j, squared_distance(x.data(), cloud.ptr(j), dim)};
      if (cand < best) best = cand;
    }
    return best;
  };

  struct Cell {
    Eigen::MatrixXd v;
    double upper;
  };
  auto cmp = [](const Cell& a, const Cell& b) { return a.upper < b.upper; };
  std::priority_queue<Cell, std::vector<Cell>, decltype(cmp)> queue(cmp);

  double lower = 0.0;
  // Every point of a simplex is within max_w |w - z| of the sample z.
  auto make_cell = [&](Eigen::MatrixXd v) {
    const Eigen::VectorXd centroid = v.rowwise().mean();
    std::vector<Index> sites;
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      const Neighbor nb = nearest(v.col(c));
      lower = std::max(lower, std::sqrt(nb.dist2));
      sites.push_back(nb.index);
    }
    const Neighbor nc = nearest(centroid);
    lower = std::max(lower, std::sqrt(nc.dist2));
    sites.push_back(nc.index);
    double upper = std::numeric_limits<double>::infinity();
    for (Index z : sites) {
      double far = 0.0;
      for (Eigen::Index c = 0; c < v.cols(); ++c) far = std::max(far, squared_distance(v.col(c).data(), cloud.ptr(z), dim));
      upper = std::min(upper, std::sqrt(far));
    }
    queue.push(Cell{std::move(v), upper});
  };

  Eigen::MatrixXd root(dim, static_cast<Eigen::Index>(vertices.size()));
  for (std::size_t c = 0; c < vertices.size(); ++c) root.col(static_cast<Eigen::Index>(c)) = cloud[vertices[c]];
  make_cell(std::move(root));

  constexpr int kMaxCells = 2000000;
  for (int iter = 0; iter < kMaxCells; ++iter) {
    const double top = queue.top().upper;
    if (top <= lower + accuracy || top <= stop_below) return {lower, std::max(top, lower)};
    Cell cell = queue.top();
    queue.pop();
    Eigen::Index p = 0, q = 0;
    double longest = -1.0;
    for (Eigen::Index a = 0; a < cell.v.cols(); ++a)
      for (Eigen::Index b = a + 1; b < cell.v.cols(); ++b) {
        const double d2 = squared_distance(cell.v.col(a).data(), cell.v.col(b).data(), dim);
        if (d2 > longest) {
          longest = d2;
          p = a;
          q = b;
        }
      }
    if (longest <= 0.0) return {lower, std::max(cell.upper, lower)};
    const Eigen::VectorXd mid = 0.5 * (cell.v.col(p) + cell.v.col(q));
    Eigen::MatrixXd left = cell.v, right = std::move(cell.v);
    left.col(p) = mid;
    right.col(q) = mid;
    make_cell(std::move(left));
    make_cell(std::move(right));
  }
  return {lower, std::max(queue.top().upper, lower)};
}

DefectProfile full_defect_profile(const PointCloud& cloud, const Tolerances& tol) {
  const Index n = cloud.size();
  if (n > 15) throw ResourceGuardError("full_defect_profile: refusing n > 15 (exponential enumeration)");
  DefectProfile profile;
  profile.kind = ProfileKind::full;
  profile.horizon = std::numeric_limits<double>::infinity();
  if (n < 2) return profile;

  struct Subset {
    double radius;
    std::uint32_t mask;
  };
  std::vector<Subset> subsets;
  std::vector<Index> idx;
  const std::uint32_t total = std::uint32_t{1} << n;
  for (std::uint32_t mask = 1; mask < total; ++mask) {
    if (std::popcount(mask) < 2) continue;
    idx.clear();
    for (Index b = 0; b < n; ++b)
      if (mask & (std::uint32_t{1} << b)) idx.push_back(b);
    subsets.push_back({enclosing_radius(cloud, idx, tol), mask});
  }
  std::sort(subsets.begin(), subsets.end(), [](const Subset& a, const Subset& b) {
    return a.radius < b.radius || (a.radius == b.radius && a.mask < b.mask);
  });

  // Larger subsets only add hull points already covered by their
  // (D+1)-subsets, which have no larger radius.
  const int max_vertices = cloud.dim() + 1;
  double running = 0.0;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    const Subset& sub = subsets[s];
    // The sup over Conv(sigma) never exceeds r(sigma).
    if (std::popcount(sub.mask) <= max_vertices && sub.radius > running) {
      idx.clear();
      for (Index b = 0; b < n; ++b)
        if (sub.mask & (std::uint32_t{1} << b)) idx.push_back(b);
      const SupBound bound = hull_sup_distance(cloud, idx, tol.full_defect_accuracy, running);
      running = std::max(running, std::min(bound.upper, sub.radius));
    }
    // Subsets sharing a support reach the same radius up to rounding.
    const bool last_of_group = s + 1 == subsets.size() || subsets[s + 1].radius > sub.radius * (1 + 1e-12);
    if (last_of_group && sub.radius > 0.0) {
      profile.breakpoints.push_back(sub.radius);
      profile.values.push_back(running);
    }
  }
  return profile;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

double eval_defect(const DefectProfile& profile, double t) {
  if (!(t >= 0.0)) throw ArgumentError("eval_defect: t must be nonnegative");
  if (t > profile.horizon) throw OutOfRangeError("eval_defect: t beyond the computed horizon");
  const auto it = std::upper_bound(profile.breakpoints.begin(), profile.breakpoints.end(), t);
  if (it == profile.breakpoints.begin()) return 0.0;
  return profile.values[static_cast<std::size_t>(it - profile.breakpoints.begin() - 1)];
}

TLambda t_lambda(const DefectProfile& profile, double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ArgumentError("t_lambda: lambda must lie in (0, 1]");
  if (profile.empty()) throw ArgumentError("t_lambda: empty profile");
  for (std::size_t m = 0; m < profile.breakpoints.size(); ++m)
    if (profile.values[m] <= lambda * profile.breakpoints[m]) return {profile.breakpoints[m], false};
  return {profile.horizon, true};
}

}  // namespace tconv
