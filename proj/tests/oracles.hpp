#pragma once

// Brute-force references used by the unit, property and acceptance tests.
// Nothing here calls into the library's geometry code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tconv/common.hpp"
#include "tconv/spatial.hpp"

namespace oracle {

using tconv::Index;
using tconv::Point;
using tconv::PointCloud;

inline PointCloud random_cloud(std::mt19937_64& rng, Index n, int dim, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(dim, n);
  for (Index i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) m(k, i) = u(rng);
  return PointCloud(std::move(m));
}

// Center in the affine hull equidistant from every column; false when the
// columns are affinely dependent.
inline bool circumcenter(const Eigen::MatrixXd& s, Point& center) {
  const Eigen::Index k = s.cols() - 1;
  if (k == 0) {
    center = s.col(0);
    return true;
  }
  Eigen::MatrixXd a(s.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) a.col(j) = s.col(j + 1) - s.col(0);
  const Eigen::MatrixXd gram = a.transpose() * a;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  lu.setThreshold(1e-12);
  if (lu.rank() < k) return false;
  const Eigen::VectorXd lambda = lu.solve(0.5 * gram.diagonal());
  center = s.col(0) + a * lambda;
  return true;
}

// Smallest enclosing ball radius by trying every support of at most D + 1
// points.
inline double meb_radius(const std::vector<Point>& pts) {
  const int n = static_cast<int>(pts.size());
  const int dim = static_cast<int>(pts.front().size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    const int size = __builtin_popcount(mask);
    if (size > dim + 1) continue;
    Eigen::MatrixXd s(dim, size);
    int c = 0;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) s.col(c++) = pts[i];
    Point center;
    if (!circumcenter(s, center)) continue;
    const double r = (s.col(0) - center).norm();
    bool encloses = true;
    for (const auto& p : pts) encloses = encloses && (p - center).norm() <= r * (1 + 1e-10) + 1e-12;
    if (encloses) best = std::min(best, r);
  }
  return best;
}

inline double meb_radius(const PointCloud& cloud, const std::vector<Index>& idx) {
  std::vector<Point> pts;
  for (Index i : idx) pts.push_back(cloud[i]);
  return meb_radius(pts);
}

inline std::vector<Index> knn(const PointCloud& cloud, Index i, int k) {
  std::vector<std::pair<double, Index>> all;
  for (Index j = 0; j < cloud.size(); ++j)
    if (j != i) all.emplace_back(tconv::squared_distance(cloud.ptr(i), cloud.ptr(j), cloud.dim()), j);
  std::sort(all.begin(), all.end());
  std::vector<Index> out;
  for (int m = 0; m < k; ++m) out.push_back(all[m].second);
  return out;
}

inline std::vector<tconv::Edge> edges_within(const PointCloud& cloud, double h) {
  std::vector<tconv::Edge> out;
  for (Index i = 0; i < cloud.size(); ++i)
    for (Index j = i + 1; j < cloud.size(); ++j) {
      const double half = 0.5 * std::sqrt(tconv::squared_distance(cloud.ptr(i), cloud.ptr(j), cloud.dim()));
      if (half <= h) out.push_back({i, j, half});
    }
  std::sort(out.begin(), out.end());
  return out;
}

inline double dist_to_cloud(const PointCloud& cloud, const Point& x) {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < cloud.size(); ++i) best = std::min(best, (cloud[i] - x).norm());
  return best;
}

// sup over a segment or triangle of d(., cloud), planar clouds only.  The
// maximum of a distance-to-finite-set over a polygon sits at a polygon
// vertex, where a bisector crosses a polygon edge, or at a circumcenter of
// three samples inside the polygon; every candidate is evaluated exactly.
inline double sup_distance_2d(const PointCloud& cloud, const std::vector<Point>& poly) {
  std::vector<Point> candidates(poly.begin(), poly.end());
  const int m = static_cast<int>(poly.size());
  const int edges = m == 2 ? 1 : m;
  for (int e = 0; e < edges; ++e) {
    const Point a = poly[e], b = poly[(e + 1) % m];
    for (Index i = 0; i < cloud.size(); ++i)
      for (Index j = i + 1; j < cloud.size(); ++j) {
        const Point pi = cloud[i], pj = cloud[j];
        // |x - pi|^2 = |x - pj|^2 is linear in x: 2 (pj - pi) . x = |pj|^2 - |pi|^2.
        const Point nrm = 2.0 * (pj - pi);
        const double rhs = pj.squaredNorm() - pi.squaredNorm();
        const double den = nrm.dot(b - a);
        if (std::abs(den) < 1e-300) continue;
        const double s = (rhs - nrm.dot(a)) / den;
        if (s >= 0.0 && s <= 1.0) candidates.push_back(a + s * (b - a));
      }
  }
  if (m == 3) {
    Eigen::Matrix2d t;
    t.col(0) = poly[1] - poly[0];
    t.col(1) = poly[2] - poly[0];
    if (std::abs(t.determinant()) > 1e-14) {
      const Eigen::Matrix2d inv = t.inverse();
      for (Index i = 0; i < cloud.size(); ++i)
        for (Index j = i + 1; j < cloud.size(); ++j)
          for (Index k = j + 1; k < cloud.size(); ++k) {
            Eigen::MatrixXd s(2, 3);
            s << cloud[i], cloud[j], cloud[k];
            Point c;
            if (!circumcenter(s, c)) continue;
            const Eigen::Vector2d bary = inv * (c - poly[0]);
            if (bary.x() >= -1e-12 && bary.y() >= -1e-12 && bary.sum() <= 1 + 1e-12) candidates.push_back(c);
          }
    }
  }
  double best = 0.0;
  for (const auto& c : candidates) best = std::max(best, dist_to_cloud(cloud, c));
  return best;
}

struct Profile {
  std::vector<double> breakpoints;
  std::vector<double> values;

  double at(double t) const {
    double v = 0.0;
    for (std::size_t m = 0; m < breakpoints.size() && breakpoints[m] <= t; ++m) v = values[m];
    return v;
  }
};

// Exhaustive full profile of a planar cloud: every subset, radius by the
// brute-force ball, sup over its hull as the max over its pairs and triples.
inline Profile full_profile_2d(const PointCloud& cloud) {
  const int n = static_cast<int>(cloud.size());
  std::vector<double> pair_sup(n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pair_sup[i * n + j] = sup_distance_2d(cloud, {cloud[i], cloud[j]});
  std::vector<double> tri_sup(n * n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) tri_sup[(i * n + j) * n + k] = sup_distance_2d(cloud, {cloud[i], cloud[j], cloud[k]});
  std::vector<std::pair<double, double>> entries;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) < 2) continue;
    std::vector<int> v;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) v.push_back(i);
    std::vector<Index> idx(v.begin(), v.end());
    double sup = 0.0;
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = a + 1; b < v.size(); ++b) {
        sup = std::max(sup, pair_sup[v[a] * n + v[b]]);
        for (std::size_t c = b + 1; c < v.size(); ++c) sup = std::max(sup, tri_sup[(v[a] * n + v[b]) * n + v[c]]);
      }
    entries.emplace_back(meb_radius(cloud, idx), sup);
  }
  std::sort(entries.begin(), entries.end());
  Profile p;
  double running = 0.0;
  for (std::size_t e = 0; e < entries.size(); ++e) {
    running = std::max(running, entries[e].second);
    if (e + 1 == entries.size() || entries[e + 1].first > entries[e].first * (1 + 1e-12)) {
      p.breakpoints.push_back(entries[e].first);
      p.values.push_back(running);
    }
  }
  return p;
}

// sup over a segment of d(., cloud) in any dimension: the distance to each
// sample is a hyperbola in the segment parameter, so the lower envelope's
// maxima sit at pairwise crossings or at the endpoints.
inline double sup_distance_segment(const PointCloud& cloud, const Point& a, const Point& b) {
  std::vector<double> params = {0.0, 1.0};
  const Point dir = b - a;
  for (Index i = 0; i < cloud.size(); ++i)
    for (Index j = i + 1; j < cloud.size(); ++j) {
      const Point nrm = 2.0 * (cloud[j] - cloud[i]);
      const double rhs = cloud[j].squaredNorm() - cloud[i].squaredNorm();
      const double den = nrm.dot(dir);
      if (std::abs(den) < 1e-300) continue;
      const double s = (rhs - nrm.dot(a)) / den;
      if (s > 0.0 && s < 1.0) params.push_back(s);
    }
  double best = 0.0;
  for (double s : params) best = std::max(best, dist_to_cloud(cloud, a + s * dir));
  return best;
}

// Graph profile up to a given horizon, every edge exact.
inline Profile graph_profile(const PointCloud& cloud, double horizon) {
  Profile p;
  double running = 0.0;
  const auto edges = edges_within(cloud, horizon);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    running = std::max(running, std::min(edges[e].half_length,
                                         sup_distance_segment(cloud, cloud[edges[e].i], cloud[edges[e].j])));
    if (edges[e].half_length == 0.0) continue;
    if (e + 1 == edges.size() || edges[e + 1].half_length != edges[e].half_length) {
      p.breakpoints.push_back(edges[e].half_length);
      p.values.push_back(running);
    }
  }
  return p;
}

}  // namespace oracle
