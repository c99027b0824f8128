#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tconv/common.hpp"
#include "tconv/spatial.hpp"

namespace tconv {

class Manifold;
struct Estimate;

/// Simplices of one dimension in flat storage: simplex s has vertices
/// flat[s * size .. s * size + size), sorted ascending.  The smallest
/// enclosing ball radius is cached; the center is recomputed on demand with
/// min_enclosing_ball.
class SimplexList {
 public:
  explicit SimplexList(int vertex_count = 1) : size_(vertex_count) {}

  int vertex_count() const { return size_; }
  std::size_t size() const { return radius_.size(); }
  std::span<const Index> vertices(std::size_t s) const {
    return {flat_.data() + s * static_cast<std::size_t>(size_), static_cast<std::size_t>(size_)};
  }
  double radius(std::size_t s) const { return radius_[s]; }

  void push(std::span<const Index> vertices, double radius);

 private:
  int size_;
  std::vector<Index> flat_;
  std::vector<double> radius_;
};

/// Conv_d(t, X): every simplex with at most d_cap + 1 vertices and enclosing
/// radius <= t, grouped by dimension and sorted lexicographically.
class SimplicialComplex {
 public:
  SimplicialComplex() = default;
  SimplicialComplex(double t, int d_cap);

  double scale() const { return t_; }
  int d_cap() const { return d_cap_; }
  int dimension_count() const { return static_cast<int>(lists_.size()); }
  const SimplexList& simplices(int dim) const { return lists_.at(static_cast<std::size_t>(dim)); }
  SimplexList& simplices(int dim) { return lists_.at(static_cast<std::size_t>(dim)); }
  std::size_t total() const;

 private:
  double t_ = 0.0;
  int d_cap_ = 0;
  std::vector<SimplexList> lists_;
};

/// Visits every simplex with 2 .. d_cap + 1 vertices and radius <= t, cliques
/// of the 2t graph enumerated along a degeneracy ordering.  Vertices are
/// passed sorted.  Order of visits is deterministic.
void for_each_cech_simplex(const PointCloud& cloud, const NeighborIndex& index, double t, int d_cap,
                           const std::function<void(std::span<const Index>, double)>& visit);

SimplicialComplex reconstruct(const PointCloud& cloud, double t, int d_cap);

struct RiskOptions {
  int threads = 1;
};

/// d_H(Conv_d(t, X), M) with a certified error bar of `resolution`.
/// Simplices are generated on the fly, so nothing is stored.  When every
/// vertex lies on a closed model, the bound
/// d(y, M) <= tau (1 - sqrt(1 - r^2 / tau^2)) for r < tau skips most simplices.
Estimate reconstruction_risk(const PointCloud& cloud, double t, int d_cap, const Manifold& model,
                             double resolution, const RiskOptions& options = {});

/// Same, for an existing complex.
Estimate reconstruction_risk(const SimplicialComplex& complex, const PointCloud& cloud, const Manifold& model,
                             double resolution);

/// t_n = (7/4) (3 ln n / (alpha_d f_min n))^(1/d).
double oracle_scale(Index n, int d, double f_min);

struct TangentOptions {
  bool refine = false;  // sup-norm reweighting pass
  int refine_iterations = 20;
};

/// d-dimensional tangent estimate at X_i from the points within distance t.
Subspace tangent_estimate(const PointCloud& cloud, const NeighborIndex& index, Index i, double t, int d,
                          const TangentOptions& options = {});

/// max over neighbors within t of |pi_U^perp (X_j - X_i)|.
double tangent_sup_residual(const PointCloud& cloud, const NeighborIndex& index, Index i, double t,
                            const Subspace& u);

}  // namespace tconv
