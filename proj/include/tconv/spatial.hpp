#pragma once

#include <memory>
#include <span>
#include <vector>

#include "tconv/common.hpp"

namespace tconv {

struct Neighbor {
  Index index = -1;
  double dist2 = 0.0;  // squared distance to the query

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
  friend bool operator==(const Neighbor& a, const Neighbor& b) = default;
};

struct Edge {
  Index i = 0;
  Index j = 0;  // i < j
  double half_length = 0.0;

  /// Duplicate points produce zero-length edges; they are kept but flagged.
  bool degenerate() const { return half_length == 0.0; }

  friend bool operator<(const Edge& a, const Edge& b) {
    if (a.half_length != b.half_length) return a.half_length < b.half_length;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  }
  friend bool operator==(const Edge& a, const Edge& b) = default;
};

/// K nearest neighbors of every point, row-major n x k.
struct KnnTable {
  int k = 0;
  std::vector<Index> indices;
  std::vector<double> dist2;

  std::span<const Index> row(Index i) const {
    return {indices.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(k),
            static_cast<std::size_t>(k)};
  }
  double kth_dist2(Index i) const { return dist2[static_cast<std::size_t>((i + 1) * k - 1)]; }
};

enum class IndexBackend {
  automatic,  // grid for D <= 3, vantage-point tree otherwise
  grid,
  vp_tree,
};

/// Exact neighbor queries over an immutable cloud.  The cloud must outlive
/// the index.  Results are identical to a brute-force scan, including the
/// (distance, index) tie-break.  Queries are const and thread-safe.
class NeighborIndex {
 public:
  explicit NeighborIndex(const PointCloud& cloud, IndexBackend backend = IndexBackend::automatic);
  ~NeighborIndex();
  NeighborIndex(NeighborIndex&&) noexcept;
  NeighborIndex& operator=(NeighborIndex&&) noexcept;

  const PointCloud& cloud() const { return *cloud_; }
  IndexBackend backend() const { return backend_; }

  /// K nearest points to X_i excluding i, ascending by (distance, index).
  std::vector<Index> knn(Index i, int k) const;

  /// K nearest to an arbitrary point; `exclude` (if >= 0) is skipped.
  std::vector<Neighbor> knn_query(const double* q, int k, Index exclude = -1) const;

  /// All points with |x - q| <= radius, ascending by (distance, index).
  std::vector<Neighbor> radius_query(const double* q, double radius) const;

  Neighbor nearest(const double* q) const;

  /// All pairs with |X_i - X_j| / 2 <= max_half_length, sorted ascending by
  /// half length then (i, j).
  std::vector<Edge> edges_within(double max_half_length) const;

  /// Half the largest distance from a point to its K-th nearest neighbor.
  double horizon(int k) const;

  /// knn for every point at once; rows are computed in parallel.
  KnnTable knn_table(int k, int threads = 1) const;

  class Backend;

 private:
  const PointCloud* cloud_;
  IndexBackend backend_;
  std::unique_ptr<Backend> impl_;
};

/// Free-function spellings of the neighbor operations.
inline std::vector<Index> knn(const NeighborIndex& index, Index i, int k) { return index.knn(i, k); }
inline std::vector<Edge> edges_within(const NeighborIndex& index, double max_half_length) {
  return index.edges_within(max_half_length);
}
inline double horizon_ellK(const NeighborIndex& index, int k) { return index.horizon(k); }

}  // namespace tconv
