#include "tconv/spatial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "tconv/parallel.hpp"

namespace tconv {

namespace {

// Bounded max-heap keeping the k smallest neighbors under (dist2, index).
class KBest {
 public:
  explicit KBest(int k) : k_(static_cast<std::size_t>(k)) {}

  bool full() const { return heap_.size() == k_; }
  double worst_dist2() const {
    return full() ? heap_.top().dist2 : std::numeric_limits<double>::infinity();
  }

  void offer(Index index, double dist2) {
    const Neighbor cand{index, dist2};
    if (!full()) {
      heap_.push(cand);
    } else if (cand < heap_.top()) {
      heap_.pop();
      heap_.push(cand);
    }
  }

  std::vector<Neighbor> sorted() {
    std::vector<Neighbor> out;
    out.reserve(heap_.size());
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t k_;
  std::priority_queue<Neighbor> heap_;
};

constexpr double kPruneSlack = 1e-12;

}  // namespace

class NeighborIndex::Backend {
 public:
  virtual ~Backend() = default;
  virtual void knn(const double* q, KBest& best, Index exclude) const = 0;
  // Every point with squared distance <= r2 (plus possibly a few more).
  virtual void candidates_within(const double* q, double r, std::vector<Index>& out) const = 0;
};

namespace {

// Uniform grid over the bounding box, cells padded to three axes.
class GridBackend final : public NeighborIndex::Backend {
 public:
  explicit GridBackend(const PointCloud& cloud) : cloud_(cloud), dim_(cloud.dim()) {
    const Index n = cloud.size();
    lo_.fill(0.0);
    std::array<double, 3> hi{0.0, 0.0, 0.0};
    for (int a = 0; a < dim_; ++a) {
      lo_[a] = cloud.matrix().row(a).minCoeff();
      hi[a] = cloud.matrix().row(a).maxCoeff();
    }
    double extent = 0.0;
    for (int a = 0; a < dim_; ++a) extent = std::max(extent, hi[a] - lo_[a]);
    const double per_axis = std::max(1.0, std::pow(static_cast<double>(n), 1.0 / dim_));
    cell_ = extent > 0.0 ? extent / per_axis : 1.0;
    for (int a = 0; a < 3; ++a) {
      cells_[a] = a < dim_ ? static_cast<Index>(std::floor((hi[a] - lo_[a]) / cell_)) + 1 : 1;
    }
    const Index total = cells_[0] * cells_[1] * cells_[2];
    start_.assign(static_cast<std::size_t>(total + 1), 0);
    std::vector<Index> cell_of(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      const auto c = cell_coords(cloud.ptr(i));
      cell_of[i] = flat(c[0], c[1], c[2]);
      ++start_[cell_of[i] + 1];
    }
    std::partial_sum(start_.begin(), start_.end(), start_.begin());
    members_.resize(static_cast<std::size_t>(n));
    std::vector<Index> fill(start_.begin(), start_.end() - 1);
    for (Index i = 0; i < n; ++i) members_[fill[cell_of[i]]++] = i;
  }

  void knn(const double* q, KBest& best, Index exclude) const override {
    const auto c = raw_coords(q);
    Index max_ring = 0;
    for (int a = 0; a < 3; ++a) max_ring = std::max({max_ring, std::abs(c[a]), std::abs(cells_[a] - 1 - c[a])});
    for (Index s = 0; s <= max_ring; ++s) {
      visit_ring(c, s, [&](Index cell) {
        for (Index m = start_[cell]; m < start_[cell + 1]; ++m) {
          const Index j = members_[m];
          if (j == exclude) continue;
          best.offer(j, squared_distance(q, cloud_.ptr(j), dim_));
        }
      });
      // Cells beyond ring s are at least s cell widths away from q.
      const double reach = static_cast<double>(s) * cell_ * (1.0 - 1e-9);
      if (best.full() && best.worst_dist2() < reach * reach) break;
    }
  }

  void candidates_within(const double* q, double r, std::vector<Index>& out) const override {
    std::array<Index, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < 3; ++a) {
      if (a < dim_) {
        lo[a] = std::max<Index>(0, static_cast<Index>(std::floor((q[a] - r - lo_[a]) / cell_)) - 1);
        hi[a] = std::min<Index>(cells_[a] - 1, static_cast<Index>(std::floor((q[a] + r - lo_[a]) / cell_)) + 1);
        if (lo[a] > hi[a]) return;
      }
    }
    for (Index x = lo[0]; x <= hi[0]; ++x)
      for (Index y = lo[1]; y <= hi[1]; ++y)
        for (Index z = lo[2]; z <= hi[2]; ++z) {
          const Index cell = flat(x, y, z);
          for (Index m = start_[cell]; m < start_[cell + 1]; ++m) out.push_back(members_[m]);
        }
  }

 private:
  std::array<Index, 3> raw_coords(const double* q) const {
    std::array<Index, 3> c{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      const double v = std::floor((q[a] - lo_[a]) / cell_);
      c[a] = static_cast<Index>(std::clamp(v, -1e12, 1e12));
    }
    return c;
  }

  std::array<Index, 3> cell_coords(const double* q) const {
    auto c = raw_coords(q);
    for (int a = 0; a < 3; ++a) c[a] = std::clamp<Index>(c[a], 0, cells_[a] - 1);
    return c;
  }

  Index flat(Index x, Index y, Index z) const { return (x * cells_[1] + y) * cells_[2] + z; }

  template <class F>
  void visit_ring(const std::array<Index, 3>& c, Index s, F&& f) const {
    const Index x0 = std::max<Index>(0, c[0] - s), x1 = std::min(cells_[0] - 1, c[0] + s);
    const Index y0 = std::max<Index>(0, c[1] - s), y1 = std::min(cells_[1] - 1, c[1] + s);
    for (Index x = x0; x <= x1; ++x) {
      const bool x_edge = std::abs(x - c[0]) == s;
      for (Index y = y0; y <= y1; ++y) {
        const bool edge = x_edge || std::abs(y - c[1]) == s;
        if (edge) {
          const Index z0 = std::max<Index>(0, c[2] - s), z1 = std::min(cells_[2] - 1, c[2] + s);
          for (Index z = z0; z <= z1; ++z) f(flat(x, y, z));
        } else {
          if (c[2] - s >= 0 && c[2] - s < cells_[2]) f(flat(x, y, c[2] - s));
          if (s > 0 && c[2] + s >= 0 && c[2] + s < cells_[2]) f(flat(x, y, c[2] + s));
        }
      }
    }
  }

  const PointCloud& cloud_;
  int dim_;
  std::array<double, 3> lo_{};
  double cell_ = 1.0;
  std::array<Index, 3> cells_{1, 1, 1};
  std::vector<Index> start_;
  std::vector<Index> members_;
};

// Vantage-point tree with small leaf buckets.
class VpTreeBackend final : public NeighborIndex::Backend {
 public:
  explicit VpTreeBackend(const PointCloud& cloud) : cloud_(cloud), dim_(cloud.dim()) {
    order_.resize(static_cast<std::size_t>(cloud.size()));
    std::iota(order_.begin(), order_.end(), Index{0});
    nodes_.reserve(order_.size() / 4 + 1);
    build(0, static_cast<Index>(order_.size()));
  }

  void knn(const double* q, KBest& best, Index exclude) const override {
    search_knn(0, q, best, exclude);
  }

  void candidates_within(const double* q, double r, std::vector<Index>& out) const override {
    search_radius(0, q, r, out);
  }

 private:
  static constexpr Index kLeaf = 8;

  struct Node {
    Index begin = 0, end = 0;  // range in order_; order_[begin] is the vantage point
    double mu = 0.0;
    int inside = -1, outside = -1;
    bool leaf = false;
  };

  double dist(const double* q, Index j) const { return std::sqrt(squared_distance(q, cloud_.ptr(j), dim_)); }

  int build(Index begin, Index end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeaf) {
      nodes_[id].leaf = true;
      return id;
    }
    const double* vp = cloud_.ptr(order_[begin]);
    std::vector<std::pair<double, Index>> keyed;
    keyed.reserve(static_cast<std::size_t>(end - begin - 1));
    for (Index m = begin + 1; m < end; ++m) keyed.emplace_back(dist(vp, order_[m]), order_[m]);
    const auto mid = keyed.begin() + static_cast<std::ptrdiff_t>(keyed.size() / 2);
    std::nth_element(keyed.begin(), mid, keyed.end());
    const double mu = mid->first;
    // Inside: d <= mu; keep a stable deterministic split.
    std::stable_partition(keyed.begin(), keyed.end(), [mu](const auto& e) { return e.first <= mu; });
    Index split = begin + 1;
    for (std::size_t m = 0; m < keyed.size(); ++m) {
      order_[begin + 1 + static_cast<Index>(m)] = keyed[m].second;
      if (keyed[m].first <= mu) split = begin + 2 + static_cast<Index>(m);
    }
    nodes_[id].mu = mu;
    const int in = build(begin + 1, split);
    const int out = split < end ? build(split, end) : -1;
    nodes_[id].inside = in;
    nodes_[id].outside = out;
    return id;
  }

  void search_knn(int id, const double* q, KBest& best, Index exclude) const {
    const Node& node = nodes_[id];
    if (node.leaf) {
      for (Index m = node.begin; m < node.end; ++m) {
        const Index j = order_[m];
        if (j != exclude) best.offer(j, squared_distance(q, cloud_.ptr(j), dim_));
      }
      return;
    }
    const Index vp = order_[node.begin];
    const double d = dist(q, vp);
    if (vp != exclude) best.offer(vp, squared_distance(q, cloud_.ptr(vp), dim_));
    auto tau = [&] { return std::sqrt(best.worst_dist2()) * (1.0 + kPruneSlack) + kPruneSlack; };
    const bool inside_first = d <= node.mu;
    for (int pass = 0; pass < 2; ++pass) {
      const bool inside = (pass == 0) == inside_first;
      if (inside) {
        if (node.inside >= 0 && d - node.mu <= tau()) search_knn(node.inside, q, best, exclude);
      } else {
        if (node.outside >= 0 && node.mu - d <= tau()) search_knn(node.outside, q, best, exclude);
      }
    }
  }

  void search_radius(int id, const double* q, double r, std::vector<Index>& out) const {
    const Node& node = nodes_[id];
    if (node.leaf) {
      for (Index m = node.begin; m < node.end; ++m) out.push_back(order_[m]);
      return;
    }
    const Index vp = order_[node.begin];
    const double d = dist(q, vp);
    out.push_back(vp);
    const double slack = r * (1.0 + kPruneSlack) + kPruneSlack;
    if (node.inside >= 0 && d - node.mu <= slack) search_radius(node.inside, q, r, out);
    if (node.outside >= 0 && node.mu - d <= slack) search_radius(node.outside, q, r, out);
  }

  const PointCloud& cloud_;
  int dim_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
};

}  // namespace

NeighborIndex::NeighborIndex(const PointCloud& cloud, IndexBackend backend) : cloud_(&cloud) {
  if (cloud.empty()) throw ArgumentError("NeighborIndex: empty cloud");
  if (backend == IndexBackend::automatic) backend = cloud.dim() <= 3 ? IndexBackend::grid : IndexBackend::vp_tree;
  if (backend == IndexBackend::grid && cloud.dim() > 3)
    throw ArgumentError("NeighborIndex: grid backend supports at most 3 dimensions");
  backend_ = backend;
  if (backend == IndexBackend::grid)
    impl_ = std::make_unique<GridBackend>(cloud);
  else
    impl_ = std::make_unique<VpTreeBackend>(cloud);
}

NeighborIndex::~NeighborIndex() = default;
NeighborIndex::NeighborIndex(NeighborIndex&&) noexcept = default;
NeighborIndex& NeighborIndex::operator=(NeighborIndex&&) noexcept = default;

std::vector<Neighbor> NeighborIndex::knn_query(const double* q, int k, Index exclude) const {
  if (k <= 0) throw ArgumentError("knn: K must be positive");
  const Index available = cloud_->size() - ((exclude >= 0 && exclude < cloud_->size()) ? 1 : 0);
  if (k > available) throw ArgumentError("knn: K exceeds the number of available points");
  KBest best(k);
  impl_->knn(q, best, exclude);
  return best.sorted();
}

std::vector<Index> NeighborIndex::knn(Index i, int k) const {
  if (i < 0 || i >= cloud_->size()) throw ArgumentError("knn: point index out of range");
  if (k <= 0 || k >= cloud_->size()) throw ArgumentError("knn: K must satisfy 1 <= K <= n - 1");
  const auto nb = knn_query(cloud_->ptr(i), k, i);
  std::vector<Index> out;
  out.reserve(nb.size());
  for (const auto& e : nb) out.push_back(e.index);
  return out;
}

Neighbor NeighborIndex::nearest(const double* q) const { return knn_query(q, 1, -1).front(); }

std::vector<Neighbor> NeighborIndex::radius_query(const double* q, double radius) const {
  if (!(radius >= 0.0)) throw ArgumentError("radius_query: radius must be nonnegative");
  std::vector<Index> cand;
  impl_->candidates_within(q, radius, cand);
  const double r2 = radius * radius;
  std::vector<Neighbor> out;
  for (Index j : cand) {
    const double d2 = squared_distance(q, cloud_->ptr(j), cloud_->dim());
    if (d2 <= r2) out.push_back({j, d2});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Edge> NeighborIndex::edges_within(double max_half_length) const {
  if (!(max_half_length >= 0.0)) throw ArgumentError("edges_within: bound must be nonnegative");
  std::vector<Edge> edges;
  const double search = 2.0 * max_half_length * (1.0 + 1e-12) + 1e-300;
  std::vector<Index> cand;
  for (Index i = 0; i < cloud_->size(); ++i) {
    cand.clear();
    impl_->candidates_within(cloud_->ptr(i), search, cand);
    for (Index j : cand) {
      if (j <= i) continue;
      const double half = 0.5 * std::sqrt(squared_distance(cloud_->ptr(i), cloud_->ptr(j), cloud_->dim()));
      if (half <= max_half_length) edges.push_back({i, j, half});
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

KnnTable NeighborIndex::knn_table(int k, int threads) const {
  const Index n = cloud_->size();
  if (k <= 0 || k >= n) throw ArgumentError("knn: K must satisfy 1 <= K <= n - 1");
  KnnTable table;
  table.k = k;
  table.indices.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(k));
  table.dist2.resize(table.indices.size());
  parallel_for(n, threads, [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      const auto nb = knn_query(cloud_->ptr(i), k, i);
      for (int m = 0; m < k; ++m) {
        table.indices[static_cast<std::size_t>(i * k + m)] = nb[m].index;
        table.dist2[static_cast<std::size_t>(i * k + m)] = nb[m].dist2;
      }
    }
  });
  return table;
}

double NeighborIndex::horizon(int k) const {
  const Index n = cloud_->size();
  if (k <= 0 || k >= n) throw ArgumentError("horizon: K must satisfy 1 <= K <= n - 1");
  double worst = 0.0;
  for (Index i = 0; i < n; ++i) worst = std::max(worst, knn_query(cloud_->ptr(i), k, i).back().dist2);
  return 0.5 * std::sqrt(worst);
}

}  // namespace tconv
