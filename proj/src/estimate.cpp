#include "tconv/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>

#include <Eigen/Dense>

#include "tconv/geom.hpp"
#include "tconv/manifolds.hpp"

namespace tconv {

// ---------------------------------------------------------------------------
// Storage
// ---------------------------------------------------------------------------

void SimplexList::push(std::span<const Index> vertices, double radius) {
  if (static_cast<int>(vertices.size()) != size_) throw ArgumentError("SimplexList: wrong vertex count");
  flat_.insert(flat_.end(), vertices.begin(), vertices.end());
  radius_.push_back(radius);
}

SimplicialComplex::SimplicialComplex(double t, int d_cap) : t_(t), d_cap_(d_cap) {
  for (int k = 0; k <= d_cap; ++k) lists_.emplace_back(k + 1);
}

std::size_t SimplicialComplex::total() const {
  std::size_t n = 0;
  for (const auto& l : lists_) n += l.size();
  return n;
}

// ---------------------------------------------------------------------------
// Clique enumeration
// ---------------------------------------------------------------------------

namespace {

// Vertices relabeled by a degeneracy ordering; `later[v]` lists the
// neighbors that come after v, ascending.
struct OrderedGraph {
  std::vector<Index> label;
  std::vector<std::vector<int>> later;
};

OrderedGraph degeneracy_graph(const std::vector<Index>& labels, const std::vector<std::pair<int, int>>& edges) {
  const int n = static_cast<int>(labels.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> degree(static_cast<std::size_t>(n));
  std::set<std::pair<int, int>> queue;
  for (int v = 0; v < n; ++v) {
    degree[v] = static_cast<int>(adj[v].size());
    queue.emplace(degree[v], v);
  }
  std::vector<int> rank(static_cast<std::size_t>(n), -1);
  int next = 0;
  while (!queue.empty()) {
    const int v = queue.begin()->second;
    queue.erase(queue.begin());
    rank[v] = next++;
    for (int w : adj[v]) {
      if (rank[w] >= 0) continue;
      queue.erase({degree[w], w});
      queue.emplace(--degree[w], w);
    }
  }
  OrderedGraph g;
  g.label.resize(static_cast<std::size_t>(n));
  g.later.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    g.label[rank[v]] = labels[v];
    for (int w : adj[v])
      if (rank[w] > rank[v]) g.later[rank[v]].push_back(rank[w]);
  }
  for (auto& l : g.later) std::sort(l.begin(), l.end());
  return g;
}

template <class Visit>
void extend_cliques(const PointCloud& cloud, const OrderedGraph& g, double t, int max_vertices,
                    std::vector<int>& clique, const std::vector<int>& cand, std::vector<Index>& sorted, Visit& visit) {
  std::vector<int> next;
  for (std::size_t idx = 0; idx < cand.size(); ++idx) {
    const int w = cand[idx];
    clique.push_back(w);
    sorted.clear();
    for (int c : clique) sorted.push_back(g.label[c]);
    std::sort(sorted.begin(), sorted.end());
    const double r = sorted.size() == 2
                         ? 0.5 * std::sqrt(squared_distance(cloud.ptr(sorted[0]), cloud.ptr(sorted[1]), cloud.dim()))
                         : enclosing_radius(cloud, sorted);
    if (r <= t) {
      visit(std::span<const Index>(sorted), r);
      if (static_cast<int>(clique.size()) < max_vertices) {
        next.clear();
        const auto& lw = g.later[w];
        std::set_intersection(cand.begin() + static_cast<std::ptrdiff_t>(idx) + 1, cand.end(), lw.begin(), lw.end(),
                              std::back_inserter(next));
        if (!next.empty()) {
          const std::vector<int> frozen = next;
          extend_cliques(cloud, g, t, max_vertices, clique, frozen, sorted, visit);
        }
      }
    }
    clique.pop_back();
  }
}

// Every clique with 2 .. max_vertices vertices and radius <= t.
template <class Visit>
void enumerate_cliques(const PointCloud& cloud, const OrderedGraph& g, double t, int max_vertices, Visit& visit) {
  std::vector<int> clique;
  std::vector<Index> sorted;
  for (int v = 0; v < static_cast<int>(g.label.size()); ++v) {
    if (g.later[v].empty()) continue;
    clique.assign(1, v);
    extend_cliques(cloud, g, t, max_vertices, clique, g.later[v], sorted, visit);
  }
}

void check_scale(const PointCloud& cloud, double t, int d_cap) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ArgumentError("scale t must be finite and nonnegative");
  if (d_cap < 1 || d_cap > cloud.dim()) throw ArgumentError("d_cap must satisfy 1 <= d_cap <= D");
}

}  // namespace

void for_each_cech_simplex(const PointCloud& cloud, const NeighborIndex& index, double t, int d_cap,
                           const std::function<void(std::span<const Index>, double)>& visit) {
  check_scale(cloud, t, d_cap);
  std::vector<Index> labels(static_cast<std::size_t>(cloud.size()));
  std::iota(labels.begin(), labels.end(), Index{0});
  std::vector<std::pair<int, int>> edges;
  for (const Edge& e : index.edges_within(t)) edges.emplace_back(static_cast<int>(e.i), static_cast<int>(e.j));
  const OrderedGraph g = degeneracy_graph(labels, edges);
  auto forward = [&](std::span<const Index> s, double r) { visit(s, r); };
  enumerate_cliques(cloud, g, t, d_cap + 1, forward);
}

SimplicialComplex reconstruct(const PointCloud& cloud, double t, int d_cap) {
  check_scale(cloud, t, d_cap);
  SimplicialComplex complex(t, d_cap);
  for (Index i = 0; i < cloud.size(); ++i) {
    const Index v[1] = {i};
    complex.simplices(0).push(v, 0.0);
  }
  const NeighborIndex index(cloud);
  std::vector<SimplexList> raw;
  for (int k = 0; k <= d_cap; ++k) raw.emplace_back(k + 1);
  for_each_cech_simplex(cloud, index, t, d_cap, [&](std::span<const Index> s, double r) {
    raw[s.size() - 1].push(s, r);
  });
  for (int k = 1; k <= d_cap; ++k) {
    const SimplexList& list = raw[k];
    std::vector<std::size_t> order(list.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto va = list.vertices(a), vb = list.vertices(b);
      return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
    });
    for (std::size_t s : order) complex.simplices(k).push(list.vertices(s), list.radius(s));
  }
  return complex;
}

// ---------------------------------------------------------------------------
// Risk
// ---------------------------------------------------------------------------

namespace {

class RiskEvaluator {
 public:
  RiskEvaluator(const PointCloud& cloud, const Manifold& model, double t, double resolution)
      : cloud_(cloud), model_(model), t_(t), resolution_(resolution), index_(cloud) {
    if (!(resolution > 0.0)) throw ArgumentError("reconstruction_risk: resolution must be positive");
    if (cloud.dim() != model.ambient_dim()) throw ArgumentError("reconstruction_risk: dimension mismatch");
    vertex_dist_.resize(static_cast<std::size_t>(cloud.size()));
    double worst = 0.0;
    for (Index i = 0; i < cloud.size(); ++i) {
      vertex_dist_[i] = model.distance(cloud[i]);
      worst = std::max(worst, vertex_dist_[i]);
    }
    lower_ = worst;
    const bool closed = model.family() != Family::swiss_roll;
    analytic_ = closed && worst <= 1e-9;
  }

  const NeighborIndex& index() const { return index_; }
  double lower() const { return lower_; }

  // Conv(sigma) -> M direction for one simplex.
  void simplex(std::span<const Index> verts, double r) {
    double vmax = 0.0;
    for (Index v : verts) vmax = std::max(vmax, vertex_dist_[v]);
    const double tau = model_.reach();
    double root = vmax + r;
    if (analytic_ && r < tau) root = std::min(root, tau * (1.0 - std::sqrt(1.0 - (r / tau) * (r / tau))));
    if (root <= lower_ + resolution_) return;

    const int dim = cloud_.dim();
    struct Cell {
      Eigen::MatrixXd v;
      double upper;
    };
    auto cmp = [](const Cell& a, const Cell& b) { return a.upper < b.upper; };
    std::priority_queue<Cell, std::vector<Cell>, decltype(cmp)> queue(cmp);
    auto push = [&](Eigen::MatrixXd v) {
      const Point c = v.rowwise().mean();
      const double fc = model_.distance(c);
      lower_ = std::max(lower_, fc);
      double spread = 0.0;
      for (Eigen::Index k = 0; k < v.cols(); ++k) spread = std::max(spread, (v.col(k) - c).norm());
      double upper = std::min(root, fc + spread);
      if (const auto bound = model_.hull_distance_bound(v)) upper = std::min(upper, *bound);
      if (upper > lower_ + resolution_) queue.push(Cell{std::move(v), upper});
    };
    Eigen::MatrixXd v(dim, static_cast<Eigen::Index>(verts.size()));
    for (std::size_t k = 0; k < verts.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = cloud_[verts[k]];
    push(std::move(v));
    constexpr int kMaxCells = 200000;
    for (int it = 0; it < kMaxCells && !queue.empty(); ++it) {
      if (queue.top().upper <= lower_ + resolution_) return;
      Cell cell = queue.top();
      queue.pop();
      Eigen::Index p = 0, q = 1;
      double longest = -1.0;
      for (Eigen::Index a = 0; a < cell.v.cols(); ++a)
        for (Eigen::Index b = a + 1; b < cell.v.cols(); ++b) {
          const double d2 = (cell.v.col(a) - cell.v.col(b)).squaredNorm();
          if (d2 > longest) {
            longest = d2;
            p = a;
            q = b;
          }
        }
      const Point mid = 0.5 * (cell.v.col(p) + cell.v.col(q));
      Eigen::MatrixXd left = cell.v, right = std::move(cell.v);
      left.col(p) = mid;
      right.col(q) = mid;
      push(std::move(left));
      push(std::move(right));
    }
    if (!queue.empty()) throw std::runtime_error("reconstruction_risk: refinement budget exhausted");
  }

  // M -> Conv direction.  `local(m, labels, best)` lowers best to the
  // distance from m to the simplices spanned by `labels`.  Simplices among the
  // nearest samples give an upper bound; the full neighborhood is searched
  // only where that bound could raise the running maximum.
  template <class Local>
  void manifold_side(Local&& local) {
    const Eigen::VectorXd scale = model_.param_scale();
    const int cheap_k = static_cast<int>(std::min<Index>(12, cloud_.size()));
    struct Cell {
      ParamBox box;
      double upper;
    };
    auto cmp = [](const Cell& a, const Cell& b) { return a.upper < b.upper; };
    std::priority_queue<Cell, std::vector<Cell>, decltype(cmp)> queue(cmp);
    std::vector<Index> labels;
    auto push = [&](ParamBox box) {
      const double rho = model_.cell_radius(box);
      const Point m = model_.embed(box.center());
      const auto near = index_.knn_query(m.data(), cheap_k);
      double best = std::sqrt(near.front().dist2);
      if (best + rho <= lower_) return;
      labels.clear();
      for (const auto& nb : near) labels.push_back(nb.index);
      local(m, labels, best);
      if (best + rho <= lower_) return;
      if (best > lower_) {
        labels.clear();
        for (const auto& nb : index_.radius_query(m.data(), best + 2.0 * t_)) labels.push_back(nb.index);
        local(m, labels, best);
        lower_ = std::max(lower_, best);
      }
      if (best + rho > lower_) queue.push(Cell{std::move(box), best + rho});
    };
    push(model_.domain());
    while (!queue.empty() && queue.top().upper > lower_ + resolution_) {
      Cell cell = queue.top();
      queue.pop();
      if (cell.upper <= lower_) continue;
      auto [a, b] = cell.box.split(scale);
      push(std::move(a));
      push(std::move(b));
    }
  }

  // Distance from m to one simplex, skipped when it cannot beat best.
  void offer_simplex(const Point& m, std::span<const Index> verts, double r, double& best) const {
    double closest = std::numeric_limits<double>::infinity();
    for (Index v : verts) closest = std::min(closest, (cloud_[v] - m).norm());
    if (closest - r >= best) return;
    Eigen::MatrixXd v(cloud_.dim(), static_cast<Eigen::Index>(verts.size()));
    for (std::size_t k = 0; k < verts.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = cloud_[verts[k]];
    best = std::min(best, dist_point_to_hull(m, v));
  }

 private:
  const PointCloud& cloud_;
  const Manifold& model_;
  double t_;
  double resolution_;
  NeighborIndex index_;
  std::vector<double> vertex_dist_;
  double lower_ = 0.0;
  bool analytic_ = false;
};

}  // namespace

Estimate reconstruction_risk(const PointCloud& cloud, double t, int d_cap, const Manifold& model, double resolution,
                             const RiskOptions& /*options*/) {
  check_scale(cloud, t, d_cap);
  RiskEvaluator eval(cloud, model, t, resolution);
  for_each_cech_simplex(cloud, eval.index(), t, d_cap,
                        [&](std::span<const Index> s, double r) { eval.simplex(s, r); });

  eval.manifold_side([&](const Point& m, const std::vector<Index>& labels, double& best) {
    if (labels.size() < 2) return;
    std::vector<std::pair<int, int>> edges;
    const double limit2 = 4.0 * t * t;
    for (int a = 0; a < static_cast<int>(labels.size()); ++a)
      for (int b = a + 1; b < static_cast<int>(labels.size()); ++b) {
        const double d2 = squared_distance(cloud.ptr(labels[a]), cloud.ptr(labels[b]), cloud.dim());
        if (d2 <= limit2 * (1.0 + 1e-12)) edges.emplace_back(a, b);
      }
    const OrderedGraph g = degeneracy_graph(labels, edges);
    auto offer = [&](std::span<const Index> s, double r) { eval.offer_simplex(m, s, r, best); };
    enumerate_cliques(cloud, g, t, d_cap + 1, offer);
  });
  return {eval.lower(), resolution};
}

Estimate reconstruction_risk(const SimplicialComplex& complex, const PointCloud& cloud, const Manifold& model,
                             double resolution) {
  RiskEvaluator eval(cloud, model, complex.scale(), resolution);
  // Simplices grouped by their smallest vertex.
  std::vector<std::vector<std::pair<int, std::size_t>>> by_first(static_cast<std::size_t>(cloud.size()));
  for (int k = 1; k < complex.dimension_count(); ++k) {
    const SimplexList& list = complex.simplices(k);
    for (std::size_t s = 0; s < list.size(); ++s) {
      const double r = std::isnan(list.radius(s)) ? enclosing_radius(cloud, list.vertices(s)) : list.radius(s);
      eval.simplex(list.vertices(s), r);
      by_first[list.vertices(s).front()].emplace_back(k, s);
    }
  }
  eval.manifold_side([&](const Point& m, const std::vector<Index>& labels, double& best) {
    std::unordered_map<Index, bool> local;
    for (Index v : labels) local[v] = true;
    for (Index v : labels)
      for (const auto& [k, s] : by_first[v]) {
        const SimplexList& list = complex.simplices(k);
        const auto verts = list.vertices(s);
        if (!std::all_of(verts.begin(), verts.end(), [&](Index w) { return local.count(w) > 0; })) continue;
        const double r = std::isnan(list.radius(s)) ? std::numeric_limits<double>::infinity() : list.radius(s);
        eval.offer_simplex(m, verts, r, best);
      }
  });
  return {eval.lower(), resolution};
}

double oracle_scale(Index n, int d, double f_min) {
  if (n < 2) throw ArgumentError("oracle_scale: need n >= 2");
  if (d < 1) throw ArgumentError("oracle_scale: need d >= 1");
  if (!(f_min > 0.0)) throw ArgumentError("oracle_scale: f_min must be positive");
  const double nn = static_cast<double>(n);
  return 1.75 * std::pow(3.0 * std::log(nn) / (unit_ball_volume(d) * f_min * nn), 1.0 / d);
}

// ---------------------------------------------------------------------------
// Tangent spaces
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd displacements(const PointCloud& cloud, const NeighborIndex& index, Index i, double t) {
  const auto near = index.radius_query(cloud.ptr(i), t);
  Eigen::MatrixXd y(cloud.dim(), static_cast<Eigen::Index>(near.size()));
  Eigen::Index c = 0;
  for (const auto& nb : near) {
    if (nb.index == i) continue;
    y.col(c++) = cloud[nb.index] - cloud[i];
  }
  y.conservativeResize(Eigen::NoChange, c);
  return y;
}

Eigen::MatrixXd top_directions(const Eigen::MatrixXd& scatter, int d) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
  return eig.eigenvectors().rightCols(d).rowwise().reverse();
}

double sup_residual(const Eigen::MatrixXd& y, const Eigen::MatrixXd& basis) {
  if (y.cols() == 0) return 0.0;
  const Eigen::MatrixXd res = y - basis * (basis.transpose() * y);
  return res.colwise().norm().maxCoeff();
}

}  // namespace

Subspace tangent_estimate(const PointCloud& cloud, const NeighborIndex& index, Index i, double t, int d,
                          const TangentOptions& options) {
  if (i < 0 || i >= cloud.size()) throw ArgumentError("tangent_estimate: point index out of range");
  if (d < 1 || d > cloud.dim()) throw ArgumentError("tangent_estimate: need 1 <= d <= D");
  if (!(t >= 0.0)) throw ArgumentError("tangent_estimate: t must be nonnegative");
  if (d == cloud.dim()) return Subspace(cloud[i], Eigen::MatrixXd::Identity(d, d));
  const Eigen::MatrixXd y = displacements(cloud, index, i, t);
  if (y.cols() < d + 1)
    throw InsufficientNeighborsError("tangent_estimate: fewer than d + 1 neighbors within t");

  Eigen::MatrixXd basis = top_directions(y * y.transpose(), d);
  if (options.refine) {
    double best = sup_residual(y, basis);
    Eigen::VectorXd weights = Eigen::VectorXd::Ones(y.cols());
    Eigen::MatrixXd current = basis;
    for (int it = 0; it < options.refine_iterations; ++it) {
      const Eigen::MatrixXd res = y - current * (current.transpose() * y);
      const Eigen::VectorXd norms = res.colwise().norm().transpose();
      const double peak = norms.maxCoeff();
      if (!(peak > 0.0)) break;
      weights = weights.cwiseProduct((Eigen::VectorXd::Ones(y.cols()) + norms / peak));
      weights /= weights.maxCoeff();
      current = top_directions(y * weights.asDiagonal() * y.transpose(), d);
      const double sup = sup_residual(y, current);
      if (sup < best) {
        best = sup;
        basis = current;
      }
    }
  }
  return Subspace::from_spanning(cloud[i], basis);
}

double tangent_sup_residual(const PointCloud& cloud, const NeighborIndex& index, Index i, double t,
                            const Subspace& u) {
  if (u.ambient_dim() != cloud.dim()) throw ArgumentError("tangent_sup_residual: dimension mismatch");
  return sup_residual(displacements(cloud, index, i, t), u.basis());
}

}  // namespace tconv
