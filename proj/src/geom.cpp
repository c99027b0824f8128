#include "tconv/geom.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <numbers>

#include <Eigen/Dense>

#include "tconv/spatial.hpp"

namespace tconv {

// ---------------------------------------------------------------------------
// PointCloud / Subspace
// ---------------------------------------------------------------------------

PointCloud::PointCloud(Eigen::MatrixXd columns) : data_(std::move(columns)) {
  if (data_.cols() == 0) throw ArgumentError("PointCloud: at least one point is required");
  if (data_.rows() == 0) throw ArgumentError("PointCloud: ambient dimension must be >= 1");
  if (!data_.allFinite()) throw ArgumentError("PointCloud: coordinates must be finite");
}

PointCloud PointCloud::from_points(const std::vector<Point>& points) {
  if (points.empty()) throw ArgumentError("PointCloud: at least one point is required");
  const auto dim = points.front().size();
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim) throw ArgumentError("PointCloud: dimension mismatch");
    m.col(static_cast<Eigen::Index>(i)) = points[i];
  }
  return PointCloud(std::move(m));
}

PointCloud PointCloud::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ArgumentError("PointCloud: at least one point is required");
  const auto dim = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != dim)
      throw ArgumentError("PointCloud: dimension mismatch");
    for (Eigen::Index k = 0; k < dim; ++k) m(k, static_cast<Eigen::Index>(i)) = rows[i][k];
  }
  return PointCloud(std::move(m));
}

std::vector<Point> PointCloud::points() const {
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (Index i = 0; i < size(); ++i) out.emplace_back(data_.col(i));
  return out;
}

PointCloud PointCloud::subset(const std::vector<Index>& indices) const {
  Eigen::MatrixXd m(data_.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = data_.col(indices[k]);
  return PointCloud(std::move(m));
}

Subspace::Subspace(Point origin, Eigen::MatrixXd basis, double tol)
    : origin_(std::move(origin)), basis_(std::move(basis)) {
  if (origin_.size() != basis_.rows()) throw ArgumentError("Subspace: origin/basis dimension mismatch");
  const Eigen::MatrixXd gram = basis_.transpose() * basis_;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(basis_.cols(), basis_.cols());
  if ((gram - eye).cwiseAbs().maxCoeff() > tol && basis_.cols() > 0)
    throw ArgumentError("Subspace: basis is not orthonormal");
}

Subspace Subspace::from_spanning(Point origin, const Eigen::MatrixXd& vectors) {
  const auto d = vectors.cols();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(vectors);
  if (qr.rank() < d) throw ArgumentError("Subspace: spanning vectors are rank deficient");
  Eigen::HouseholderQR<Eigen::MatrixXd> hqr(vectors);
  Eigen::MatrixXd q = hqr.householderQ() * Eigen::MatrixXd::Identity(vectors.rows(), d);
  return Subspace(std::move(origin), std::move(q));
}

double Subspace::normal_residual(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  const Eigen::VectorXd coeff = basis_.transpose() * v;
  return (v - basis_ * coeff).norm();
}

// ---------------------------------------------------------------------------
// Enclosing balls
// ---------------------------------------------------------------------------

Ball circumball(const Eigen::MatrixXd& support) {
  const auto k = support.cols();
  if (k == 0) throw ArgumentError("circumball: empty support");
  Ball ball;
  if (k == 1) {
    ball.center = support.col(0);
    ball.radius = 0.0;
    return ball;
  }
  if (k == 2) {
    ball.center = 0.5 * (support.col(0) + support.col(1));
    ball.radius = 0.5 * std::sqrt(squared_distance(support.col(0).data(), support.col(1).data(),
                                                   static_cast<int>(support.rows())));
    return ball;
  }
  const Eigen::MatrixXd a = support.rightCols(k - 1).colwise() - support.col(0);
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::VectorXd rhs = 0.5 * gram.diagonal();
  const Eigen::VectorXd alpha = gram.completeOrthogonalDecomposition().solve(rhs);
  const Eigen::VectorXd offset = a * alpha;
  ball.center = support.col(0) + offset;
  double r = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) r = std::max(r, (support.col(j) - ball.center).norm());
  ball.radius = r;
  return ball;
}

namespace {

// Exact smallest enclosing ball of three points in any dimension.
Ball three_point_ball(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                      const Eigen::Ref<const Eigen::VectorXd>& c) {
  const int dim = static_cast<int>(a.size());
  const double ab = squared_distance(a.data(), b.data(), dim);
  const double ac = squared_distance(a.data(), c.data(), dim);
  const double bc = squared_distance(b.data(), c.data(), dim);
  auto pair_ball = [](const auto& p, const auto& q, double d2) {
    return Ball{0.5 * (p + q), 0.5 * std::sqrt(d2)};
  };
  // Obtuse or right triangle: the longest side's diametral ball.
  if (ab >= ac && ab >= bc && ab >= ac + bc) return pair_ball(a, b, ab);
  if (ac >= ab && ac >= bc && ac >= ab + bc) return pair_ball(a, c, ac);
  if (bc >= ab && bc >= ac && bc >= ab + ac) return pair_ball(b, c, bc);
  const Eigen::VectorXd u = b - a;
  const Eigen::VectorXd v = c - a;
  const double uu = u.squaredNorm(), vv = v.squaredNorm(), uv = u.dot(v);
  const double det = uu * vv - uv * uv;
  if (!(det > 1e-30 * uu * vv)) {
    if (ab >= ac && ab >= bc) return pair_ball(a, b, ab);
    if (ac >= bc) return pair_ball(a, c, ac);
    return pair_ball(b, c, bc);
  }
  const double alpha = 0.5 * vv * (uu - uv) / det;
  const double beta = 0.5 * uu * (vv - uv) / det;
  Eigen::VectorXd offset = alpha * u + beta * v;
  Ball ball{a + offset, 0.0};
  ball.radius = std::max({offset.norm(), (ball.center - b).norm(), (ball.center - c).norm()});
  return ball;
}

// Move-to-front recursion over a fixed column order.
class MoveToFrontBall {
 public:
  MoveToFrontBall(const Eigen::MatrixXd& points, double reltol) : points_(points), reltol_(reltol) {
    for (Eigen::Index i = 0; i < points_.cols(); ++i) order_.push_back(i);
    max_support_ = static_cast<std::size_t>(points_.rows()) + 1;
  }

  Ball run() {
    ball_.radius = -1.0;
    recurse(order_.end());
    return ball_;
  }

 private:
  bool contains(Eigen::Index j) const {
    if (ball_.radius < 0.0) return false;
    const double d = (points_.col(j) - ball_.center).norm();
    return d <= ball_.radius + reltol_ * (1.0 + ball_.radius);
  }

  bool push(Eigen::Index j) {
    std::vector<Eigen::Index> trial = support_;
    trial.push_back(j);
    Eigen::MatrixXd sup(points_.rows(), static_cast<Eigen::Index>(trial.size()));
    for (std::size_t s = 0; s < trial.size(); ++s) sup.col(static_cast<Eigen::Index>(s)) = points_.col(trial[s]);
    if (trial.size() >= 2) {
      // Affinely dependent supports have no well-defined circumball.
      const Eigen::MatrixXd a = sup.rightCols(sup.cols() - 1).colwise() - sup.col(0);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
      qr.setThreshold(1e-12);
      if (qr.rank() < a.cols()) return false;
    }
    support_ = std::move(trial);
    ball_ = circumball(sup);
    return true;
  }

  void recurse(std::list<Eigen::Index>::iterator end) {
    if (support_.size() == max_support_) return;
    for (auto it = order_.begin(); it != end;) {
      auto current = it++;
      if (contains(*current)) continue;
      if (push(*current)) {
        recurse(current);
        support_.pop_back();
        order_.splice(order_.begin(), order_, current);
      }
    }
  }

  const Eigen::MatrixXd& points_;
  double reltol_;
  std::list<Eigen::Index> order_;
  std::vector<Eigen::Index> support_;
  std::size_t max_support_ = 0;
  Ball ball_;
};

Ball meb_of_columns(const Eigen::MatrixXd& pts, const Tolerances& tol) {
  switch (pts.cols()) {
    case 1:
      return Ball{pts.col(0), 0.0};
    case 2:
      return circumball(pts);
    case 3:
      return three_point_ball(pts.col(0), pts.col(1), pts.col(2));
    default:
      return MoveToFrontBall(pts, tol.meb_relative).run();
  }
}

}  // namespace

Ball min_enclosing_ball(std::span<const Point> points, const Tolerances& tol) {
  if (points.empty()) throw ArgumentError("min_enclosing_ball: empty input");
  const auto dim = points.front().size();
  Eigen::MatrixXd pts(dim, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim) throw ArgumentError("min_enclosing_ball: dimension mismatch");
    pts.col(static_cast<Eigen::Index>(i)) = points[i];
  }
  return meb_of_columns(pts, tol);
}

Ball min_enclosing_ball(const PointCloud& cloud, std::span<const Index> indices, const Tolerances& tol) {
  if (indices.empty()) throw ArgumentError("min_enclosing_ball: empty input");
  Eigen::MatrixXd pts(cloud.dim(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = cloud[indices[i]];
  return meb_of_columns(pts, tol);
}

double enclosing_radius(const PointCloud& cloud, std::span<const Index> indices, const Tolerances& tol) {
  if (indices.size() == 1) return 0.0;
  if (indices.size() == 2)
    return 0.5 * std::sqrt(squared_distance(cloud.ptr(indices[0]), cloud.ptr(indices[1]), cloud.dim()));
  if (indices.size() == 3) return three_point_ball(cloud[indices[0]], cloud[indices[1]], cloud[indices[2]]).radius;
  return min_enclosing_ball(cloud, indices, tol).radius;
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

double dist_point_to_segment(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::VectorXd>& a,
                             const Eigen::Ref<const Eigen::VectorXd>& b) {
  const Eigen::VectorXd u = b - a;
  const double uu = u.squaredNorm();
  if (uu == 0.0) return (p - a).norm();
  const double s = std::clamp(u.dot(p - a) / uu, 0.0, 1.0);
  return (p - a - s * u).norm();
}

namespace {

// Euclidean projection onto the probability simplex.
void project_to_simplex(Eigen::VectorXd& x) {
  const auto k = x.size();
  Eigen::VectorXd sorted = x;
  std::sort(sorted.data(), sorted.data() + k, std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  x = (x.array() - theta).max(0.0).matrix();
}

// Minimizes |W lambda| over the affine hull of the columns listed in `face`.
// Returns false if the minimizer leaves the face or violates optimality.
bool solve_face(const Eigen::MatrixXd& q, const std::vector<Eigen::Index>& face, Eigen::VectorXd& lambda) {
  const auto m = static_cast<Eigen::Index>(face.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) kkt(a, b) = q(face[a], face[b]);
    kkt(a, m) = 1.0;
    kkt(m, a) = 1.0;
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  rhs[m] = 1.0;
  const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  Eigen::VectorXd cand = Eigen::VectorXd::Zero(q.rows());
  for (Eigen::Index a = 0; a < m; ++a) {
    if (sol[a] < -1e-14) return false;
    cand[face[a]] = std::max(0.0, sol[a]);
  }
  const double total = cand.sum();
  if (!(total > 0.0)) return false;
  cand /= total;
  const Eigen::VectorXd grad = q * cand;
  const double level = cand.dot(grad);
  const double scale = q.diagonal().maxCoeff() + 1e-300;
  for (Eigen::Index j = 0; j < q.rows(); ++j)
    if (grad[j] < level - 1e-12 * scale) return false;
  lambda = cand;
  return true;
}

}  // namespace

double dist_point_to_hull(const Eigen::Ref<const Eigen::VectorXd>& p, const Eigen::Ref<const Eigen::MatrixXd>& vertices,
                          const Tolerances& tol) {
  const auto k = vertices.cols();
  if (k == 0) throw ArgumentError("dist_point_to_hull: empty vertex set");
  if (vertices.rows() != p.size()) throw ArgumentError("dist_point_to_hull: dimension mismatch");
  if (k == 1) return (p - vertices.col(0)).norm();
  if (k == 2) return dist_point_to_segment(p, vertices.col(0), vertices.col(1));

  const Eigen::MatrixXd w = vertices.colwise() - p;
  const Eigen::MatrixXd q = w.transpose() * w;
  const double lipschitz = std::max(q.trace(), 1e-300);

  // Accelerated projected gradient on 1/2 lambda^T Q lambda over the simplex.
  Eigen::VectorXd lambda = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  Eigen::VectorXd y = lambda;
  double momentum = 1.0;
  for (int it = 0; it < tol.hull_max_iterations; ++it) {
    Eigen::VectorXd next = y - (q * y) / lipschitz;
    project_to_simplex(next);
    const double change = (next - lambda).cwiseAbs().maxCoeff();
    const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = next + ((momentum - 1.0) / momentum_next) * (next - lambda);
    lambda = std::move(next);
    momentum = momentum_next;
    if (change < tol.hull_step) break;
  }
  double best = std::sqrt(std::max(0.0, lambda.dot(q * lambda)));

  // Exact solve on the face the iteration settled on.
  std::vector<Eigen::Index> face;
  for (Eigen::Index j = 0; j < k; ++j)
    if (lambda[j] > 1e-9) face.push_back(j);
  Eigen::VectorXd polished;
  if (!face.empty() && solve_face(q, face, polished))
    return std::min(best, std::sqrt(std::max(0.0, polished.dot(q * polished))));
  // Wrong face guessed: for small vertex sets, find the optimal face by
  // enumeration (solve_face accepts only KKT points).
  if (k <= 12) {
    for (unsigned mask = 1; mask < (1u << k); ++mask) {
      face.clear();
      for (Eigen::Index j = 0; j < k; ++j)
        if (mask & (1u << j)) face.push_back(j);
      if (solve_face(q, face, polished)) return std::min(best, std::sqrt(std::max(0.0, polished.dot(q * polished))));
    }
  }
  return best;
}

double dist_point_to_hull(const Point& p, std::span<const Point> vertices, const Tolerances& tol) {
  if (vertices.empty()) throw ArgumentError("dist_point_to_hull: empty vertex set");
  Eigen::MatrixXd v(p.size(), static_cast<Eigen::Index>(vertices.size()));
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i].size() != p.size()) throw ArgumentError("dist_point_to_hull: dimension mismatch");
    v.col(static_cast<Eigen::Index>(i)) = vertices[i];
  }
  return dist_point_to_hull(p, v, tol);
}

namespace {

double directed_hausdorff(const PointCloud& a, const PointCloud& b) {
  const int dim = a.dim();
  double worst = 0.0;
  if (static_cast<double>(a.size()) * static_cast<double>(b.size()) <= 4e6) {
    for (Index i = 0; i < a.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < b.size() && best > worst; ++j)
        best = std::min(best, squared_distance(a.ptr(i), b.ptr(j), dim));
      worst = std::max(worst, best);
    }
    return std::sqrt(worst);
  }
  const NeighborIndex index(b);
  for (Index i = 0; i < a.size(); ++i) worst = std::max(worst, index.nearest(a.ptr(i)).dist2);
  return std::sqrt(worst);
}

}  // namespace

double hausdorff(const PointCloud& a, const PointCloud& b, HausdorffMode mode) {
  if (a.empty() || b.empty()) throw ArgumentError("hausdorff: empty cloud");
  if (a.dim() != b.dim()) throw ArgumentError("hausdorff: dimension mismatch");
  const double ab = directed_hausdorff(a, b);
  if (mode == HausdorffMode::asymmetric) return ab;
  return std::max(ab, directed_hausdorff(b, a));
}

double subspace_angle(const Subspace& u, const Subspace& v) {
  if (u.ambient_dim() != v.ambient_dim()) throw ArgumentError("subspace_angle: ambient dimension mismatch");
  if (u.dim() != v.dim()) throw ArgumentError("subspace_angle: intrinsic dimension mismatch");
  const Eigen::MatrixXd diff = u.projector() - v.projector();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diff, Eigen::EigenvaluesOnly);
  const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  return std::clamp(norm, 0.0, 1.0);
}

}  // namespace tconv
