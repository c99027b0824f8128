#include "tconv/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <mutex>
#include <numbers>
#include <queue>
#include <random>

#include <Eigen/Dense>

#include "tconv/estimate.hpp"
#include "tconv/spatial.hpp"

namespace tconv {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::circle:
      return "circle";
    case Family::torus:
      return "torus";
    case Family::swiss_roll:
      return "swissroll";
    case Family::bumped_sphere:
      return "bumped-sphere";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  if (s == "circle") return Family::circle;
  if (s == "torus") return Family::torus;
  if (s == "swissroll" || s == "swiss_roll" || s == "swiss-roll") return Family::swiss_roll;
  if (s == "bumped-sphere" || s == "bumped_sphere") return Family::bumped_sphere;
  throw ArgumentError("unknown manifold family: " + s);
}

std::pair<ParamBox, ParamBox> ParamBox::split(const Eigen::VectorXd& scale) const {
  Eigen::Index axis = 0;
  ((hi - lo).cwiseProduct(scale)).maxCoeff(&axis);
  const double mid = 0.5 * (lo[axis] + hi[axis]);
  ParamBox a = *this, b = *this;
  a.hi[axis] = mid;
  b.lo[axis] = mid;
  return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// Manifold base
// ---------------------------------------------------------------------------

Point Manifold::project(const Point& p) const {
  if (p.size() != ambient_dim()) throw ArgumentError("project: dimension mismatch");
  const double d = distance(p);
  if (!(d < reach()) && !projection_unique(p)) throw AmbiguityError("project: point lies outside the reach tube");
  return nearest_point(p);
}

Eigen::MatrixXd Manifold::normal_basis(const Point& p) const {
  const Subspace tangent = tangent_at(p);
  const int dd = ambient_dim(), d = intrinsic_dim();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(tangent.basis());
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dd, dd);
  return q.rightCols(dd - d);
}

void Manifold::require_on_manifold(const Point& p) const {
  if (p.size() != ambient_dim()) throw ArgumentError("point has the wrong ambient dimension");
  if (!(distance(p) <= kTolerances.on_manifold * std::max(1.0, p.norm())))
    throw ArgumentError("point is not on the manifold");
}

// ---------------------------------------------------------------------------
// Circle
// ---------------------------------------------------------------------------

namespace {

// Bounds over Conv(w) of |y|^2 + c^2 - 2 c |P y|.  |y|^2 is convex, so it
// lies below its secant interpolant and above its tangent plane at the
// centroid; |P y| is convex the same way.  Both bounds are linear in the
// barycentric coordinates and are attained at vertices.
std::pair<double, double> axis_form_bounds(const Eigen::MatrixXd& w, const Eigen::MatrixXd& proj, double c) {
  const Point centroid = w.rowwise().mean();
  const Eigen::VectorXd pc = proj * centroid;
  const double rho_c = pc.norm();
  const Eigen::VectorXd grad = rho_c > 0.0 ? Eigen::VectorXd(proj.transpose() * pc / rho_c)
                                           : Eigen::VectorXd::Zero(w.rows());
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index k = 0; k < w.cols(); ++k) {
    const auto v = w.col(k);
    hi = std::max(hi, v.squaredNorm() + c * c - 2.0 * c * (rho_c + grad.dot(v - centroid)));
    lo = std::min(lo, centroid.squaredNorm() + 2.0 * centroid.dot(v - centroid) + c * c - 2.0 * c * (proj * v).norm());
  }
  return {std::max(0.0, lo), std::max(0.0, hi)};
}

class Circle final : public Manifold {
 public:
  Circle(double tau, int ambient, std::uint64_t frame_seed) : tau_(tau), ambient_(ambient), frame_seed_(frame_seed) {
    if (!(tau > 0.0)) throw ArgumentError("circle: radius must be positive");
    if (ambient < 2) throw ArgumentError("circle: ambient dimension must be >= 2");
    if (ambient == 2) {
      frame_ = Eigen::MatrixXd::Identity(2, 2);
    } else {
      StreamRng rng(derive_seed(frame_seed, 0xf7a3e), 0);
      std::normal_distribution<double> normal;
      Eigen::MatrixXd g(ambient, 2);
      for (Eigen::Index j = 0; j < 2; ++j)
        for (Eigen::Index i = 0; i < ambient; ++i) g(i, j) = normal(rng);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      frame_ = qr.householderQ() * Eigen::MatrixXd::Identity(ambient, 2);
    }
  }

  Family family() const override { return Family::circle; }
  int intrinsic_dim() const override { return 1; }
  int ambient_dim() const override { return ambient_; }
  double reach() const override { return tau_; }
  std::optional<double> volume() const override { return kTwoPi * tau_; }
  nlohmann::json params() const override {
    return {{"radius", tau_}, {"ambient_dim", ambient_}, {"frame_seed", frame_seed_}};
  }

  Point sample_base(StreamRng& rng) const override { return embed(Eigen::VectorXd::Constant(1, kTwoPi * rng.uniform())); }

  double distance(const Point& p) const override {
    const Eigen::Vector2d q = frame_.transpose() * p;
    const double perp2 = std::max(0.0, (p - frame_ * q).squaredNorm());
    const double radial = q.norm() - tau_;
    return std::sqrt(perp2 + radial * radial);
  }

  // Only points over the centre have several nearest points.
  bool projection_unique(const Point& p) const override { return (frame_.transpose() * p).norm() > 0.0; }

  Point nearest_point(const Point& p) const override {
    const Eigen::Vector2d q = frame_.transpose() * p;
    const double r = q.norm();
    if (r == 0.0) return embed(Eigen::VectorXd::Zero(1));
    return frame_ * (tau_ / r * q);
  }

  Subspace tangent_at(const Point& p) const override {
    require_on_manifold(p);
    const Eigen::Vector2d q = frame_.transpose() * p;
    const Eigen::Vector2d dir = Eigen::Vector2d(-q.y(), q.x()).normalized();
    return Subspace::from_spanning(p, frame_ * dir);
  }

  ParamBox domain() const override { return {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, kTwoPi)}; }
  Point embed(const Eigen::VectorXd& param) const override {
    return frame_ * (tau_ * Eigen::Vector2d(std::cos(param[0]), std::sin(param[0])));
  }
  double cell_radius(const ParamBox& box) const override {
    const double width = std::min(box.hi[0] - box.lo[0], kTwoPi);
    return 2.0 * tau_ * std::sin(0.25 * width);
  }
  Eigen::VectorXd param_scale() const override { return Eigen::VectorXd::Constant(1, tau_); }

  // distance^2 = |y|^2 + tau^2 - 2 tau |F^T y|.
  std::optional<double> hull_distance_bound(const Eigen::MatrixXd& vertices) const override {
    return std::sqrt(axis_form_bounds(vertices, frame_.transpose(), tau_).second);
  }

 private:
  double tau_;
  int ambient_;
  std::uint64_t frame_seed_;
  Eigen::MatrixXd frame_;
};

// ---------------------------------------------------------------------------
// Torus
// ---------------------------------------------------------------------------

class Torus final : public Manifold {
 public:
  Torus(double r, double big_r) : r_(r), big_r_(big_r) {
    if (!(r > 0.0 && big_r > r)) throw ArgumentError("torus: need 0 < r < R");
  }

  Family family() const override { return Family::torus; }
  int intrinsic_dim() const override { return 2; }
  int ambient_dim() const override { return 3; }
  double reach() const override { return std::min(r_, big_r_ - r_); }
  std::optional<double> volume() const override { return 4.0 * kPi * kPi * big_r_ * r_; }
  nlohmann::json params() const override { return {{"r", r_}, {"R", big_r_}}; }

  // Area-uniform: accept the tube angle with probability (R + r cos) / (R + r).
  Point sample_base(StreamRng& rng) const override {
    double theta = 0.0;
    for (;;) {
      theta = kTwoPi * rng.uniform();
      if (rng.uniform() * (big_r_ + r_) <= big_r_ + r_ * std::cos(theta)) break;
    }
    const double phi = kTwoPi * rng.uniform();
    return embed(vec2(theta, phi));
  }

  double distance(const Point& p) const override {
    const double rho = std::hypot(p[0], p[1]);
    return std::abs(std::hypot(rho - big_r_, p[2]) - r_);
  }

  // The medial set is the z axis together with the core circle.
  bool projection_unique(const Point& p) const override {
    const double rho = std::hypot(p[0], p[1]);
    return rho > 0.0 && std::hypot(rho - big_r_, p[2]) > 0.0;
  }

  Point nearest_point(const Point& p) const override {
    const double rho = std::hypot(p[0], p[1]);
    const double phi = rho > 0.0 ? std::atan2(p[1], p[0]) : 0.0;
    const double dr = rho - big_r_, dz = p[2];
    const double theta = (dr == 0.0 && dz == 0.0) ? 0.0 : std::atan2(dz, dr);
    return embed(vec2(theta, phi));
  }

  Subspace tangent_at(const Point& p) const override {
    require_on_manifold(p);
    const double rho = std::hypot(p[0], p[1]);
    const double phi = std::atan2(p[1], p[0]);
    const double theta = std::atan2(p[2], rho - big_r_);
    Eigen::MatrixXd t(3, 2);
    t.col(0) << -std::sin(theta) * std::cos(phi), -std::sin(theta) * std::sin(phi), std::cos(theta);
    t.col(1) << -std::sin(phi), std::cos(phi), 0.0;
    return Subspace(p, t, 1e-12);
  }

  ParamBox domain() const override { return {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Constant(2, kTwoPi)}; }
  Point embed(const Eigen::VectorXd& param) const override {
    const double theta = param[0], phi = param[1];
    const double ring = big_r_ + r_ * std::cos(theta);
    Point x(3);
    x << ring * std::cos(phi), ring * std::sin(phi), r_ * std::sin(theta);
    return x;
  }
  // Move along the tube angle, then along the ring.
  double cell_radius(const ParamBox& box) const override {
    return 0.5 * r_ * (box.hi[0] - box.lo[0]) + 0.5 * (big_r_ + r_) * (box.hi[1] - box.lo[1]);
  }
  Eigen::VectorXd param_scale() const override { return vec2(r_, big_r_ + r_); }

  // With g the distance to the core circle, g^2 = |y|^2 + R^2 - 2 R rho and
  // distance = |g - r|.
  std::optional<double> hull_distance_bound(const Eigen::MatrixXd& vertices) const override {
    Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(2, 3);
    proj(0, 0) = proj(1, 1) = 1.0;
    const auto [lo, hi] = axis_form_bounds(vertices, proj, big_r_);
    return std::max({0.0, r_ - std::sqrt(lo), std::sqrt(hi) - r_});
  }

 private:
  double r_, big_r_;
};

// ---------------------------------------------------------------------------
// Swiss roll
// ---------------------------------------------------------------------------

class SwissRoll final : public Manifold {
 public:
  SwissRoll(double u_min, double u_max, double height) : u_min_(u_min), u_max_(u_max), height_(height) {
    if (!(u_min > 0.0 && u_max > u_min && height > 0.0)) throw ArgumentError("swiss roll: bad parameter ranges");
    reach_ = compute_reach();
  }

  Family family() const override { return Family::swiss_roll; }
  int intrinsic_dim() const override { return 2; }
  int ambient_dim() const override { return 3; }
  double reach() const override { return reach_; }
  std::optional<double> volume() const override { return height_ * (arc(u_max_) - arc(u_min_)); }
  nlohmann::json params() const override { return {{"u_min", u_min_}, {"u_max", u_max_}, {"height", height_}}; }

  Point sample_base(StreamRng& rng) const override {
    const double u = u_min_ + (u_max_ - u_min_) * rng.uniform();
    const double y = height_ * rng.uniform();
    return embed(vec2(u, y));
  }

  double distance(const Point& p) const override {
    const double u = nearest_u(p[0], p[2]);
    const double dy = p[1] - std::clamp(p[1], 0.0, height_);
    const double dx = p[0] - u * std::cos(u), dz = p[2] - u * std::sin(u);
    return std::sqrt(dx * dx + dz * dz + dy * dy);
  }

  Point nearest_point(const Point& p) const override {
    return embed(vec2(nearest_u(p[0], p[2]), std::clamp(p[1], 0.0, height_)));
  }

  Subspace tangent_at(const Point& p) const override {
    require_on_manifold(p);
    const double u = nearest_u(p[0], p[2]);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(3, 2);
    t.col(0) << std::cos(u) - u * std::sin(u), 0.0, std::sin(u) + u * std::cos(u);
    t.col(0).normalize();
    t(1, 1) = 1.0;
    return Subspace(p, t, 1e-12);
  }

  ParamBox domain() const override { return {vec2(u_min_, 0.0), vec2(u_max_, height_)}; }
  Point embed(const Eigen::VectorXd& param) const override {
    Point x(3);
    x << param[0] * std::cos(param[0]), param[1], param[0] * std::sin(param[0]);
    return x;
  }
  // Arc speed along u is sqrt(1 + u^2), increasing in u.
  double cell_radius(const ParamBox& box) const override {
    return 0.5 * std::sqrt(1.0 + box.hi[0] * box.hi[0]) * (box.hi[0] - box.lo[0]) + 0.5 * (box.hi[1] - box.lo[1]);
  }
  Eigen::VectorXd param_scale() const override { return vec2(std::sqrt(1.0 + u_max_ * u_max_), 1.0); }

 private:
  static double arc(double u) { return 0.5 * (u * std::sqrt(1.0 + u * u) + std::asinh(u)); }

  double planar_gap2(double px, double pz, double u) const {
    const double dx = px - u * std::cos(u), dz = pz - u * std::sin(u);
    return dx * dx + dz * dz;
  }

  // Coarse scan of the spiral parameter, then golden-section refinement of
  // every sampled local minimum.
  double nearest_u(double px, double pz) const {
    constexpr int kSamples = 1024;
    const double step = (u_max_ - u_min_) / kSamples;
    std::vector<double> g(kSamples + 1);
    for (int k = 0; k <= kSamples; ++k) g[k] = planar_gap2(px, pz, u_min_ + k * step);
    double best_u = u_min_, best = g[0];
    if (g[kSamples] < best) {
      best = g[kSamples];
      best_u = u_max_;
    }
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int k = 0; k <= kSamples; ++k) {
      const bool left_ok = k == 0 || g[k] <= g[k - 1];
      const bool right_ok = k == kSamples || g[k] <= g[k + 1];
      if (!(left_ok && right_ok)) continue;
      double a = u_min_ + std::max(0, k - 1) * step, b = u_min_ + std::min(kSamples, k + 1) * step;
      double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
      double gc = planar_gap2(px, pz, c), gd = planar_gap2(px, pz, d);
      for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
        if (gc < gd) {
          b = d;
          d = c;
          gd = gc;
          c = b - inv_phi * (b - a);
          gc = planar_gap2(px, pz, c);
        } else {
          a = c;
          c = d;
          gc = gd;
          d = a + inv_phi * (b - a);
          gd = planar_gap2(px, pz, d);
        }
      }
      const double u = 0.5 * (a + b);
      const double gu = planar_gap2(px, pz, u);
      if (gu < best) {
        best = gu;
        best_u = u;
      }
    }
    return best_u;
  }

  // Federer: reach = inf over p != q of |q - p|^2 / (2 d(q - p, T_p M)).  The
  // y direction is flat, so only pairs on the planar spiral matter.
  double compute_reach() const {
    constexpr int kGrid = 2400;
    std::vector<Eigen::Vector2d> pts(kGrid + 1), tan(kGrid + 1);
    for (int k = 0; k <= kGrid; ++k) {
      const double u = u_min_ + (u_max_ - u_min_) * k / kGrid;
      pts[k] = Eigen::Vector2d(u * std::cos(u), u * std::sin(u));
      tan[k] = Eigen::Vector2d(std::cos(u) - u * std::sin(u), std::sin(u) + u * std::cos(u)).normalized();
    }
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kGrid; ++i)
      for (int j = 0; j <= kGrid; ++j) {
        if (i == j) continue;
        const Eigen::Vector2d v = pts[j] - pts[i];
        const double normal = std::abs(tan[i].x() * v.y() - tan[i].y() * v.x());
        if (normal <= 0.0) continue;
        best = std::min(best, v.squaredNorm() / (2.0 * normal));
      }
    return best;
  }

  double u_min_, u_max_, height_;
  double reach_ = 0.0;
};

}  // namespace

ManifoldPtr make_circle(double tau, int ambient_dim, std::uint64_t frame_seed) {
  return std::make_shared<Circle>(tau, ambient_dim, frame_seed);
}
ManifoldPtr make_torus(double r, double big_r) { return std::make_shared<Torus>(r, big_r); }
ManifoldPtr make_swiss_roll(double u_min, double u_max, double height) {
  return std::make_shared<SwissRoll>(u_min, u_max, height);
}

// ---------------------------------------------------------------------------
// Bump profile and bumped sphere
// ---------------------------------------------------------------------------

namespace {

double psi(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }
double psi_prime(double x) { return x > 0.0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }

// Smooth step: 0 for x <= 0, 1 for x >= 1.
double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return psi(x) / (psi(x) + psi(1.0 - x));
}

double smooth_step_prime(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double a = psi(x), b = psi(1.0 - x);
  return (psi_prime(x) * b + a * psi_prime(1.0 - x)) / ((a + b) * (a + b));
}

struct ProfileSups {
  double value = 0.0, first = 0.0, second = 0.0;
};

const ProfileSups& profile_sups() {
  static const ProfileSups sups = [] {
    ProfileSups s;
    constexpr int kGrid = 200000;
    const double h = 1e-5;
    for (int k = 0; k <= kGrid; ++k) {
      const double x = 4.0 * k / kGrid - 2.0;
      s.value = std::max(s.value, std::abs(bump_profile(x)));
      s.first = std::max(s.first, std::abs(bump_profile_derivative(x)));
      const double second = (bump_profile_derivative(x + h) - bump_profile_derivative(x - h)) / (2.0 * h);
      s.second = std::max(s.second, std::abs(second));
    }
    return s;
  }();
  return sups;
}

Eigen::Vector3d sphere_point(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

Eigen::Matrix<double, 3, 2> sphere_tangent(const Eigen::Vector3d& u) {
  const Eigen::Vector3d helper = std::abs(u.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  const Eigen::Vector3d e1 = u.cross(helper).normalized();
  Eigen::Matrix<double, 3, 2> t;
  t.col(0) = e1;
  t.col(1) = u.cross(e1);
  return t;
}

}  // namespace

double bump_profile(double x) { return smooth_step(2.0 - std::abs(x)); }

double bump_profile_derivative(double x) {
  const double sign = x < 0.0 ? 1.0 : -1.0;
  return sign * smooth_step_prime(2.0 - std::abs(x));
}

double bump_profile_sup() { return profile_sups().value; }
double bump_profile_derivative_sup() { return profile_sups().first; }
double bump_lipschitz_constant() { return bump_profile_sup() + 3.0 * bump_profile_derivative_sup(); }

BumpParams make_bump_params(double radius, double delta, double height, std::uint64_t sign_seed) {
  if (!(radius > 0.0 && delta > 0.0 && height >= 0.0)) throw ArgumentError("bumped sphere: bad parameters");
  if (delta > radius) throw ArgumentError("bumped sphere: need delta <= R");
  BumpParams params;
  params.radius = radius;
  params.delta = delta;
  params.height = height;
  params.sign_seed = sign_seed;

  // Fibonacci candidates, greedy farthest point from the north pole.
  const int pool = std::clamp(static_cast<int>(400.0 * (radius / delta) * (radius / delta)), 2000, 200000);
  std::vector<Eigen::Vector3d> cand(static_cast<std::size_t>(pool));
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < pool; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / pool;
    const double ring = std::sqrt(std::max(0.0, 1.0 - z * z));
    cand[k] = radius * Eigen::Vector3d(ring * std::cos(golden * k), ring * std::sin(golden * k), z);
  }
  std::vector<double> gap(cand.size(), std::numeric_limits<double>::infinity());
  Eigen::Vector3d next(0.0, 0.0, radius);
  for (;;) {
    params.sites.emplace_back(next);
    for (std::size_t k = 0; k < cand.size(); ++k) gap[k] = std::min(gap[k], (cand[k] - next).norm());
    const auto far = std::max_element(gap.begin(), gap.end());
    if (*far < 4.0 * delta) break;
    next = cand[static_cast<std::size_t>(far - gap.begin())];
  }
  if (params.sites.size() % 2 == 1) params.sites.pop_back();
  for (std::size_t k = 0; k < params.sites.size(); ++k) {
    StreamRng rng(derive_seed(sign_seed, 0x5167), k);
    params.signs.push_back(rng() & 1 ? 1 : -1);
  }
  return params;
}

BumpedSphere::BumpedSphere(BumpParams params) : params_(std::move(params)) {
  if (params_.sites.size() != params_.signs.size()) throw ArgumentError("bumped sphere: one sign per site");
  if (!(params_.radius > 0.0 && params_.delta > 0.0)) throw ArgumentError("bumped sphere: bad parameters");
  for (const auto& s : params_.sites)
    if (s.size() != 3) throw ArgumentError("bumped sphere: sites must lie in R^3");
}

std::shared_ptr<const BumpedSphere> make_bumped_sphere(BumpParams params) {
  return std::make_shared<BumpedSphere>(std::move(params));
}

double BumpedSphere::bump_sum(const Point& x, Eigen::Vector3d* gradient_dir) const {
  double sum = 0.0;
  if (gradient_dir) gradient_dir->setZero();
  for (std::size_t k = 0; k < params_.sites.size(); ++k) {
    const Eigen::Vector3d diff = x - params_.sites[k];
    const double dist = diff.norm();
    const double scaled = dist / params_.delta;
    if (scaled >= 2.0) continue;
    sum += params_.signs[k] * bump_profile(scaled);
    if (gradient_dir && dist > 0.0) *gradient_dir += params_.signs[k] * bump_profile_derivative(scaled) * diff / dist;
  }
  return sum;
}

Point BumpedSphere::deform(const Point& x) const {
  if (x.size() != 3) throw ArgumentError("bumped sphere: points must lie in R^3");
  return x * (1.0 + params_.height / params_.radius * bump_sum(x, nullptr));
}

Eigen::Matrix3d BumpedSphere::deform_jacobian(const Point& x) const {
  if (x.size() != 3) throw ArgumentError("bumped sphere: points must lie in R^3");
  Eigen::Vector3d g;
  const double s = bump_sum(x, &g);
  const double k = params_.height / params_.radius;
  const Eigen::Vector3d x3 = x;
  return (1.0 + k * s) * Eigen::Matrix3d::Identity() + (k / params_.delta) * x3 * g.transpose();
}

bool BumpedSphere::is_diffeomorphism() const {
  for (std::size_t a = 0; a < params_.sites.size(); ++a)
    for (std::size_t b = a + 1; b < params_.sites.size(); ++b)
      if ((params_.sites[a] - params_.sites[b]).norm() < 4.0 * params_.delta) return false;
  return params_.delta <= params_.radius && bump_lipschitz_constant() * params_.height / params_.delta < 1.0;
}

double BumpedSphere::reach() const {
  const double c1 = bump_lipschitz_constant();
  const double c2 = 4.0 * profile_sups().first + 3.0 * profile_sups().second;
  const double a = c1 * params_.height / params_.delta;
  const double b = params_.radius * c2 * params_.height / (params_.delta * params_.delta);
  return params_.radius * std::min(1.0 - a, (1.0 - a) * (1.0 - a) / (1.0 + a + b));
}

nlohmann::json BumpedSphere::params() const {
  return {{"R", params_.radius}, {"delta", params_.delta}, {"height", params_.height}, {"sign_seed", params_.sign_seed}};
}

Point BumpedSphere::sample_base(StreamRng& rng) const {
  std::normal_distribution<double> normal;
  Eigen::Vector3d g;
  do {
    g << normal(rng), normal(rng), normal(rng);
  } while (g.norm() == 0.0);
  return deform(params_.radius * g.normalized());
}

Point BumpedSphere::nearest_point(const Point& p) const {
  if (p.size() != 3) throw ArgumentError("bumped sphere: points must lie in R^3");
  auto surface = [&](const Eigen::Vector3d& u) -> Eigen::Vector3d { return deform(params_.radius * u); };
  auto gap2 = [&](const Eigen::Vector3d& u) { return (Eigen::Vector3d(p) - surface(u)).squaredNorm(); };

  // Radial start plus a coarse direction scan, then Gauss-Newton in a chart.
  std::vector<Eigen::Vector3d> starts;
  starts.push_back(p.norm() > 0.0 ? Eigen::Vector3d(p.normalized()) : Eigen::Vector3d::UnitZ());
  constexpr int kScan = 256;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  Eigen::Vector3d scan_best = starts.front();
  double scan_gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kScan; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / kScan;
    const double ring = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Eigen::Vector3d u(ring * std::cos(golden * k), ring * std::sin(golden * k), z);
    const double g = gap2(u);
    if (g < scan_gap) {
      scan_gap = g;
      scan_best = u;
    }
  }
  starts.push_back(scan_best);

  Eigen::Vector3d best_u = starts.front();
  double best = gap2(best_u);
  for (Eigen::Vector3d u : starts) {
    double current = gap2(u);
    for (int it = 0; it < 60; ++it) {
      const auto frame = sphere_tangent(u);
      const Eigen::Vector3d res = Eigen::Vector3d(p) - surface(u);
      Eigen::Matrix<double, 3, 2> jac;
      const double h = 1e-7;
      for (int c = 0; c < 2; ++c) {
        const Eigen::Vector3d up = (u + h * frame.col(c)).normalized();
        const Eigen::Vector3d um = (u - h * frame.col(c)).normalized();
        jac.col(c) = (surface(up) - surface(um)) / (2.0 * h);
      }
      const Eigen::Vector2d step = (jac.transpose() * jac).ldlt().solve(jac.transpose() * res);
      double scale = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 30; ++ls, scale *= 0.5) {
        const Eigen::Vector3d trial = (u + scale * frame * step).normalized();
        const double g = gap2(trial);
        if (g < current) {
          u = trial;
          current = g;
          improved = true;
          break;
        }
      }
      if (!improved || scale * step.norm() < kTolerances.projection) break;
    }
    if (current < best) {
      best = current;
      best_u = u;
    }
  }
  return surface(best_u);
}

double BumpedSphere::distance(const Point& p) const { return (p - nearest_point(p)).norm(); }

Subspace BumpedSphere::tangent_at(const Point& p) const {
  require_on_manifold(p);
  const Eigen::Vector3d u = Eigen::Vector3d(p).normalized();
  const Eigen::Matrix3d jac = deform_jacobian(Point(params_.radius * u));
  const Eigen::MatrixXd span = jac * sphere_tangent(u);
  return Subspace::from_spanning(p, span);
}

ParamBox BumpedSphere::domain() const { return {vec2(0.0, 0.0), vec2(kPi, kTwoPi)}; }

Point BumpedSphere::embed(const Eigen::VectorXd& param) const {
  return deform(Point(params_.radius * sphere_point(param[0], param[1])));
}

double BumpedSphere::cell_radius(const ParamBox& box) const {
  const double sin_max =
      (box.lo[0] <= 0.5 * kPi && box.hi[0] >= 0.5 * kPi) ? 1.0 : std::max(std::sin(box.lo[0]), std::sin(box.hi[0]));
  const double on_sphere =
      0.5 * params_.radius * (box.hi[0] - box.lo[0]) + 0.5 * params_.radius * sin_max * (box.hi[1] - box.lo[1]);
  return on_sphere * (1.0 + bump_lipschitz_constant() * params_.height / params_.delta);
}

Eigen::VectorXd BumpedSphere::param_scale() const { return vec2(params_.radius, params_.radius); }

// ---------------------------------------------------------------------------
// Model configs
// ---------------------------------------------------------------------------

ManifoldPtr make_manifold(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("family")) throw ArgumentError("model spec needs a \"family\"");
  const Family family = family_from_string(spec.at("family").get<std::string>());
  const nlohmann::json params = spec.value("params", nlohmann::json::object());
  switch (family) {
    case Family::circle:
      return make_circle(params.value("radius", 1.0), params.value("ambient_dim", 2),
                         params.value("frame_seed", std::uint64_t{0}));
    case Family::torus:
      return make_torus(params.value("r", 1.0), params.value("R", 4.0));
    case Family::swiss_roll:
      return make_swiss_roll(params.value("u_min", 1.5 * kPi), params.value("u_max", 4.5 * kPi),
                             params.value("height", 21.0));
    case Family::bumped_sphere:
      return make_bumped_sphere(make_bump_params(params.value("R", 1.0), params.value("delta", 0.2),
                                                 params.value("height", 0.01),
                                                 params.value("sign_seed", std::uint64_t{0})));
  }
  throw ArgumentError("unknown manifold family");
}

// ---------------------------------------------------------------------------
// Noise and sampling
// ---------------------------------------------------------------------------

NoiseSpec NoiseSpec::parse(const std::string& text) {
  NoiseSpec spec;
  if (text == "none" || text.empty()) return spec;
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ArgumentError("noise must be none, tubular:G or ambient:G");
  const std::string kind = text.substr(0, colon);
  if (kind == "tubular")
    spec.kind = Kind::tubular;
  else if (kind == "ambient")
    spec.kind = Kind::ambient;
  else
    throw ArgumentError("unknown noise kind: " + kind);
  try {
    std::size_t used = 0;
    spec.gamma = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw ArgumentError("trailing characters");
  } catch (const std::exception&) {
    throw ArgumentError("bad noise amplitude in: " + text);
  }
  if (!(spec.gamma >= 0.0) || !std::isfinite(spec.gamma)) throw ArgumentError("noise amplitude must be >= 0");
  return spec;
}

std::string NoiseSpec::to_string() const {
  switch (kind) {
    case Kind::none:
      return "none";
    case Kind::tubular:
      return "tubular:" + nlohmann::json(gamma).dump();
    case Kind::ambient:
      return "ambient:" + nlohmann::json(gamma).dump();
  }
  return "none";
}

namespace {

Eigen::VectorXd random_in_ball(StreamRng& rng, int dim, double radius) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd g(dim);
  do {
    for (int k = 0; k < dim; ++k) g[k] = normal(rng);
  } while (g.norm() == 0.0);
  return g.normalized() * (radius * std::pow(rng.uniform(), 1.0 / dim));
}

}  // namespace

Sample sample(const Manifold& model, Index n, const NoiseSpec& noise, std::uint64_t seed,
              const SampleOptions& options) {
  if (n < 1) throw ArgumentError("sample: n must be >= 1");
  if (noise.gamma < 0.0) throw ArgumentError("sample: noise amplitude must be >= 0");
  if (noise.kind == NoiseSpec::Kind::tubular && !(noise.gamma < model.reach()))
    throw ArgumentError("sample: tubular noise needs gamma < reach");
  if (options.stratified && model.family() != Family::circle)
    throw ArgumentError("sample: stratified sampling is only available for the circle");

  const int dim = model.ambient_dim();
  const int codim = dim - model.intrinsic_dim();
  Eigen::MatrixXd clean(dim, n), observed(dim, n);
  for (Index i = 0; i < n; ++i) {
    StreamRng rng(seed, static_cast<std::uint64_t>(i));
    Point base;
    if (options.stratified) {
      const double theta = kTwoPi * (static_cast<double>(i) + rng.uniform()) / static_cast<double>(n);
      base = model.embed(Eigen::VectorXd::Constant(1, theta));
    } else {
      base = model.sample_base(rng);
    }
    clean.col(i) = base;
    Point x = base;
    if (noise.kind == NoiseSpec::Kind::tubular && noise.gamma > 0.0 && codim > 0) {
      const Eigen::MatrixXd normals = model.normal_basis(base);
      x += normals * random_in_ball(rng, codim, noise.gamma);
    } else if (noise.kind == NoiseSpec::Kind::ambient && noise.gamma > 0.0) {
      x += random_in_ball(rng, dim, noise.gamma);
    }
    observed.col(i) = x;
  }
  return Sample{PointCloud(std::move(observed)), PointCloud(std::move(clean))};
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

double default_resolution(const Manifold& model) { return model.reach() / 200.0; }

Estimate epsilon_rate(const Manifold& model, const PointCloud& cloud, double resolution) {
  if (!(resolution > 0.0)) throw ArgumentError("epsilon_rate: resolution must be positive");
  if (cloud.dim() != model.ambient_dim()) throw ArgumentError("epsilon_rate: dimension mismatch");

  double lower = 0.0;
  for (Index i = 0; i < cloud.size(); ++i) lower = std::max(lower, model.distance(cloud[i]));

  // sup over M of d(m, cloud): a cell's value is at most the value at its
  // center plus the cell radius.
  const NeighborIndex index(cloud);
  const Eigen::VectorXd scale = model.param_scale();
  struct Cell {
    ParamBox box;
    double upper;
  };
  auto cmp = [](const Cell& a, const Cell& b) { return a.upper < b.upper; };
  std::priority_queue<Cell, std::vector<Cell>, decltype(cmp)> queue(cmp);
  auto push = [&](ParamBox box) {
    const Point m = model.embed(box.center());
    const double value = std::sqrt(index.nearest(m.data()).dist2);
    lower = std::max(lower, value);
    const double upper = value + model.cell_radius(box);
    if (upper > lower) queue.push(Cell{std::move(box), upper});
  };
  push(model.domain());
  while (!queue.empty()) {
    if (queue.top().upper <= lower + resolution) break;
    Cell cell = queue.top();
    queue.pop();
    if (cell.upper <= lower) continue;
    auto [a, b] = cell.box.split(scale);
    push(std::move(a));
    push(std::move(b));
  }
  return {lower, resolution};
}

namespace {

// Parameter cells whose radius is at most `radius`.
std::vector<ParamBox> reference_cells(const Manifold& model, double radius) {
  std::vector<ParamBox> done, todo{model.domain()};
  const Eigen::VectorXd scale = model.param_scale();
  while (!todo.empty()) {
    ParamBox box = std::move(todo.back());
    todo.pop_back();
    if (model.cell_radius(box) <= radius) {
      done.push_back(std::move(box));
      continue;
    }
    auto [a, b] = box.split(scale);
    todo.push_back(std::move(a));
    todo.push_back(std::move(b));
  }
  return done;
}

void require_noiseless(const Manifold& model, const PointCloud& cloud) {
  for (Index i = 0; i < cloud.size(); ++i)
    if (model.distance(cloud[i]) > 1e-7 * std::max(1.0, cloud[i].norm()))
      throw ArgumentError("t* diagnostics need a noiseless cloud");
}

bool covered_impl(const Manifold& model, const PointCloud& cloud, double t, double resolution) {
  const SimplicialComplex complex = reconstruct(cloud, t, model.intrinsic_dim());
  const double pitch = 0.5 * resolution;
  const double reach = model.reach();
  std::vector<Point> projected;
  std::vector<Index> verts;
  for (int k = 0; k < complex.dimension_count(); ++k) {
    const auto& list = complex.simplices(k);
    for (std::size_t s = 0; s < list.size(); ++s) {
      verts.assign(list.vertices(s).begin(), list.vertices(s).end());
      double diam = 0.0;
      for (Index a : verts)
        for (Index b : verts) diam = std::max(diam, (cloud[a] - cloud[b]).norm());
      const int m = std::max(1, static_cast<int>(std::ceil(diam / pitch)));
      // Barycentric grid with denominator m, enumerated by compositions.
      std::vector<int> counts(verts.size(), 0);
      std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int left) {
        if (pos + 1 == verts.size()) {
          counts[pos] = left;
          Point y = Point::Zero(cloud.dim());
          for (std::size_t c = 0; c < verts.size(); ++c) y += (static_cast<double>(counts[c]) / m) * cloud[verts[c]];
          if (model.distance(y) < reach) projected.push_back(model.nearest_point(y));
          return;
        }
        for (int c = 0; c <= left; ++c) {
          counts[pos] = c;
          rec(pos + 1, left - c);
        }
      };
      rec(0, m);
    }
  }
  if (projected.empty()) return false;
  const PointCloud proj = PointCloud::from_points(projected);
  const NeighborIndex index(proj);
  for (const ParamBox& box : reference_cells(model, 0.5 * resolution)) {
    const Point m = model.embed(box.center());
    if (index.nearest(m.data()).dist2 > resolution * resolution) return false;
  }
  return true;
}

}  // namespace

bool tstar_covered(const Manifold& model, const PointCloud& cloud, double t_probe, double resolution) {
  if (!(resolution > 0.0)) throw ArgumentError("t*: resolution must be positive");
  if (!(t_probe >= 0.0)) throw ArgumentError("t*: probe scale must be nonnegative");
  require_noiseless(model, cloud);
  return covered_impl(model, cloud, t_probe, resolution);
}

TStarResult tstar_estimate(const Manifold& model, const PointCloud& cloud, double resolution) {
  if (!(resolution > 0.0)) throw ArgumentError("t*: resolution must be positive");
  require_noiseless(model, cloud);
  TStarResult result;
  result.resolution = resolution;
  double hi = model.reach() * (1.0 - 1e-9);
  if (!covered_impl(model, cloud, hi, resolution)) return result;
  double lo = 0.0;
  if (covered_impl(model, cloud, lo, resolution)) {
    result.tstar = 0.0;
    return result;
  }
  while (hi - lo > 1e-3 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (covered_impl(model, cloud, mid, resolution))
      hi = mid;
    else
      lo = mid;
  }
  result.tstar = hi;
  return result;
}

}  // namespace tconv
