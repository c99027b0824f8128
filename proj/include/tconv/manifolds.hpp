#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tconv/common.hpp"
#include "tconv/rng.hpp"

namespace tconv {

enum class Family { circle, torus, swiss_roll, bumped_sphere };

std::string to_string(Family family);
Family family_from_string(const std::string& s);  // accepts "swissroll" and "bumped-sphere" spellings

/// Axis-aligned box in parameter space.
struct ParamBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  /// Halves along the widest (relative to `scale`) axis.
  std::pair<ParamBox, ParamBox> split(const Eigen::VectorXd& scale) const;
};

class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual Family family() const = 0;
  virtual int intrinsic_dim() const = 0;
  virtual int ambient_dim() const = 0;
  /// Analytic where known, a computed value otherwise.
  virtual double reach() const = 0;
  /// Total d-volume, when finite and known in closed form.
  virtual std::optional<double> volume() const { return std::nullopt; }
  /// Family parameters as written to and read from model configs.
  virtual nlohmann::json params() const = 0;

  /// One draw of the base (noiseless) law.
  virtual Point sample_base(StreamRng& rng) const = 0;

  /// Distance from any point of the ambient space to M.
  virtual double distance(const Point& p) const = 0;
  /// A nearest point of M, without the reach check.
  virtual Point nearest_point(const Point& p) const = 0;
  /// Consulted by project() outside the reach tube.  Conservative by default.
  virtual bool projection_unique(const Point& /*p*/) const { return false; }
  /// Nearest point; throws AmbiguityError when d(p, M) >= reach and the
  /// nearest point is not known to be unique.
  Point project(const Point& p) const;

  /// Orthonormal tangent basis at a point of M (within tol.on_manifold).
  virtual Subspace tangent_at(const Point& p) const = 0;
  /// Orthonormal basis of the normal space at a point of M.
  Eigen::MatrixXd normal_basis(const Point& p) const;

  /// Parametrization used for reference nets: embed maps the domain box onto M.
  virtual ParamBox domain() const = 0;
  virtual Point embed(const Eigen::VectorXd& param) const = 0;
  /// Upper bound on |embed(q) - embed(box.center())| over q in the box.
  virtual double cell_radius(const ParamBox& box) const = 0;
  /// Per-axis scale used to choose split directions.
  virtual Eigen::VectorXd param_scale() const = 0;

  /// Upper bound on sup over Conv(columns of `vertices`) of distance(), when
  /// the family has one that tightens quadratically under subdivision.
  virtual std::optional<double> hull_distance_bound(const Eigen::MatrixXd& /*vertices*/) const {
    return std::nullopt;
  }

 protected:
  void require_on_manifold(const Point& p) const;
};

using ManifoldPtr = std::shared_ptr<const Manifold>;

/// Circle of radius tau in the plane spanned by a frame of R^D.  For D = 2 the
/// frame is the identity; otherwise it is the orthonormalized seeded Gaussian
/// D x 2 matrix.
ManifoldPtr make_circle(double tau = 1.0, int ambient_dim = 2, std::uint64_t frame_seed = 0);
/// Torus of revolution with tube radius r and center-circle radius R.
ManifoldPtr make_torus(double r = 1.0, double R = 4.0);
/// (u cos u, y, u sin u), u in [u_min, u_max], y in [0, height].
ManifoldPtr make_swiss_roll(double u_min = 1.5 * 3.14159265358979323846, double u_max = 4.5 * 3.14159265358979323846,
                            double height = 21.0);

struct BumpParams {
  double radius = 1.0;      // sphere radius R
  double delta = 0.2;       // bump width
  double height = 0.01;     // bump height
  std::uint64_t sign_seed = 0;
  std::vector<Point> sites;  // 4 delta separated, even count
  std::vector<int> signs;    // +-1 per site
};

/// Sites by greedy farthest-point selection on the sphere, signs from the seed.
BumpParams make_bump_params(double radius, double delta, double height, std::uint64_t sign_seed);

/// Bump profile: 1 on [-1, 1], 0 outside [-2, 2], smooth in between.
double bump_profile(double x);
double bump_profile_derivative(double x);
/// sup |phi| and sup |phi'| computed numerically.
double bump_profile_sup();
double bump_profile_derivative_sup();
/// Constant c1 with sup ||Id - dPhi|| <= c1 * height / delta when delta <= R.
double bump_lipschitz_constant();

class BumpedSphere;
std::shared_ptr<const BumpedSphere> make_bumped_sphere(BumpParams params);

/// The deformation x -> x (1 + (eps / R) sum_y s(y) phi(|x - y| / delta)).
class BumpedSphere final : public Manifold {
 public:
  explicit BumpedSphere(BumpParams params);

  const BumpParams& bumps() const { return params_; }
  Point deform(const Point& x) const;
  Eigen::Matrix3d deform_jacobian(const Point& x) const;
  /// Sites are 4 delta separated and c0 eps / delta < 1 with c0 = c1.
  bool is_diffeomorphism() const;

  Family family() const override { return Family::bumped_sphere; }
  int intrinsic_dim() const override { return 2; }
  int ambient_dim() const override { return 3; }
  double reach() const override;
  nlohmann::json params() const override;
  Point sample_base(StreamRng& rng) const override;
  double distance(const Point& p) const override;
  Point nearest_point(const Point& p) const override;
  Subspace tangent_at(const Point& p) const override;
  ParamBox domain() const override;
  Point embed(const Eigen::VectorXd& param) const override;
  double cell_radius(const ParamBox& box) const override;
  Eigen::VectorXd param_scale() const override;

 private:
  double bump_sum(const Point& x, Eigen::Vector3d* gradient_dir) const;
  BumpParams params_;
};

/// Builds a model from {"family", "params"}; missing params take defaults.
ManifoldPtr make_manifold(const nlohmann::json& spec);

struct NoiseSpec {
  enum class Kind { none, tubular, ambient };
  Kind kind = Kind::none;
  double gamma = 0.0;

  /// "none", "tubular:G" or "ambient:G".
  static NoiseSpec parse(const std::string& text);
  std::string to_string() const;
};

struct Sample {
  PointCloud points;  // observed cloud
  PointCloud clean;   // underlying points on M (equal to points when noiseless)
};

struct SampleOptions {
  bool stratified = false;  // circle only: one angle per stratum of width 2 pi / n
};

/// Deterministic for fixed seed; point i depends only on (seed, i).
Sample sample(const Manifold& model, Index n, const NoiseSpec& noise, std::uint64_t seed,
              const SampleOptions& options = {});

struct Estimate {
  double value = 0.0;
  double error_bar = 0.0;  // true value lies in [value, value + error_bar]
};

/// d_H(cloud, M).  The cloud-to-M direction is exact; the M-to-cloud
/// direction is a branch and bound over parameter cells.
Estimate epsilon_rate(const Manifold& model, const PointCloud& cloud, double resolution);

/// Default resolution: reach / 200.
double default_resolution(const Manifold& model);

/// Does the projection of Conv_d(t, cloud) cover M up to the resolution?
bool tstar_covered(const Manifold& model, const PointCloud& cloud, double t_probe, double resolution);

struct TStarResult {
  std::optional<double> tstar;  // empty when coverage never happens below the reach
  double resolution = 0.0;
};

/// Bisection on the coverage predicate to relative tolerance 1e-3.
TStarResult tstar_estimate(const Manifold& model, const PointCloud& cloud, double resolution);

}  // namespace tconv
