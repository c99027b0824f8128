#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tconv/geom.hpp"
#include "tconv/manifolds.hpp"

using namespace tconv;

namespace {

Point pt(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) p[k++] = x;
  return p;
}

std::vector<ManifoldPtr> all_models() {
  return {make_circle(), make_circle(2.0, 5, 3), make_torus(), make_swiss_roll(),
          make_bumped_sphere(make_bump_params(1.0, 0.2, 0.01, 4))};
}

}  // namespace

TEST_CASE("family names") {
  CHECK(family_from_string("swissroll") == Family::swiss_roll);
  CHECK(family_from_string("bumped-sphere") == Family::bumped_sphere);
  CHECK(to_string(Family::torus) == "torus");
  CHECK_THROWS_AS(family_from_string("klein"), ArgumentError);
}

TEST_CASE("reach values") {
  CHECK(make_circle(2.5)->reach() == 2.5);
  CHECK(make_torus()->reach() == 1.0);
  // Federer reach of the planar spiral is bounded by the curvature radius
  // at the innermost turn and the gap between consecutive turns.
  const double sr = make_swiss_roll()->reach();
  const double u0 = 1.5 * M_PI;
  CHECK(sr > 0.0);
  CHECK(sr <= std::pow(1 + u0 * u0, 1.5) / (2 + u0 * u0) + 1e-9);
  CHECK(sr <= M_PI + 1e-6);
  const auto bumped = make_bumped_sphere(make_bump_params(1.0, 0.2, 0.01, 4));
  CHECK(bumped->reach() > 0.0);
  CHECK(bumped->reach() < 1.0);
}

TEST_CASE("samplers land on their surfaces") {
  const Sample c = sample(*make_circle(), 4, NoiseSpec{}, 1, SampleOptions{true});
  for (Index i = 0; i < 4; ++i) CHECK(std::abs(c.points[i].norm() - 1.0) <= 1e-12);
  const Sample t = sample(*make_torus(), 2000, NoiseSpec{}, 2);
  for (Index i = 0; i < t.points.size(); ++i) {
    const auto p = t.points[i];
    const double rho = std::hypot(p[0], p[1]);
    CHECK(std::abs((rho - 4) * (rho - 4) + p[2] * p[2] - 1) <= 1e-12);
  }
  for (const auto& m : all_models()) {
    const Sample s = sample(*m, 300, NoiseSpec{}, 3);
    for (Index i = 0; i < s.points.size(); ++i) CHECK(m->distance(s.points[i]) <= 1e-10);
  }
}

TEST_CASE("sampling is deterministic per seed") {
  const auto torus = make_torus();
  const Sample a = sample(*torus, 500, NoiseSpec::parse("ambient:0.1"), 7);
  const Sample b = sample(*torus, 500, NoiseSpec::parse("ambient:0.1"), 7);
  const Sample c = sample(*torus, 500, NoiseSpec::parse("ambient:0.1"), 8);
  CHECK(a.points.matrix() == b.points.matrix());
  CHECK(a.points.matrix() != c.points.matrix());
  // Point i depends only on (seed, i).
  const Sample d = sample(*torus, 100, NoiseSpec::parse("ambient:0.1"), 7);
  CHECK(d.points.matrix() == a.points.matrix().leftCols(100));
}

TEST_CASE("tubular noise is normal and bounded") {
  const auto circle = make_circle();
  const Sample s = sample(*circle, 500, NoiseSpec::parse("tubular:0.1"), 4);
  for (Index i = 0; i < s.points.size(); ++i) {
    const Point z = s.points[i] - s.clean[i];
    CHECK(z.norm() <= 0.1 + 1e-12);
    const Subspace tan = circle->tangent_at(s.clean[i]);
    CHECK(std::abs(tan.basis().col(0).dot(z)) <= 1e-10);
  }
  const Sample a = sample(*make_torus(), 300, NoiseSpec::parse("ambient:0.2"), 5);
  for (Index i = 0; i < a.points.size(); ++i) CHECK((a.points[i] - a.clean[i]).norm() <= 0.2 + 1e-12);
  CHECK_THROWS_AS(sample(*circle, 10, NoiseSpec::parse("tubular:1.0"), 1), ArgumentError);
  CHECK_THROWS_AS(NoiseSpec::parse("gaussian:1"), ArgumentError);
  CHECK_THROWS_AS(sample(*circle, 0, NoiseSpec{}, 1), ArgumentError);
  CHECK_THROWS_AS(sample(*make_torus(), 10, NoiseSpec{}, 1, SampleOptions{true}), ArgumentError);
}

TEST_CASE("projections") {
  const auto circle = make_circle();
  CHECK((circle->project(pt({2, 0})) - pt({1, 0})).norm() <= 1e-12);
  CHECK_THROWS_AS(circle->project(pt({0, 0})), AmbiguityError);
  const auto torus = make_torus();
  CHECK((torus->project(pt({6, 0, 0})) - pt({5, 0, 0})).norm() <= 1e-12);
  CHECK_THROWS_AS(torus->project(pt({4, 0, 0})), AmbiguityError);
  std::mt19937_64 rng(41);
  for (const auto& m : all_models()) {
    const Sample s = sample(*m, 50, NoiseSpec::parse("tubular:" + std::to_string(0.3 * m->reach())), 6);
    for (Index i = 0; i < s.points.size(); ++i) {
      const Point p = m->project(s.points[i]);
      CHECK((m->project(p) - p).norm() <= 1e-9);
      CHECK((m->project(s.clean[i]) - s.clean[i]).norm() <= 1e-9);
      CHECK((p - s.points[i]).norm() <= m->distance(s.points[i]) + 1e-9);
    }
  }
}

TEST_CASE("tangent spaces") {
  const auto circle = make_circle();
  const Subspace t = circle->tangent_at(pt({1, 0}));
  CHECK(subspace_angle(t, Subspace(pt({0, 0}), Eigen::MatrixXd(pt({0, 1})))) <= 1e-12);
  const Subspace tt = make_torus()->tangent_at(pt({5, 0, 0}));
  Eigen::MatrixXd yz(3, 2);
  yz << 0, 0, 1, 0, 0, 1;
  CHECK(subspace_angle(tt, Subspace(Point::Zero(3), yz)) <= 1e-12);
  CHECK(subspace_angle(tt, tt) == 0.0);
  CHECK_THROWS_AS(circle->tangent_at(pt({1.1, 0})), ArgumentError);
  for (const auto& m : all_models()) {
    const Sample s = sample(*m, 20, NoiseSpec{}, 7);
    for (Index i = 0; i < s.points.size(); ++i) {
      const Eigen::MatrixXd nb = m->normal_basis(s.points[i]);
      const Subspace ts = m->tangent_at(s.points[i]);
      CHECK((nb.transpose() * ts.basis()).norm() <= 1e-10);
    }
  }
}

TEST_CASE("normal displacement is quadratic in the distance") {
  for (const auto& m : all_models()) {
    const Sample s = sample(*m, 200, NoiseSpec{}, 8);
    const double tau = m->reach();
    for (Index i = 0; i + 1 < s.points.size(); i += 2) {
      const Point x = s.points[i], y = s.points[i + 1];
      const Subspace tx = m->tangent_at(x);
      const Point d = y - x;
      const Point perp = d - tx.basis() * (tx.basis().transpose() * d);
      CHECK(perp.norm() <= d.squaredNorm() / (2 * tau) + 1e-9);
    }
  }
}

TEST_CASE("torus sampling is area uniform") {
  const auto torus = make_torus();
  const int n = 100000, bins = 20;
  const Sample s = sample(*torus, n, NoiseSpec{}, 9);
  std::vector<double> count(bins, 0.0), expected(bins, 0.0);
  for (Index i = 0; i < n; ++i) {
    const auto p = s.points[i];
    const double theta = std::atan2(p[2], std::hypot(p[0], p[1]) - 4.0);
    const int b = std::min(bins - 1, static_cast<int>((theta + M_PI) / (2 * M_PI) * bins));
    count[b] += 1;
  }
  // Bin mass is proportional to the integral of R + r cos(theta).
  for (int b = 0; b < bins; ++b) {
    const double lo = -M_PI + 2 * M_PI * b / bins, hi = lo + 2 * M_PI / bins;
    expected[b] = n * (4.0 * (hi - lo) + (std::sin(hi) - std::sin(lo))) / (8.0 * M_PI);
  }
  double chi2 = 0.0;
  for (int b = 0; b < bins; ++b) chi2 += (count[b] - expected[b]) * (count[b] - expected[b]) / expected[b];
  CHECK(chi2 < 36.19);  // 99th percentile of chi-square with 19 degrees of freedom
}

TEST_CASE("ball volumes on the torus") {
  const auto torus = make_torus();
  const int n = 100000;
  const Sample s = sample(*torus, n, NoiseSpec{}, 10);
  const NeighborIndex index(s.points);
  const double area = *torus->volume();
  // Counts are Poisson-like; allow four standard deviations around the
  // curvature bounds on the ball mass.
  for (double r : {0.2, 0.25}) {
    const double flat = n * M_PI * r * r / area;
    const double lo = flat * std::pow(1 - r * r / 3, 2), hi = flat * std::pow(13.0 / 12.0, 2);
    for (Index i = 0; i < n; i += 5000) {
      const double count = static_cast<double>(index.radius_query(s.points.ptr(i), r).size()) - 1;
      CHECK(count >= lo - 4 * std::sqrt(lo));
      CHECK(count <= hi + 4 * std::sqrt(hi));
    }
  }
}

TEST_CASE("approximation rate") {
  const auto circle = make_circle();
  for (int n : {3, 8, 50}) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < n; ++i) rows.push_back({std::cos(2 * M_PI * i / n), std::sin(2 * M_PI * i / n)});
    const Estimate e = epsilon_rate(*circle, PointCloud::from_rows(rows), 1e-4);
    const double truth = 2 * std::sin(M_PI / (2 * n));
    CHECK(e.value <= truth + 1e-12);
    CHECK(e.value + e.error_bar >= truth - 1e-12);
  }
  const Estimate one = epsilon_rate(*circle, PointCloud::from_rows({{1.0, 0.0}}), 1e-3);
  CHECK(one.value == doctest::Approx(2.0).epsilon(1e-3));
  CHECK_THROWS_AS(epsilon_rate(*circle, PointCloud::from_rows({{1.0, 0.0}}), 0.0), ArgumentError);
  CHECK(default_resolution(*circle) == doctest::Approx(0.005));
}

TEST_CASE("t* diagnostics") {
  const auto circle = make_circle();
  const int n = 60;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n; ++i) rows.push_back({std::cos(2 * M_PI * i / n), std::sin(2 * M_PI * i / n)});
  const PointCloud net = PointCloud::from_rows(rows);
  const double spacing = 2 * std::sin(M_PI / n);
  const double res = 0.2 * spacing;
  CHECK(tstar_covered(*circle, net, spacing, res));
  CHECK_FALSE(tstar_covered(*circle, net, 0.0, res));
  const TStarResult ts = tstar_estimate(*circle, net, res);
  REQUIRE(ts.tstar.has_value());
  const double eps = epsilon_rate(*circle, net, 1e-5).value;
  const double tstar = *ts.tstar;
  CHECK(eps <= tstar * (1 + tstar) + 2 * res);
  CHECK(tstar <= eps * (1 + 6 * eps) + 2 * res);
  const Sample noisy = sample(*circle, 30, NoiseSpec::parse("tubular:0.1"), 1);
  CHECK_THROWS_AS(tstar_estimate(*circle, noisy.points, res), ArgumentError);
}

TEST_CASE("bump profile") {
  CHECK(bump_profile(0.0) == 1.0);
  CHECK(bump_profile(1.0) == 1.0);
  CHECK(bump_profile(-1.0) == 1.0);
  CHECK(bump_profile(2.0) == 0.0);
  CHECK(bump_profile(2.5) == 0.0);
  CHECK(bump_profile(1.5) == doctest::Approx(0.5));
  for (double x = -2.5; x <= 2.5; x += 0.01) {
    CHECK(bump_profile(x) >= 0.0);
    CHECK(bump_profile(x) <= 1.0);
    const double fd = (bump_profile(x + 1e-6) - bump_profile(x - 1e-6)) / 2e-6;
    CHECK(bump_profile_derivative(x) == doctest::Approx(fd).epsilon(1e-4).scale(1.0));
  }
  CHECK(bump_profile_sup() == doctest::Approx(1.0));
  CHECK(bump_profile_derivative_sup() == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(bump_lipschitz_constant() == doctest::Approx(7.0).epsilon(1e-3));
}

TEST_CASE("bump sites and deformation") {
  const BumpParams p = make_bump_params(1.0, 0.1, 0.005, 11);
  CHECK(p.sites.size() % 2 == 0);
  CHECK(p.sites.size() >= 2);
  for (std::size_t a = 0; a < p.sites.size(); ++a) {
    CHECK(std::abs(p.sites[a].norm() - 1.0) <= 1e-12);
    for (std::size_t b = a + 1; b < p.sites.size(); ++b) CHECK((p.sites[a] - p.sites[b]).norm() >= 4 * 0.1);
  }
  const auto bumped = make_bumped_sphere(p);
  CHECK(bumped->is_diffeomorphism());
  // Away from every site the sphere is untouched; at a site the radius moves by the height.
  CHECK((bumped->deform(p.sites[0]) - p.sites[0] * (1 + p.signs[0] * 0.005)).norm() <= 1e-12);
  const auto high = make_bumped_sphere(make_bump_params(1.0, 0.1, 0.05, 11));
  CHECK_FALSE(high->is_diffeomorphism());
  CHECK_THROWS_AS(make_bump_params(1.0, 2.0, 0.01, 1), ArgumentError);
}

TEST_CASE("model configs") {
  const auto m = make_manifold({{"family", "torus"}, {"params", {{"r", 0.5}, {"R", 2.0}}}});
  CHECK(m->reach() == 0.5);
  CHECK(make_manifold({{"family", "circle"}})->ambient_dim() == 2);
  CHECK(make_manifold({{"family", "circle"}, {"params", {{"ambient_dim", 100}}}})->ambient_dim() == 100);
  CHECK_THROWS_AS(make_manifold({{"params", {}}}), ArgumentError);
  const auto again = make_manifold({{"family", "bumped-sphere"}, {"params", make_bumped_sphere(make_bump_params(1.0, 0.2, 0.01, 3))->params()}});
  CHECK(again->family() == Family::bumped_sphere);
}

TEST_CASE("circle frames in high dimension are orthonormal and seeded") {
  const auto a = make_circle(1.0, 100, 5), b = make_circle(1.0, 100, 5), c = make_circle(1.0, 100, 6);
  const Sample sa = sample(*a, 10, NoiseSpec{}, 1), sb = sample(*b, 10, NoiseSpec{}, 1), sc = sample(*c, 10, NoiseSpec{}, 1);
  CHECK(sa.points.matrix() == sb.points.matrix());
  CHECK(sa.points.matrix() != sc.points.matrix());
  for (Index i = 0; i < 10; ++i) CHECK(std::abs(sa.points[i].norm() - 1.0) <= 1e-12);
}
