#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "tconv/estimate.hpp"
#include "tconv/geom.hpp"
#include "tconv/manifolds.hpp"

using namespace tconv;

namespace {

using SimplexSet = std::set<std::vector<Index>>;

SimplexSet as_set(const SimplicialComplex& c, int k) {
  SimplexSet out;
  const SimplexList& list = c.simplices(k);
  for (std::size_t s = 0; s < list.size(); ++s) {
    const auto v = list.vertices(s);
    out.emplace(v.begin(), v.end());
  }
  return out;
}

// All vertex subsets of size k + 1 whose enclosing ball has radius at most t.
SimplexSet brute_simplices(const PointCloud& c, double t, int k) {
  SimplexSet out;
  std::vector<Index> cur;
  const std::function<void(Index)> rec = [&](Index start) {
    if (static_cast<int>(cur.size()) == k + 1) {
      std::vector<Point> pts;
      for (Index i : cur) pts.push_back(c[i]);
      if (oracle::meb_radius(pts) <= t) out.insert(cur);
      return;
    }
    for (Index i = start; i < c.size(); ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

PointCloud circle_ngon(int n) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n; ++i) rows.push_back({std::cos(2 * M_PI * i / n), std::sin(2 * M_PI * i / n)});
  return PointCloud::from_rows(rows);
}

}  // namespace

TEST_CASE("reconstruction of small sets") {
  const PointCloud line = PointCloud::from_rows({{0.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}});
  const SimplicialComplex c = reconstruct(line, 0.5, 2);
  CHECK(c.simplices(0).size() == 3);
  CHECK(as_set(c, 1) == SimplexSet{{0, 1}});
  CHECK(c.simplices(2).size() == 0);
  CHECK(c.simplices(1).radius(0) == doctest::Approx(0.5));
  const SimplicialComplex tri = reconstruct(
      PointCloud::from_rows({{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2}}), 1.0 / std::sqrt(3.0) + 1e-12, 2);
  CHECK(tri.simplices(2).size() == 1);
  const SimplicialComplex open = reconstruct(
      PointCloud::from_rows({{0.0, 0.0}, {1.0, 0.0}, {0.5, std::sqrt(3.0) / 2}}), 0.57, 2);
  CHECK(open.simplices(1).size() == 3);
  CHECK(open.simplices(2).size() == 0);
  CHECK(reconstruct(line, 0.0, 1).total() == 3);
  CHECK_THROWS_AS(reconstruct(line, -1.0, 1), ArgumentError);
  CHECK_THROWS_AS(reconstruct(line, 1.0, 3), ArgumentError);
}

TEST_CASE("reconstruction matches brute force and is face closed") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 40; ++trial) {
    const int dim = 1 + trial % 3;
    const PointCloud c = oracle::random_cloud(rng, 6 + trial % 7, dim);
    const double t = 0.1 + 0.05 * (trial % 8);
    const SimplicialComplex cx = reconstruct(c, t, dim);
    for (int k = 1; k <= dim; ++k) {
      const SimplexSet got = as_set(cx, k);
      CHECK(got == brute_simplices(c, t, k));
      const SimplexList& list = cx.simplices(k);
      for (std::size_t s = 0; s < list.size(); ++s) CHECK(list.radius(s) <= t);
      for (const auto& s : got) {
        for (std::size_t drop = 0; drop < s.size() && k > 1; ++drop) {
          std::vector<Index> face = s;
          face.erase(face.begin() + static_cast<long>(drop));
          CHECK(as_set(cx, k - 1).count(face) == 1);
        }
      }
    }
  }
}

TEST_CASE("reconstruction grows with the scale") {
  std::mt19937_64 rng(52);
  const PointCloud c = oracle::random_cloud(rng, 60, 3);
  const SimplicialComplex a = reconstruct(c, 0.15, 3), b = reconstruct(c, 0.25, 3);
  for (int k = 0; k <= 3; ++k) {
    const SimplexSet sa = as_set(a, k), sb = as_set(b, k);
    CHECK(std::includes(sb.begin(), sb.end(), sa.begin(), sa.end()));
  }
}

TEST_CASE("risk of a noiseless sample is at most max(eps, t)") {
  const auto circle = make_circle();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Sample s = sample(*circle, 40, NoiseSpec{}, seed);
    const double res = 1e-3;
    const Estimate eps = epsilon_rate(*circle, s.points, res);
    for (double t : {0.05, 0.1, 0.3}) {
      const Estimate risk = reconstruction_risk(s.points, t, 1, *circle, res);
      CHECK(risk.value <= std::max(eps.value + eps.error_bar, t) + 1e-9);
    }
  }
}

TEST_CASE("risk at scale zero is the approximation rate") {
  const auto circle = make_circle();
  const PointCloud ngon = circle_ngon(12);
  const double truth = 2 * std::sin(M_PI / 24);
  const Estimate r = reconstruction_risk(ngon, 0.0, 1, *circle, 1e-4);
  CHECK(r.value <= truth + 1e-12);
  CHECK(r.value + r.error_bar >= truth - 1e-12);
  const Estimate one = reconstruction_risk(PointCloud::from_rows({{1.0, 0.0}}), 0.3, 1, *circle, 1e-3);
  CHECK(one.value == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("risk of the regular polygon at its edge scale") {
  // Edges are chords at depth 1 - cos(pi / n); the gap midpoint is covered.
  const auto circle = make_circle();
  const int n = 12;
  const PointCloud ngon = circle_ngon(n);
  const double t = std::sin(M_PI / n) + 1e-9;
  const Estimate r = reconstruction_risk(ngon, t, 1, *circle, 1e-5);
  const double truth = 1 - std::cos(M_PI / n);
  CHECK(r.value <= truth + 1e-9);
  CHECK(r.value + r.error_bar >= truth - 1e-9);
}

TEST_CASE("stored and streaming risk agree") {
  const auto torus = make_torus();
  const Sample s = sample(*torus, 400, NoiseSpec::parse("ambient:0.05"), 3);
  const double res = 0.01;
  const double t = 0.9;
  const Estimate a = reconstruction_risk(s.points, t, 2, *torus, res);
  const Estimate b = reconstruction_risk(reconstruct(s.points, t, 2), s.points, *torus, res);
  CHECK(a.value <= b.value + b.error_bar + 1e-9);
  CHECK(b.value <= a.value + a.error_bar + 1e-9);
  CHECK_THROWS_AS(reconstruction_risk(s.points, t, 2, *torus, 0.0), ArgumentError);
  CHECK_THROWS_AS(reconstruction_risk(s.points, t, 1, *make_circle(), res), ArgumentError);
}

TEST_CASE("risk does not depend on the thread count") {
  const auto circle = make_circle();
  const Sample s = sample(*circle, 300, NoiseSpec::parse("tubular:0.02"), 4);
  RiskOptions four;
  four.threads = 4;
  const Estimate a = reconstruction_risk(s.points, 0.08, 1, *circle, 1e-3);
  const Estimate b = reconstruction_risk(s.points, 0.08, 1, *circle, 1e-3, four);
  CHECK(a.value == b.value);
}

TEST_CASE("oracle scale") {
  const double f = 1.0 / (2 * M_PI);
  CHECK(oracle_scale(100, 1, f) == doctest::Approx(1.75 * 3 * std::log(100.0) * 2 * M_PI / 200).epsilon(1e-12));
  const double torus_f = 1.0 / (16 * M_PI * M_PI);
  CHECK(oracle_scale(1000, 2, torus_f) ==
        doctest::Approx(1.75 * std::sqrt(3 * std::log(1000.0) / (M_PI * torus_f * 1000))).epsilon(1e-12));
  CHECK(oracle_scale(4000, 2, torus_f) < oracle_scale(1000, 2, torus_f));
  CHECK_THROWS_AS(oracle_scale(1, 1, 1.0), ArgumentError);
  CHECK_THROWS_AS(oracle_scale(10, 0, 1.0), ArgumentError);
  CHECK_THROWS_AS(oracle_scale(10, 1, 0.0), ArgumentError);
}

TEST_CASE("tangent estimates") {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({double(i), 0.0, 0.0});
  const PointCloud line = PointCloud::from_rows(rows);
  const NeighborIndex li(line);
  const Subspace u = tangent_estimate(line, li, 4, 2.5, 1);
  CHECK(std::abs(u.basis()(0, 0)) == doctest::Approx(1.0));
  CHECK(tangent_sup_residual(line, li, 4, 2.5, u) <= 1e-12);
  CHECK_THROWS_AS(tangent_estimate(line, li, 4, 0.5, 1), InsufficientNeighborsError);
  const Subspace full = tangent_estimate(line, li, 4, 0.0, 3);
  CHECK((full.basis() - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
  CHECK_THROWS_AS(tangent_estimate(line, li, 10, 1.0, 1), ArgumentError);
  CHECK_THROWS_AS(tangent_estimate(line, li, 0, 1.0, 4), ArgumentError);

  const auto circle = make_circle();
  const PointCloud ngon = circle_ngon(360);
  const NeighborIndex ci(ngon);
  for (double t : {0.05, 0.1, 0.2}) {
    for (Index i = 0; i < ngon.size(); i += 45) {
      const double angle = subspace_angle(tangent_estimate(ngon, ci, i, t, 1), circle->tangent_at(ngon[i]));
      CHECK(angle <= t);
      TangentOptions refine;
      refine.refine = true;
      const Subspace r = tangent_estimate(ngon, ci, i, t, 1, refine);
      CHECK(tangent_sup_residual(ngon, ci, i, t, r) <=
            tangent_sup_residual(ngon, ci, i, t, tangent_estimate(ngon, ci, i, t, 1)) + 1e-15);
    }
  }
}
