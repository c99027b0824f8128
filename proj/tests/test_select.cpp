#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tconv/manifolds.hpp"
#include "tconv/select.hpp"

using namespace tconv;

TEST_CASE("lambda grid") {
  const auto g = make_lambda_grid(0.01);
  CHECK(g.size() == 101);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(std::is_sorted(g.begin(), g.end()));
  const auto h = make_lambda_grid(0.3);
  CHECK(h == std::vector<double>{0.0, 0.3, 0.6, 0.8999999999999999, 1.0});
  CHECK_THROWS_AS(make_lambda_grid(0.0), ArgumentError);
}

TEST_CASE("jump detection") {
  const std::vector<double> grid = {0, 0.25, 0.5, 0.75, 1.0};
  CHECK_FALSE(detect_jump({1, 1, 1, 1, 1}, grid).has_value());
  CHECK(detect_jump({1, 1, 1, 10, 12}, grid) == std::optional<std::size_t>(2));
  CHECK_FALSE(detect_jump({1, 1.4, 1.8, 2.2, 2.6}, grid).has_value());
  CHECK_THROWS_AS(detect_jump({1, 2}, grid), ArgumentError);
}

TEST_CASE("g curve") {
  const PointCloud c = PointCloud::from_rows({{0.0}, {1.0}, {2.0}});
  const NeighborIndex index(c);
  const DefectProfile p = graph_defect_profile(c, index, 2);
  const auto g = g_curve(p, {0.0, 0.6, 1.0});
  CHECK(g[0] == doctest::Approx(1.0 / p.horizon));
  CHECK(g[1] == 1.0);
  CHECK(g[2] == 2.0);
  CHECK_THROWS_AS(g_curve(p, {}), ArgumentError);
  CHECK_THROWS_AS(g_curve(p, {0.5, 0.2}), ArgumentError);
}

TEST_CASE("selection result is self-consistent") {
  const auto circle = make_circle();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Sample s = sample(*circle, 200, NoiseSpec::parse("tubular:0.05"), seed);
    const SelectionResult r = select_scale(s.points);
    CHECK(r.lambda_grid.size() == 101);
    CHECK(r.g_values.size() == 101);
    REQUIRE_FALSE(r.k_trace.empty());
    for (std::size_t m = 1; m < r.k_trace.size(); ++m)
      CHECK(r.k_trace[m].k == std::min<int>(2 * r.k_trace[m - 1].k, 199));
    if (r.converged) {
      REQUIRE(r.jump_index.has_value());
      CHECK(r.lambda_choice == doctest::Approx(0.8 * r.lambda_grid[*r.jump_index]));
      CHECK(r.t_sel == t_lambda(r.profile, r.lambda_choice).t);
      CHECK(r.t_sel < r.profile.horizon);
    }
    for (std::size_t l = 1; l < r.g_values.size(); ++l) CHECK(r.g_values[l] >= r.g_values[l - 1]);
  }
}

TEST_CASE("jump index is invariant under rescaling") {
  const auto torus = make_torus();
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Sample s = sample(*torus, 1500, NoiseSpec{}, seed);
    const SelectionResult a = select_scale(s.points);
    const SelectionResult b = select_scale(PointCloud(2.5 * s.points.matrix()));
    CHECK(a.jump_index == b.jump_index);
    CHECK(b.t_sel == doctest::Approx(2.5 * a.t_sel).epsilon(1e-9));
  }
}

TEST_CASE("selection needs three points and falls back without a jump") {
  CHECK_THROWS_AS(select_scale(PointCloud::from_rows({{0.0}, {1.0}})), ArgumentError);
  // Evenly spaced points on a line: h equals the spacing until the horizon,
  // so g stays flat and no jump is found.
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 40; ++i) rows.push_back({double(i)});
  SelectConfig config;
  config.k0 = 1;
  config.max_k = 2;
  const SelectionResult r = select_scale(PointCloud::from_rows(rows), config);
  CHECK(r.k_trace.back().k == 2);
  if (!r.jump_index) {
    CHECK_FALSE(r.converged);
    CHECK(r.lambda_choice == 0.5);
  }
}

TEST_CASE("selection is independent of the thread count") {
  const auto torus = make_torus();
  const Sample s = sample(*torus, 2000, NoiseSpec{}, 9);
  SelectConfig one, four;
  four.threads = 4;
  const SelectionResult a = select_scale(s.points, one), b = select_scale(s.points, four);
  CHECK(a.g_values == b.g_values);
  CHECK(a.t_sel == b.t_sel);
  CHECK(a.profile.values == b.profile.values);
}
