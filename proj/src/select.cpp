#include "tconv/select.hpp"

#include <algorithm>
#include <cmath>

namespace tconv {

std::vector<double> make_lambda_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ArgumentError("lambda grid step must lie in (0, 1]");
  std::vector<double> grid;
  const double steps = 1.0 / step;
  const auto whole = static_cast<long>(std::llround(steps));
  if (std::abs(steps - static_cast<double>(whole)) < 1e-9) {
    for (long i = 0; i <= whole; ++i) grid.push_back(static_cast<double>(i) / static_cast<double>(whole));
    return grid;
  }
  for (long i = 0; static_cast<double>(i) * step < 1.0; ++i) grid.push_back(static_cast<double>(i) * step);
  grid.push_back(1.0);
  return grid;
}

std::vector<double> g_curve(const DefectProfile& profile, const std::vector<double>& grid) {
  if (grid.empty()) throw ArgumentError("g_curve: empty grid");
  std::vector<double> g;
  g.reserve(grid.size());
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const double lambda = grid[l];
    if (lambda < 0.0 || lambda > 1.0) throw ArgumentError("g_curve: grid must lie in [0, 1]");
    if (l > 0 && lambda < grid[l - 1]) throw ArgumentError("g_curve: grid must be ascending");
    const double t = lambda == 0.0 || profile.empty() ? profile.horizon : t_lambda(profile, lambda).t;
    g.push_back(1.0 / t);
  }
  return g;
}

std::optional<std::size_t> detect_jump(const std::vector<double>& g_values, const std::vector<double>& grid,
                                       double threshold) {
  if (g_values.size() != grid.size()) throw ArgumentError("detect_jump: grid and g lengths differ");
  if (g_values.size() < 2) throw ArgumentError("detect_jump: need at least two grid values");
  const double bar = threshold * g_values.front();
  for (std::size_t l = 0; l + 1 < g_values.size(); ++l)
    if (g_values[l + 1] - g_values[l] > bar) return l;
  return std::nullopt;
}

SelectionResult select_scale(const PointCloud& cloud, const SelectConfig& config) {
  const Index n = cloud.size();
  if (n < 3) throw ArgumentError("select_scale: need at least 3 points");
  if (config.k0 < 1) throw ArgumentError("select_scale: K0 must be positive");
  const int cap = static_cast<int>(std::min<Index>(config.max_k > 0 ? config.max_k : n - 1, n - 1));
  const NeighborIndex index(cloud);

  SelectionResult result;
  result.lambda_grid = make_lambda_grid(config.grid_step);
  int k = std::min(config.k0, cap);
  for (;;) {
    result.profile = graph_defect_profile(cloud, index, k, config.threads);
    result.g_values = g_curve(result.profile, result.lambda_grid);
    result.jump_index = detect_jump(result.g_values, result.lambda_grid, config.jump_threshold);

    KTraceEntry entry{k, result.profile.horizon, true, result.jump_index.has_value()};
    if (result.jump_index) {
      result.lambda_choice = config.lambda_factor * result.lambda_grid[*result.jump_index];
      result.t_sel = result.lambda_choice > 0.0 && !result.profile.empty()
                         ? t_lambda(result.profile, result.lambda_choice).t
                         : result.profile.horizon;
      entry.saturated = !(result.t_sel < result.profile.horizon);
    }
    result.k_trace.push_back(entry);
    if (entry.jump_found && !entry.saturated) {
      result.converged = true;
      return result;
    }
    if (k >= cap) break;
    k = std::min(2 * k, cap);
  }

  if (!result.jump_index) {
    result.lambda_choice = config.fallback_lambda;
    result.t_sel = result.profile.empty() ? result.profile.horizon : t_lambda(result.profile, result.lambda_choice).t;
  }
  result.converged = false;
  return result;
}

}  // namespace tconv
