#pragma once

#include <optional>
#include <vector>

#include "tconv/defect.hpp"

namespace tconv {

struct SelectConfig {
  int k0 = 16;
  double grid_step = 0.01;
  int max_k = 0;                 // 0 means n - 1
  double jump_threshold = 0.5;   // jump when an increment exceeds this times g at the grid minimum
  double lambda_factor = 0.8;    // lambda_choice = factor * lambda at the jump
  double fallback_lambda = 0.5;  // used when no jump is found at the largest K
  int threads = 1;
};

struct KTraceEntry {
  int k = 0;
  double ell_k = 0.0;
  bool saturated = false;  // t_sel reached the horizon at this K
  bool jump_found = false;
};

struct SelectionResult {
  std::vector<double> lambda_grid;
  std::vector<double> g_values;
  std::optional<std::size_t> jump_index;
  double lambda_choice = 0.0;
  double t_sel = 0.0;
  bool converged = false;
  std::vector<KTraceEntry> k_trace;
  DefectProfile profile;
};

/// {0, step, 2 step, ..., 1}; 1 is always the last entry.
std::vector<double> make_lambda_grid(double step);

/// g(lambda) = 1 / t_lambda, with t_0 taken as the horizon.
std::vector<double> g_curve(const DefectProfile& profile, const std::vector<double>& grid);

/// Smallest l with g[l+1] - g[l] > threshold * g[0].
std::optional<std::size_t> detect_jump(const std::vector<double>& g_values, const std::vector<double>& grid,
                                       double threshold = 0.5);

/// Slope heuristic with K doubling.  Requires n >= 3.
SelectionResult select_scale(const PointCloud& cloud, const SelectConfig& config = {});

}  // namespace tconv
