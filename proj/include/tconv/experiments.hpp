#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "tconv/common.hpp"

namespace tconv {

struct BenchConfig {
  std::vector<Index> ns;
  int seeds = 10;
  std::uint64_t base_seed = 1;
  int threads = 1;
  bool epsilon = true;  // compute d_H(X_n, M)
  bool risk = true;     // compute d_H(Conv_d(t, X_n), M)
};

/// One seeded trial.  Quantities that were not computed are NaN.
struct TrialRow {
  std::string family;
  Index n = 0;
  std::uint64_t seed = 0;
  int k_max = 0;
  double lambda_choice = 0.0;
  double t_sel = 0.0;
  bool converged = false;
  double scale = 0.0;  // scale used for the risk
  double epsilon = 0.0;
  double risk = 0.0;
  double runtime = 0.0;  // seconds
};

struct BenchResult {
  std::string experiment;
  std::vector<TrialRow> rows;
  nlohmann::json summary;
};

const std::vector<std::string>& experiment_names();
/// Trial matrix used when the caller does not override it.
BenchConfig default_bench_config(const std::string& experiment);
BenchResult run_experiment(const std::string& experiment, const BenchConfig& config);

/// Header line plus one line per row.
std::string rows_to_tsv(const std::vector<TrialRow>& rows);

/// Least-squares slope of y on x.
double regression_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace tconv
