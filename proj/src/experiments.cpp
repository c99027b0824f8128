#include "tconv/experiments.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "tconv/estimate.hpp"
#include "tconv/io.hpp"
#include "tconv/manifolds.hpp"
#include "tconv/select.hpp"

namespace tconv {

using nlohmann::json;

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"figure8", "figure9", "figure10", "rate-circle", "rate-torus"};
  return names;
}

BenchConfig default_bench_config(const std::string& experiment) {
  BenchConfig c;
  if (experiment == "figure8") {
    c.ns = {100};
    c.seeds = 20;
  } else if (experiment == "figure9") {
    c.ns = {1000, 3000, 10000};
    c.seeds = 5;
    c.epsilon = false;
    c.risk = false;
  } else if (experiment == "figure10") {
    c.ns = {10000};
    c.seeds = 5;
    c.risk = false;
  } else if (experiment == "rate-circle" || experiment == "rate-torus") {
    c.ns = {500, 1000, 2000, 4000, 8000};
    c.seeds = 10;
    c.epsilon = false;
  } else {
    throw ArgumentError("unknown experiment: " + experiment);
  }
  return c;
}

double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("regression_slope: need two or more pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  if (!(sxx > 0.0)) throw ArgumentError("regression_slope: x values are all equal");
  return sxy / sxx;
}

namespace {

struct Setup {
  std::vector<ManifoldPtr> models;
  NoiseSpec noise;
  bool oracle = false;  // risk at the oracle scale instead of t_sel
};

Setup setup_for(const std::string& experiment) {
  Setup s;
  if (experiment == "figure8") {
    s.models = {make_circle(1.0, 2)};
    s.noise = NoiseSpec::parse("tubular:0.1");
  } else if (experiment == "figure9") {
    s.models = {make_torus()};
  } else if (experiment == "figure10") {
    s.models = {make_torus(), make_swiss_roll()};
  } else if (experiment == "rate-circle") {
    s.models = {make_circle(1.0, 2)};
    s.oracle = true;
  } else if (experiment == "rate-torus") {
    s.models = {make_torus()};
    s.oracle = true;
  } else {
    throw ArgumentError("unknown experiment: " + experiment);
  }
  return s;
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

TrialRow run_trial(const Manifold& model, const Setup& setup, Index n, std::uint64_t seed, const BenchConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  TrialRow row;
  row.family = to_string(model.family());
  row.n = n;
  row.seed = seed;
  const Sample s = sample(model, n, setup.noise, derive_seed(seed, static_cast<std::uint64_t>(n)));
  const int d = model.intrinsic_dim();

  if (setup.oracle) {
    row.k_max = 0;
    row.lambda_choice = nan();
    row.t_sel = nan();
    row.scale = oracle_scale(n, d, 1.0 / *model.volume());
  } else {
    SelectConfig sc;
    sc.threads = config.threads;
    const SelectionResult sel = select_scale(s.points, sc);
    row.k_max = sel.k_trace.empty() ? 0 : sel.k_trace.back().k;
    row.lambda_choice = sel.lambda_choice;
    row.t_sel = sel.t_sel;
    row.converged = sel.converged;
    row.scale = sel.t_sel;
  }
  row.epsilon = config.epsilon ? epsilon_rate(model, s.points, default_resolution(model)).value : nan();
  if (config.risk) {
    const double tau = model.reach();
    const double res = std::min(default_resolution(model), 0.02 * std::min(row.scale * row.scale / tau, tau));
    RiskOptions ro;
    ro.threads = config.threads;
    row.risk = reconstruction_risk(s.points, row.scale, d, model, res, ro).value;
  } else {
    row.risk = nan();
  }
  if (setup.oracle) row.converged = true;
  row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

json mean_or_null(double sum, int count) { return count > 0 ? json(sum / count) : json(nullptr); }

json summarize(const std::string& experiment, const std::vector<TrialRow>& rows) {
  struct Acc {
    int count = 0;
    int k_max = 0;
    double log2k = 0.0, lambda = 0.0, t = 0.0, eps = 0.0, risk = 0.0, scale = 0.0, runtime = 0.0;
    int n_eps = 0, n_risk = 0, n_sel = 0, t_ge_eps = 0;
  };
  std::map<std::pair<std::string, Index>, Acc> groups;
  for (const auto& r : rows) {
    Acc& a = groups[{r.family, r.n}];
    ++a.count;
    a.k_max = std::max(a.k_max, r.k_max);
    a.scale += r.scale;
    a.runtime += r.runtime;
    if (!std::isnan(r.t_sel)) {
      ++a.n_sel;
      a.log2k += r.k_max > 0 ? std::log2(static_cast<double>(r.k_max)) : 0.0;
      a.lambda += r.lambda_choice;
      a.t += r.t_sel;
    }
    if (!std::isnan(r.epsilon)) {
      ++a.n_eps;
      a.eps += r.epsilon;
      if (!std::isnan(r.t_sel) && r.t_sel >= r.epsilon) ++a.t_ge_eps;
    }
    if (!std::isnan(r.risk)) {
      ++a.n_risk;
      a.risk += r.risk;
    }
  }
  json groups_json = json::array();
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> rate_points;
  for (const auto& [key, a] : groups) {
    json g = {{"family", key.first},
              {"n", key.second},
              {"trials", a.count},
              {"K_max", a.k_max},
              {"mean_log2_K", mean_or_null(a.log2k, a.n_sel)},
              {"mean_lambda_choice", mean_or_null(a.lambda, a.n_sel)},
              {"mean_t_sel", mean_or_null(a.t, a.n_sel)},
              {"mean_scale", mean_or_null(a.scale, a.count)},
              {"mean_epsilon", mean_or_null(a.eps, a.n_eps)},
              {"mean_risk", mean_or_null(a.risk, a.n_risk)},
              {"mean_runtime", mean_or_null(a.runtime, a.count)}};
    if (a.n_eps > 0 && a.n_sel > 0) g["fraction_t_sel_ge_epsilon"] = static_cast<double>(a.t_ge_eps) / a.n_eps;
    groups_json.push_back(std::move(g));
    if (a.n_risk > 0 && a.risk > 0.0) {
      const double n = static_cast<double>(key.second);
      rate_points[key.first].first.push_back(std::log(std::log(n) / n));
      rate_points[key.first].second.push_back(std::log(a.risk / a.n_risk));
    }
  }
  json summary = {{"experiment", experiment}, {"groups", groups_json}};
  for (const auto& [family, pts] : rate_points)
    if (pts.first.size() >= 2) summary["slope"][family] = regression_slope(pts.first, pts.second);
  return summary;
}

}  // namespace

BenchResult run_experiment(const std::string& experiment, const BenchConfig& config) {
  const Setup setup = setup_for(experiment);
  if (config.ns.empty() || config.seeds < 1) throw ArgumentError("bench: empty trial matrix");
  BenchResult result;
  result.experiment = experiment;
  for (const auto& model : setup.models)
    for (Index n : config.ns)
      for (int k = 0; k < config.seeds; ++k)
        result.rows.push_back(run_trial(*model, setup, n, config.base_seed + static_cast<std::uint64_t>(k), config));
  result.summary = summarize(experiment, result.rows);
  return result;
}

std::string rows_to_tsv(const std::vector<TrialRow>& rows) {
  std::ostringstream out;
  out << "family\tn\tseed\tK_max\tlambda_choice\tt_sel\tconverged\tscale\tepsilon\trisk\truntime\n";
  auto num = [](double x) { return std::isnan(x) ? std::string("nan") : format_double(x); };
  for (const auto& r : rows)
    out << r.family << '\t' << r.n << '\t' << r.seed << '\t' << r.k_max << '\t' << num(r.lambda_choice) << '\t'
        << num(r.t_sel) << '\t' << (r.converged ? 1 : 0) << '\t' << num(r.scale) << '\t' << num(r.epsilon) << '\t'
        << num(r.risk) << '\t' << format_double(r.runtime) << '\n';
  return out.str();
}

}  // namespace tconv
