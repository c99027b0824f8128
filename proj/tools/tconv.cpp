// tconv: sampling, defect profiles, scale selection, reconstruction,
// tangent estimation and the benchmark harness.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "tconv/defect.hpp"
#include "tconv/estimate.hpp"
#include "tconv/experiments.hpp"
#include "tconv/io.hpp"
#include "tconv/manifolds.hpp"
#include "tconv/parallel.hpp"
#include "tconv/schema.hpp"
#include "tconv/select.hpp"

using nlohmann::json;
using namespace tconv;

namespace {

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Collects what goes into the run manifest.
class Run {
 public:
  explicit Run(std::string command) : command_(std::move(command)) {}

  json config = json::object();
  json seed = nullptr;

  template <class F>
  auto phase(const std::string& name, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
      timings_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      finish();
    } else {
      auto result = f();
      finish();
      return result;
    }
  }

  void input(const std::string& path) { inputs_[path] = fnv1a64(read_file(path)); }

  void output_text(const std::string& path, const std::string& text) {
    if (path == "-") {
      std::cout << text;
      outputs_["-"] = fnv1a64(text);
    } else {
      outputs_[path] = write_file(path, text);
    }
  }

  void output_json(const std::string& path, const json& j, SchemaId schema) {
    check(j, schema, path);
    output_text(path, j.dump(2) + "\n");
  }

  void finish(const std::string& manifest_path) {
    json m = {{"command", command_}, {"config", config},  {"seed", seed},        {"version", TCONV_VERSION},
              {"timings", timings_}, {"outputs", outputs_}, {"inputs", inputs_}};
    check(m, SchemaId::manifest, manifest_path);
    write_file(manifest_path, m.dump(2) + "\n");
  }

 private:
  static void check(const json& j, SchemaId schema, const std::string& what) {
    const auto errors = validate_schema(j, builtin_schema(schema));
    if (!errors.empty()) throw std::runtime_error("schema validation failed for " + what + ": " + errors.front());
  }

  std::string command_;
  json timings_ = json::object();
  json outputs_ = json::object();
  json inputs_ = json::object();
};

std::string manifest_for(const std::string& explicit_path, const std::string& output, const std::string& command) {
  if (!explicit_path.empty()) return explicit_path;
  if (output.empty() || output == "-") return command + ".manifest.json";
  return output + ".manifest.json";
}

PointCloud load(Run& run, const std::string& path) {
  run.input(path);
  return run.phase("read", [&] { return read_csv_file(path); });
}

std::string profile_tsv(const DefectProfile& p) {
  std::ostringstream out;
  out << "t\th\n";
  for (std::size_t m = 0; m < p.breakpoints.size(); ++m)
    out << format_double(p.breakpoints[m]) << '\t' << format_double(p.values[m]) << '\n';
  return out.str();
}

std::string g_tsv(const SelectionResult& r) {
  std::ostringstream out;
  out << "lambda\tg\n";
  for (std::size_t l = 0; l < r.lambda_grid.size(); ++l)
    out << format_double(r.lambda_grid[l]) << '\t' << format_double(r.g_values[l]) << '\n';
  return out.str();
}

struct SelectArgs {
  int k0 = 16;
  double grid_step = 0.01;
  int max_k = 0;
};

void add_select_flags(CLI::App* app, SelectArgs& a) {
  app->add_option("--k0", a.k0, "Initial number of neighbors")->check(CLI::PositiveNumber);
  app->add_option("--grid-step", a.grid_step, "Step of the lambda grid")->check(CLI::Range(1e-6, 1.0));
  app->add_option("--max-k", a.max_k, "Largest K (0 means n - 1)")->check(CLI::NonNegativeNumber);
}

SelectConfig select_config(const SelectArgs& a, int threads) {
  SelectConfig c;
  c.k0 = a.k0;
  c.grid_step = a.grid_step;
  c.max_k = a.max_k;
  c.threads = threads;
  return c;
}

json select_json(const SelectArgs& a) { return {{"k0", a.k0}, {"grid_step", a.grid_step}, {"max_k", a.max_k}}; }

// --t VALUE | auto | oracle:d:fmin
double resolve_scale(Run& run, const std::string& spec, const PointCloud& cloud, const SelectArgs& sel, int threads) {
  if (spec == "auto") {
    if (cloud.size() < 3) throw UsageError("--t auto needs at least 3 points");
    const auto r = run.phase("select", [&] { return select_scale(cloud, select_config(sel, threads)); });
    run.config["t_sel"] = r.t_sel;
    run.config["converged"] = r.converged;
    return r.t_sel;
  }
  if (spec.rfind("oracle:", 0) == 0) {
    const auto rest = spec.substr(7);
    const auto colon = rest.find(':');
    if (colon == std::string::npos) throw UsageError("--t oracle needs the form oracle:d:fmin");
    try {
      const int d = std::stoi(rest.substr(0, colon));
      const double fmin = std::stod(rest.substr(colon + 1));
      return oracle_scale(cloud.size(), d, fmin);
    } catch (const std::invalid_argument&) {
      throw UsageError("--t oracle needs the form oracle:d:fmin");
    }
  }
  std::size_t used = 0;
  double t = 0.0;
  try {
    t = std::stod(spec, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != spec.size() || !(t >= 0.0) || !std::isfinite(t)) throw UsageError("--t must be a number >= 0, auto or oracle:d:fmin");
  return t;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"t-convex hull manifold reconstruction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(TCONV_VERSION));
  int threads_flag = 0;
  std::string manifest_path;
  app.add_option("--threads", threads_flag, "Worker threads (default MFLD_THREADS or 1)")->check(CLI::NonNegativeNumber);
  app.add_option("--manifest", manifest_path, "Manifest path (default OUTPUT.manifest.json)");

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Draw a cloud from a reference manifold");
  std::string manifold = "circle", noise_text = "none", model_path, sample_out, clean_out;
  long long n = 0;
  int ambient_dim = 2;
  std::uint64_t seed = 0;
  bool header = false, stratified = false;
  sample_cmd->add_option("--manifold", manifold, "circle|torus|swissroll|bumped-sphere");
  sample_cmd->add_option("--model", model_path, "Model JSON {family, params, noise, seed, n}");
  sample_cmd->add_option("--n", n, "Number of points");
  sample_cmd->add_option("--noise", noise_text, "none|tubular:G|ambient:G");
  sample_cmd->add_option("--ambient-dim", ambient_dim, "Ambient dimension (circle only)");
  sample_cmd->add_option("--seed", seed, "Seed");
  sample_cmd->add_flag("--header", header, "Write an x0,...,x{D-1} header row");
  sample_cmd->add_flag("--stratified", stratified, "One angle per stratum (circle only)");
  sample_cmd->add_option("--clean", clean_out, "Also write the noiseless points");
  sample_cmd->add_option("-o,--output", sample_out, "Output CSV")->required();

  // defect
  auto* defect_cmd = app.add_subcommand("defect", "Convexity defect profile");
  std::string defect_in, defect_out, defect_tsv;
  int defect_k = 16;
  bool defect_full = false;
  defect_cmd->add_option("-i,--input", defect_in, "Input CSV")->required();
  defect_cmd->add_option("--k", defect_k, "Neighbors per point (capped at n - 1)")->check(CLI::PositiveNumber);
  defect_cmd->add_flag("--full", defect_full, "Exact profile over all subsets (n <= 15)");
  defect_cmd->add_option("-o,--output", defect_out, "Profile JSON")->required();
  defect_cmd->add_option("--tsv", defect_tsv, "(t, h) table");

  // select
  auto* select_cmd = app.add_subcommand("select", "Data-driven scale selection");
  std::string select_in, select_out, g_out, h_out;
  SelectArgs sel;
  double fixed_lambda = 0.0;
  select_cmd->add_option("-i,--input", select_in, "Input CSV")->required();
  add_select_flags(select_cmd, sel);
  select_cmd->add_option("--lambda", fixed_lambda, "Skip the slope heuristic and use this lambda")
      ->check(CLI::Range(1e-12, 1.0));
  select_cmd->add_option("-o,--output", select_out, "Selection JSON")->required();
  select_cmd->add_option("--g-tsv", g_out, "(lambda, g) table");
  select_cmd->add_option("--h-tsv", h_out, "(t, h) table");

  // reconstruct
  auto* rec_cmd = app.add_subcommand("reconstruct", "Build Conv_d(t, X)");
  std::string rec_in, rec_out, rec_t = "auto";
  int rec_dim = 1;
  rec_cmd->add_option("-i,--input", rec_in, "Input CSV")->required();
  rec_cmd->add_option("--t", rec_t, "VALUE, auto or oracle:d:fmin");
  rec_cmd->add_option("--dim", rec_dim, "Largest simplex dimension")->check(CLI::PositiveNumber);
  add_select_flags(rec_cmd, sel);
  rec_cmd->add_option("-o,--output", rec_out, "Complex JSON")->required();

  // tangent
  auto* tan_cmd = app.add_subcommand("tangent", "Tangent space estimates");
  std::string tan_in, tan_out, tan_t = "auto";
  int tan_dim = 1;
  double scale_mult = 11.0;
  bool refine = false;
  tan_cmd->add_option("-i,--input", tan_in, "Input CSV")->required();
  tan_cmd->add_option("--dim", tan_dim, "Intrinsic dimension")->check(CLI::PositiveNumber);
  tan_cmd->add_option("--t", tan_t, "Base scale: VALUE, auto or oracle:d:fmin");
  tan_cmd->add_option("--scale-mult", scale_mult, "Neighborhood radius is this times the base scale")
      ->check(CLI::PositiveNumber);
  tan_cmd->add_flag("--refine", refine, "Sup-norm reweighting pass");
  add_select_flags(tan_cmd, sel);
  tan_cmd->add_option("-o,--output", tan_out, "Tangent TSV")->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Seeded experiment matrix");
  std::string experiment, bench_out, summary_out;
  std::vector<long long> bench_ns;
  int bench_seeds = 0;
  std::uint64_t base_seed = 1;
  bool no_risk = false, no_epsilon = false;
  bench_cmd->add_option("experiment", experiment, "figure8|figure9|figure10|rate-circle|rate-torus")
      ->required()
      ->check(CLI::IsMember(experiment_names()));
  bench_cmd->add_option("--ns", bench_ns, "Sample sizes")->delimiter(',');
  bench_cmd->add_option("--seeds", bench_seeds, "Trials per sample size")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--base-seed", base_seed, "Seed of the first trial");
  bench_cmd->add_flag("--no-risk", no_risk, "Skip the reconstruction risk");
  bench_cmd->add_flag("--no-epsilon", no_epsilon, "Skip the approximation rate");
  bench_cmd->add_option("-o,--output", bench_out, "Per-trial TSV")->required();
  bench_cmd->add_option("--summary", summary_out, "Summary JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const int threads = resolve_threads(threads_flag);

  try {
    if (*sample_cmd) {
      Run run("sample");
      ManifoldPtr model;
      NoiseSpec noise = NoiseSpec::parse(noise_text);
      if (!model_path.empty()) {
        run.input(model_path);
        const json spec = json::parse(read_file(model_path));
        const auto errors = validate_schema(spec, builtin_schema(SchemaId::model));
        if (!errors.empty()) throw UsageError("model config: " + errors.front());
        model = make_manifold(spec);
        if (spec.contains("noise"))
          noise = NoiseSpec::parse(spec["noise"].at("kind").get<std::string>() == "none"
                                       ? "none"
                                       : spec["noise"].at("kind").get<std::string>() + ":" +
                                             format_double(spec["noise"].value("gamma", 0.0)));
        if (spec.contains("seed") && sample_cmd->count("--seed") == 0) seed = spec["seed"].get<std::uint64_t>();
        if (spec.contains("n") && sample_cmd->count("--n") == 0) n = spec["n"].get<long long>();
      } else {
        const Family family = family_from_string(manifold);
        if (family != Family::circle && sample_cmd->count("--ambient-dim"))
          throw UsageError("--ambient-dim applies to the circle only");
        json spec = {{"family", to_string(family)}, {"params", json::object()}};
        if (family == Family::circle) spec["params"]["ambient_dim"] = ambient_dim;
        model = make_manifold(spec);
      }
      if (n < 1) throw UsageError("--n must be at least 1");
      if (stratified && model->family() != Family::circle) throw UsageError("--stratified applies to the circle only");
      run.seed = seed;
      run.config = {{"family", to_string(model->family())}, {"params", model->params()}, {"n", n},
                    {"noise", noise.to_string()},            {"stratified", stratified}, {"header", header}};
      SampleOptions opts;
      opts.stratified = stratified;
      const Sample s = run.phase("sample", [&] { return sample(*model, static_cast<Index>(n), noise, seed, opts); });
      std::ostringstream csv;
      write_csv(csv, s.points, header);
      run.output_text(sample_out, csv.str());
      if (!clean_out.empty()) {
        std::ostringstream clean;
        write_csv(clean, s.clean, header);
        run.output_text(clean_out, clean.str());
      }
      run.finish(manifest_for(manifest_path, sample_out, "sample"));
    } else if (*defect_cmd) {
      Run run("defect");
      const PointCloud cloud = load(run, defect_in);
      run.config = {{"input", defect_in}, {"k", defect_k}, {"full", defect_full}};
      DefectProfile profile;
      if (defect_full) {
        profile = run.phase("profile", [&] { return full_defect_profile(cloud); });
      } else {
        if (cloud.size() < 2) throw UsageError("the graph profile needs at least 2 points");
        const int k = static_cast<int>(std::min<Index>(defect_k, cloud.size() - 1));
        run.config["k_used"] = k;
        profile = run.phase("profile", [&] {
          const NeighborIndex index(cloud);
          return graph_defect_profile(cloud, index, k, threads);
        });
      }
      run.output_json(defect_out, to_json(profile), SchemaId::profile);
      if (!defect_tsv.empty()) run.output_text(defect_tsv, profile_tsv(profile));
      run.finish(manifest_for(manifest_path, defect_out, "defect"));
    } else if (*select_cmd) {
      Run run("select");
      const PointCloud cloud = load(run, select_in);
      if (cloud.size() < 3) throw UsageError("selection needs at least 3 points");
      run.config = select_json(sel);
      run.config["input"] = select_in;
      SelectionResult result;
      if (select_cmd->count("--lambda")) {
        run.config["lambda"] = fixed_lambda;
        // Fixed lambda: double K until t_lambda falls below the horizon.
        result = run.phase("select", [&] {
          SelectionResult r;
          const Index cap = sel.max_k > 0 ? std::min<Index>(sel.max_k, cloud.size() - 1) : cloud.size() - 1;
          const NeighborIndex index(cloud);
          Index k = std::min<Index>(sel.k0, cap);
          for (;;) {
            r.profile = graph_defect_profile(cloud, index, static_cast<int>(k), threads);
            const TLambda tl = t_lambda(r.profile, fixed_lambda);
            r.k_trace.push_back({static_cast<int>(k), r.profile.horizon, tl.saturated, false});
            r.lambda_choice = fixed_lambda;
            r.t_sel = tl.t;
            r.converged = !tl.saturated;
            if (!tl.saturated || k >= cap) break;
            k = std::min<Index>(2 * k, cap);
          }
          r.lambda_grid = {fixed_lambda};
          r.g_values = g_curve(r.profile, r.lambda_grid);
          return r;
        });
      } else {
        result = run.phase("select", [&] { return select_scale(cloud, select_config(sel, threads)); });
      }
      run.output_json(select_out, to_json(result), SchemaId::selection);
      if (!g_out.empty()) run.output_text(g_out, g_tsv(result));
      if (!h_out.empty()) run.output_text(h_out, profile_tsv(result.profile));
      run.finish(manifest_for(manifest_path, select_out, "select"));
    } else if (*rec_cmd) {
      Run run("reconstruct");
      const PointCloud cloud = load(run, rec_in);
      run.config = select_json(sel);
      run.config["input"] = rec_in;
      run.config["t"] = rec_t;
      run.config["dim"] = rec_dim;
      if (rec_dim > cloud.dim()) throw UsageError("--dim exceeds the ambient dimension");
      const double t = resolve_scale(run, rec_t, cloud, sel, threads);
      run.config["scale"] = t;
      const SimplicialComplex complex = run.phase("reconstruct", [&] { return reconstruct(cloud, t, rec_dim); });
      run.output_json(rec_out, to_json(complex), SchemaId::complex);
      run.finish(manifest_for(manifest_path, rec_out, "reconstruct"));
    } else if (*tan_cmd) {
      Run run("tangent");
      const PointCloud cloud = load(run, tan_in);
      run.config = select_json(sel);
      run.config["input"] = tan_in;
      run.config["t"] = tan_t;
      run.config["dim"] = tan_dim;
      run.config["scale_mult"] = scale_mult;
      run.config["refine"] = refine;
      if (tan_dim > cloud.dim()) throw UsageError("--dim exceeds the ambient dimension");
      const double radius = scale_mult * resolve_scale(run, tan_t, cloud, sel, threads);
      run.config["radius"] = radius;
      const std::string text = run.phase("tangent", [&] {
        const NeighborIndex index(cloud);
        TangentOptions opts;
        opts.refine = refine;
        std::ostringstream out;
        out << "index\tstatus\tresidual";
        for (int a = 0; a < tan_dim; ++a)
          for (int k = 0; k < cloud.dim(); ++k) out << "\tu" << a << "_x" << k;
        out << '\n';
        for (Index i = 0; i < cloud.size(); ++i) {
          out << i;
          try {
            const Subspace u = tangent_estimate(cloud, index, i, radius, tan_dim, opts);
            out << "\tok\t" << format_double(tangent_sup_residual(cloud, index, i, radius, u));
            for (int a = 0; a < tan_dim; ++a)
              for (int k = 0; k < cloud.dim(); ++k) out << '\t' << format_double(u.basis()(k, a));
          } catch (const InsufficientNeighborsError&) {
            out << "\tinsufficient\tnan";
            for (int a = 0; a < tan_dim * cloud.dim(); ++a) out << "\tnan";
          }
          out << '\n';
        }
        return out.str();
      });
      run.output_text(tan_out, text);
      run.finish(manifest_for(manifest_path, tan_out, "tangent"));
    } else if (*bench_cmd) {
      Run run("bench");
      BenchConfig config = default_bench_config(experiment);
      if (!bench_ns.empty()) {
        config.ns.clear();
        for (long long v : bench_ns) {
          if (v < 3) throw UsageError("--ns values must be at least 3");
          config.ns.push_back(static_cast<Index>(v));
        }
      }
      if (bench_seeds > 0) config.seeds = bench_seeds;
      config.base_seed = base_seed;
      config.threads = threads;
      if (no_risk) config.risk = false;
      if (no_epsilon) config.epsilon = false;
      run.seed = base_seed;
      run.config = {{"experiment", experiment}, {"ns", config.ns},         {"seeds", config.seeds},
                    {"risk", config.risk},      {"epsilon", config.epsilon}};
      const BenchResult result = run.phase("bench", [&] { return run_experiment(experiment, config); });
      run.output_text(bench_out, rows_to_tsv(result.rows));
      if (!summary_out.empty()) run.output_text(summary_out, result.summary.dump(2) + "\n");
      else std::cerr << result.summary.dump(2) << '\n';
      run.finish(manifest_for(manifest_path, bench_out, "bench"));
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
