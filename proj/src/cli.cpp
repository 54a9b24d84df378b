#include "eit/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eit/bayes.hpp"
#include "eit/cbc.hpp"
#include "eit/config.hpp"
#include "eit/errors.hpp"
#include "eit/fem.hpp"
#include "eit/harness.hpp"
#include "eit/io.hpp"
#include "eit/lattice.hpp"
#include "eit/mesh.hpp"
#include "eit/numeric.hpp"
#include "eit/simulate.hpp"

namespace eit {
namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_out = true) {
  cmd->add_option("--config", args.config_path, "configuration file (key = value lines)")
      ->check(CLI::ExistingFile);
  if (with_out)
    cmd->add_option("--out", args.out_dir, "output directory, created if missing");
  cmd->add_option("--seed", args.seed,
                  "master seed; shift, sampling, noise and truth seeds derive from it");
  cmd->add_option("--threads", args.threads, "worker threads (0 = all hardware threads)")
      ->check(CLI::NonNegativeNumber);
}

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = parse_config(args.config_path);
  if (args.seed) {
    cfg.shift_seed = derive_seed(*args.seed, 1);
    cfg.mc_seed = derive_seed(*args.seed, 2);
    cfg.noise_seed = derive_seed(*args.seed, 3);
    cfg.truth_seed = derive_seed(*args.seed, 4);
  }
  return cfg;
}

fs::path prepare_out(const CommonArgs& args) {
  fs::path dir(args.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir))
    throw ConfigError("cannot create output directory '" + args.out_dir + "'" +
                      (ec ? ": " + ec.message() : ""));
  return dir;
}

void echo_config(const RunConfig& cfg, const fs::path& dir) {
  std::ostringstream os;
  write_config(cfg, os);
  write_text_file((dir / "config_used.cfg").string(), os.str());
}

/* --------------------------------------------------------------- mesh -- */

struct MeshArgs {
  CommonArgs common;
  std::optional<double> h;
};

int run_mesh(const MeshArgs& args) {
  RunConfig cfg = load_config(args.common);
  double h = args.h.value_or(cfg.coarse_h);
  if (!(h > 0.0)) throw ConfigError("mesh size must be positive");
  Mesh mesh = build_disk_mesh(cfg.radius, h, electrodes_from(cfg));

  fs::path dir = prepare_out(args.common);
  std::ostringstream os;
  write_mesh(mesh, os);
  write_text_file((dir / "mesh.txt").string(), os.str());
  echo_config(cfg, dir);
  write_manifest(dir.string(), {"config_used.cfg", "mesh.txt"});

  std::cout << "mesh: " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
            << " triangles, width " << fmt6(mesh.mesh_width) << " (target " << fmt6(h) << ")\n"
            << "wrote " << (dir / "mesh.txt").string() << "\n";
  return 0;
}

/* ----------------------------------------------------------- simulate -- */

int run_simulate(const CommonArgs& common) {
  RunConfig cfg = load_config(common);
  BasisSpec basis = basis_from(cfg);
  GroundTruth truth = truth_from(cfg);
  std::vector<CurrentPattern> patterns = reference_patterns(cfg.electrodes);

  MeasurementSet data = simulate_measurements(truth, basis, cfg.fine_h, cfg.coarse_h,
                                              electrodes_from(cfg), patterns, noise_from(cfg));

  fs::path dir = prepare_out(common);
  save_measurements(data, (dir / "measurements.csv").string());

  Grid grid = make_grid(grid_from(cfg));
  Eigen::VectorXd truth_values = truth_field_on_grid(truth, basis, grid);
  {
    std::ostringstream os;
    write_grid_csv(grid, truth_values, os);
    write_text_file((dir / "truth.csv").string(), os.str());
  }
  {
    std::ostringstream os;
    write_pgm(grid, truth_values, os);
    write_text_file((dir / "truth.pgm").string(), os.str());
  }
  echo_config(cfg, dir);
  write_manifest(dir.string(), {"config_used.cfg", "measurements.csv", "truth.csv", "truth.pgm"});

  std::cout << "simulate: " << data.voltages.rows() << " electrodes, " << data.voltages.cols()
            << " patterns, noise scale " << fmt6(cfg.gamma0) << "\n";
  auto warn = data.metadata.find("warning");
  if (warn != data.metadata.end()) std::cout << "warning: " << warn->second << "\n";
  std::cout << "wrote " << (dir / "measurements.csv").string() << "\n";
  return 0;
}

/* ------------------------------------------------------------- invert -- */

struct InvertArgs {
  CommonArgs common;
  std::string data_path;
  std::string method;
};

SamplingPlan make_plan(const std::string& method, std::int64_t n, const RunConfig& cfg) {
  if (method == "qmc") {
    std::vector<std::uint32_t> z = generating_from(cfg);
    return QmcPlan{make_lattice(n, z, cfg.dimension),
                   make_shifts(cfg.shifts, cfg.dimension, cfg.shift_seed)};
  }
  if (method == "mc") return McPlan{n, cfg.shifts, cfg.mc_seed};
  throw ConfigError("unknown sampling method '" + method + "' (expected qmc or mc)");
}

void write_diagnostics(const PosteriorEstimate& est, const std::string& method, std::int64_t n,
                       std::ostream& os) {
  os << "# method " << method << "\n";
  os << "# n " << n << "\n";
  os << "# shifts " << est.per_shift.rows() << "\n";
  os << "# grid_points " << est.grid.size() << "\n";
  os << "# variance_clamped " << est.variance_clamped << "\n";
  os << "# prior_bounds " << fmt(est.prior_bounds.a_min) << " " << fmt(est.prior_bounds.a_max)
     << "\n";
  os << "# shift,log_normalizer,effective_samples\n";
  for (Eigen::Index r = 0; r < est.log_normalizer.size(); ++r)
    os << r << "," << fmt(est.log_normalizer[r]) << "," << fmt(est.effective_samples[r]) << "\n";
}

int run_invert(const InvertArgs& args) {
  RunConfig cfg = load_config(args.common);
  if (!args.data_path.empty()) cfg.data = args.data_path;
  if (cfg.data.empty())
    throw ConfigError("no measurement data: pass --data or set data= in the configuration");
  if (!args.method.empty()) cfg.method = args.method;
  std::string method = cfg.method == "both" ? "qmc" : cfg.method;

  MeasurementSet data = load_measurements(cfg.data);
  /* The electrode layout recorded with the data is authoritative. */
  Mesh mesh = build_disk_mesh(cfg.radius, cfg.coarse_h, data.electrodes);
  BasisSpec basis = basis_from(cfg);
  Grid grid = make_grid(grid_from(cfg));

  EstimatorOptions options;
  options.threads = args.common.threads;
  PosteriorEstimate est = ratio_estimate(make_plan(method, cfg.n, cfg), data, basis, mesh, grid,
                                         options);

  fs::path dir = prepare_out(args.common);
  {
    std::ostringstream os;
    write_posterior_csv(est, os);
    write_text_file((dir / "posterior.csv").string(), os.str());
  }
  {
    std::ostringstream os;
    write_pgm(est.grid, est.mean, os);
    write_text_file((dir / "mean.pgm").string(), os.str());
  }
  {
    std::ostringstream os;
    write_pgm(est.grid, est.margin, os);
    write_text_file((dir / "margin.pgm").string(), os.str());
  }
  {
    std::ostringstream os;
    write_diagnostics(est, method, cfg.n, os);
    write_text_file((dir / "diagnostics.txt").string(), os.str());
  }
  echo_config(cfg, dir);
  write_manifest(dir.string(), {"config_used.cfg", "posterior.csv", "mean.pgm", "margin.pgm",
                                "diagnostics.txt"});

  double ess_min = est.effective_samples.minCoeff();
  std::cout << "invert: " << method << ", n=" << cfg.n << ", " << est.per_shift.rows()
            << " shifts, " << est.grid.size() << " grid points\n"
            << "mean in [" << fmt6(est.mean.minCoeff()) << ", " << fmt6(est.mean.maxCoeff())
            << "], margin max " << fmt6(est.margin.maxCoeff()) << ", min effective samples "
            << fmt6(ess_min) << "\n"
            << "wrote " << (dir / "posterior.csv").string() << "\n";
  return 0;
}

/* ----------------------------------------------------------- converge -- */

struct ConvergeArgs {
  CommonArgs common;
  std::string data_path;
  std::string method;
  std::string levels;
  bool full = false;
};

std::pair<int, int> parse_levels(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError("levels must be min:max, e.g. 10:14");
  try {
    std::size_t used = 0;
    int lo = std::stoi(text.substr(0, colon), &used);
    if (used != colon) throw std::invalid_argument(text);
    std::string rest = text.substr(colon + 1);
    int hi = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
    return {lo, hi};
  } catch (const std::exception&) {
    throw ConfigError("levels must be min:max with integer entries, got '" + text + "'");
  }
}

int run_converge(const ConvergeArgs& args) {
  RunConfig cfg = load_config(args.common);
  if (!args.data_path.empty()) cfg.data = args.data_path;
  if (cfg.data.empty())
    throw ConfigError("no measurement data: pass --data or set data= in the configuration");
  if (!args.method.empty()) cfg.method = args.method;
  if (args.full) {
    cfg.level_min = 10;
    cfg.level_max = 20;
  } else if (!args.levels.empty()) {
    auto [lo, hi] = parse_levels(args.levels);
    cfg.level_min = lo;
    cfg.level_max = hi;
  }
  if (cfg.level_min < 1 || cfg.level_min > cfg.level_max || cfg.level_max > 40)
    throw ConfigError("levels must satisfy 1 <= min <= max <= 40");

  std::vector<std::string> methods;
  if (cfg.method == "both")
    methods = {"qmc", "mc"};
  else if (cfg.method == "qmc" || cfg.method == "mc")
    methods = {cfg.method};
  else
    throw ConfigError("unknown method '" + cfg.method + "' (expected qmc, mc or both)");

  MeasurementSet data = load_measurements(cfg.data);
  Mesh mesh = build_disk_mesh(cfg.radius, cfg.coarse_h, data.electrodes);
  BasisSpec basis = basis_from(cfg);
  Grid grid = make_grid(grid_from(cfg));

  StudyPlan plan;
  plan.replications = cfg.shifts;
  plan.shift_seed = cfg.shift_seed;
  plan.mc_seed = cfg.mc_seed;
  plan.threads = args.common.threads;
  for (int level = cfg.level_min; level <= cfg.level_max; ++level)
    plan.point_counts.push_back(std::int64_t{1} << level);

  EstimatorOptions options;
  options.threads = args.common.threads;

  fs::path dir = prepare_out(args.common);
  bool both = methods.size() > 1;
  std::vector<ConvergenceStudy> studies;
  std::vector<std::string> csv_names;
  std::vector<std::string> outputs = {"config_used.cfg", "fit.txt", "figure3.gp"};
  for (const std::string& method : methods) {
    plan.use_qmc = method == "qmc";
    plan.generating = plan.use_qmc ? generating_from(cfg) : std::vector<std::uint32_t>{};
    ConvergenceStudy study = run_convergence(plan, data, basis, mesh, grid, options);
    std::string rms_name = both ? "rms_" + method + ".csv" : "rms.csv";
    std::string timing_name = both ? "timing_" + method + ".txt" : "timing.txt";
    {
      std::ostringstream os;
      write_rms_csv(study, os);
      write_text_file((dir / rms_name).string(), os.str());
    }
    {
      std::ostringstream os;
      write_timing(study, os);
      write_text_file((dir / timing_name).string(), os.str());
    }
    csv_names.push_back(rms_name);
    outputs.push_back(rms_name);
    outputs.push_back(timing_name);
    studies.push_back(std::move(study));
  }
  {
    std::ostringstream os;
    write_fits(studies, os);
    write_text_file((dir / "fit.txt").string(), os.str());
  }
  {
    std::ostringstream os;
    write_gnuplot_script(studies, csv_names, os);
    write_text_file((dir / "figure3.gp").string(), os.str());
  }
  echo_config(cfg, dir);
  write_manifest(dir.string(), outputs);

  for (const ConvergenceStudy& study : studies) {
    std::cout << study.method << ":";
    if (study.fit)
      std::cout << " rate " << fmt6(study.fit->rate) << ", constant " << fmt6(study.fit->constant);
    else
      std::cout << " no rate fit (an rms level vanished)";
    std::cout << ", levels " << cfg.level_min << ".." << cfg.level_max << "\n";
  }
  std::cout << "wrote " << (dir / "fit.txt").string() << "\n";
  return 0;
}

/* ---------------------------------------------------------------- cbc -- */

struct CbcArgs {
  CommonArgs common;  // --out unused; the vector path below is a file
  std::string out_file = "z.txt";
  std::optional<std::int64_t> n;
  std::optional<int> s;
  std::optional<double> sigma;
  std::optional<double> p;
  std::optional<double> epsilon;
  std::optional<double> beta_scale;
};

int run_cbc(const CbcArgs& args) {
  RunConfig cfg = load_config(args.common);
  std::int64_t n = args.n.value_or(cfg.n);
  int s = args.s.value_or(cfg.dimension);
  double sigma = args.sigma.value_or(cfg.sigma);
  double p = args.p.value_or(cfg.p);
  double epsilon = args.epsilon.value_or(cfg.epsilon);
  double beta_scale = args.beta_scale.value_or(cfg.beta_scale);
  if (!(beta_scale > 0.0)) throw ConfigError("beta scale must be positive");

  BasisSpec basis = basis_from(cfg);
  basis.dimension = s;
  std::vector<double> beta = basis_weights(basis);
  Eigen::VectorXd beta_vec(static_cast<Eigen::Index>(beta.size()));
  for (std::size_t j = 0; j < beta.size(); ++j)
    beta_vec[static_cast<Eigen::Index>(j)] = beta[j] * beta_scale;

  PodWeights weights = pod_weights(sigma, p, beta_vec, epsilon);
  CbcResult result = cbc_construct(n, s, weights, args.common.threads);

  fs::path out(args.out_file);
  if (out.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(out.parent_path(), ec);
  }
  {
    std::ostringstream os;
    save_generating_vector(result.rule.z, n, os);
    write_text_file(out.string(), os.str());
  }
  {
    char line[512];
    std::snprintf(line, sizeof(line), "%016llx  %s\n",
                  static_cast<unsigned long long>(hash_file(out.string())),
                  out.filename().string().c_str());
    write_text_file(out.string() + ".manifest", line);
  }

  double err_sq = result.error_sq_by_dim(result.error_sq_by_dim.size() - 1);
  double bound_sq = cbc_error_bound_sq(n, s, weights, weights.lambda);
  std::cout << "cbc: n=" << n << ", s=" << s << ", lambda " << fmt6(weights.lambda)
            << "\nworst-case error " << fmt6(std::sqrt(err_sq)) << ", bound "
            << fmt6(std::sqrt(bound_sq)) << "\nwrote " << out.string() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Bayesian impedance-tomography toolkit: simulation, lattice construction,\n"
               "posterior estimation, and sampling-rate studies on the unit disk model"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "expanded help for every subcommand");

  MeshArgs mesh_args;
  CLI::App* mesh_cmd = app.add_subcommand("mesh", "triangulate the disk and write mesh.txt");
  add_common(mesh_cmd, mesh_args.common);
  mesh_cmd->add_option("--mesh-h", mesh_args.h, "target mesh width (default: coarse_h)");

  CommonArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "draw a ground truth, solve the forward problem on a fine mesh,\n"
                  "add measurement noise and write measurements.csv + truth images");
  add_common(sim_cmd, sim_args);

  InvertArgs invert_args;
  CLI::App* invert_cmd = app.add_subcommand(
      "invert", "estimate the posterior-mean conductivity from measurement data");
  add_common(invert_cmd, invert_args.common);
  invert_cmd->add_option("--data", invert_args.data_path, "measurement file from `eit simulate`")
      ->check(CLI::ExistingFile);
  invert_cmd->add_option("--method", invert_args.method, "sampling rule: qmc or mc")
      ->check(CLI::IsMember({"qmc", "mc"}));

  ConvergeArgs conv_args;
  CLI::App* conv_cmd = app.add_subcommand(
      "converge", "sweep point counts, estimate rms errors and fit convergence rates");
  add_common(conv_cmd, conv_args.common);
  conv_cmd->add_option("--data", conv_args.data_path, "measurement file from `eit simulate`")
      ->check(CLI::ExistingFile);
  conv_cmd->add_option("--method", conv_args.method, "qmc, mc, or both")
      ->check(CLI::IsMember({"qmc", "mc", "both"}));
  CLI::Option* levels_opt =
      conv_cmd->add_option("--levels", conv_args.levels, "point counts 2^min..2^max, as min:max");
  conv_cmd->add_flag("--full", conv_args.full, "full-scale sweep, levels 10:20")
      ->excludes(levels_opt);

  CbcArgs cbc_args;
  CLI::App* cbc_cmd = app.add_subcommand(
      "cbc", "component-by-component search for a rank-1 lattice generating vector");
  add_common(cbc_cmd, cbc_args.common, /*with_out=*/false);
  cbc_cmd->add_option("--out", cbc_args.out_file, "output vector file");
  cbc_cmd->add_option("--n", cbc_args.n, "number of lattice points (power of two)");
  cbc_cmd->add_option("--s", cbc_args.s, "dimensions to construct");
  cbc_cmd->add_option("--sigma", cbc_args.sigma, "basis smoothness exponent for the weights");
  cbc_cmd->add_option("--p", cbc_args.p, "summability exponent of the weight sequence");
  cbc_cmd->add_option("--epsilon", cbc_args.epsilon, "rate slack when p is small");
  cbc_cmd->add_option("--beta-scale", cbc_args.beta_scale, "scale on the coordinate weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*mesh_cmd) return run_mesh(mesh_args);
    if (*sim_cmd) return run_simulate(sim_args);
    if (*invert_cmd) return run_invert(invert_args);
    if (*conv_cmd) return run_converge(conv_args);
    if (*cbc_cmd) return run_cbc(cbc_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

}  // namespace eit
