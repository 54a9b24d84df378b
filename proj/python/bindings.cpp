#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eit/bayes.hpp"
#include "eit/cbc.hpp"
#include "eit/fem.hpp"
#include "eit/field.hpp"
#include "eit/harness.hpp"
#include "eit/io.hpp"
#include "eit/lattice.hpp"
#include "eit/mesh.hpp"
#include "eit/simulate.hpp"

namespace py = pybind11;
using namespace eit;

namespace {

BasisSpec spec_of(int dimension, double theta, double radius, double amplitude) {
  BasisSpec spec;
  spec.dimension = dimension;
  spec.theta = theta;
  spec.radius = radius;
  spec.amplitude = amplitude;
  return spec;
}

std::vector<Vec2> points_of(const Eigen::MatrixXd& xy) {
  if (xy.cols() != 2) throw std::invalid_argument("points must be an (n, 2) array");
  std::vector<Vec2> pts(static_cast<std::size_t>(xy.rows()));
  for (Eigen::Index i = 0; i < xy.rows(); ++i) pts[i] = {xy(i, 0), xy(i, 1)};
  return pts;
}

LatticeRule rule_of(std::int64_t n, const std::optional<std::vector<std::uint32_t>>& z, int s) {
  if (z) return make_lattice(n, *z, s);
  return default_lattice(n, s);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Impedance-tomography core: conductivity fields, complete-electrode forward "
            "solves, rank-1 lattice rules and posterior-mean estimation";

  m.def(
      "basis_weights",
      [](int dimension, double theta, double radius, double amplitude) {
        return basis_weights(spec_of(dimension, theta, radius, amplitude));
      },
      py::arg("dimension"), py::arg("theta") = 2.0, py::arg("radius") = 14.0,
      py::arg("amplitude") = 5.0,
      "Decaying coefficient bounds of the log-conductivity expansion, largest first");

  m.def(
      "field_bounds",
      [](int dimension, double theta, double radius, double amplitude) {
        FieldBounds b = field_bounds(spec_of(dimension, theta, radius, amplitude));
        return std::make_pair(b.a_min, b.a_max);
      },
      py::arg("dimension"), py::arg("theta") = 2.0, py::arg("radius") = 14.0,
      py::arg("amplitude") = 5.0, "(a_min, a_max) bounds that every realized field satisfies");

  m.def(
      "eval_field",
      [](const Eigen::VectorXd& y, const Eigen::MatrixXd& xy, double theta, double radius,
         double amplitude) {
        BasisSpec spec = spec_of(static_cast<int>(y.size()), theta, radius, amplitude);
        std::vector<Vec2> pts = points_of(xy);
        FieldEvaluator eval(spec, pts);
        Eigen::VectorXd out(xy.rows());
        eval.eval({y.data(), static_cast<std::size_t>(y.size())},
                  {out.data(), static_cast<std::size_t>(out.size())});
        return out;
      },
      py::arg("y"), py::arg("points"), py::arg("theta") = 2.0, py::arg("radius") = 14.0,
      py::arg("amplitude") = 5.0,
      "Conductivity exp(sum_j y_j psi_j) at each row of `points`");

  m.def(
      "mesh_stats",
      [](double radius, double h, int electrodes, double electrode_width, double impedance) {
        Mesh mesh = build_disk_mesh(radius, h, uniform_electrodes(electrodes, electrode_width,
                                                                  impedance));
        py::dict d;
        d["vertices"] = mesh.vertices.size();
        d["triangles"] = mesh.triangles.size();
        d["boundary_edges"] = mesh.boundary_edges.size();
        d["mesh_width"] = mesh.mesh_width;
        return d;
      },
      py::arg("radius") = 14.0, py::arg("h") = 1.496, py::arg("electrodes") = 16,
      py::arg("electrode_width") = 2.8, py::arg("impedance") = 0.005,
      "Triangulate the electrode-fitted disk and report its size");

  m.def(
      "forward_voltages",
      [](const Eigen::VectorXd& y, double h, double radius, int electrodes,
         double electrode_width, double impedance, double theta, double amplitude) {
        BasisSpec spec = spec_of(static_cast<int>(y.size()), theta, radius, amplitude);
        Mesh mesh = build_disk_mesh(radius, h, uniform_electrodes(electrodes, electrode_width,
                                                                  impedance));
        FieldParams params = make_params(spec, {y.data(), static_cast<std::size_t>(y.size())});
        auto system = assemble_system(
            mesh,
            [&](Vec2 x) {
              return eval_field(spec, {params.y.data(), static_cast<std::size_t>(params.y.size())},
                                x);
            },
            uniform_electrodes(electrodes, electrode_width, impedance));
        return observation_operator(system, reference_patterns(electrodes));
      },
      py::arg("y"), py::arg("h") = 1.496, py::arg("radius") = 14.0, py::arg("electrodes") = 16,
      py::arg("electrode_width") = 2.8, py::arg("impedance") = 0.005, py::arg("theta") = 2.0,
      py::arg("amplitude") = 5.0,
      "Electrode voltages (M x P) for the reference current patterns under the field y");

  m.def(
      "lattice_points",
      [](std::int64_t n, std::optional<std::vector<std::uint32_t>> z, int s) {
        return lattice_points(rule_of(n, z, s));
      },
      py::arg("n"), py::arg("z") = std::nullopt, py::arg("s") = 20,
      "Unshifted rank-1 lattice points in [0,1)^s, one row per point");

  m.def("default_generating_vector", [] {
    auto z = default_generating_vector();
    return std::vector<std::uint32_t>(z.begin(), z.end());
  });

  m.def(
      "random_shifts",
      [](int count, int dim, std::uint64_t seed) { return make_shifts(count, dim, seed).delta; },
      py::arg("count"), py::arg("dim"), py::arg("seed") = 7);

  m.def(
      "cbc_vector",
      [](std::int64_t n, int s, double sigma, double p, double epsilon,
         std::optional<std::vector<double>> beta, double theta, double radius, double amplitude) {
        std::vector<double> b =
            beta ? *beta : basis_weights(spec_of(s, theta, radius, amplitude));
        Eigen::VectorXd beta_vec(static_cast<Eigen::Index>(b.size()));
        for (std::size_t j = 0; j < b.size(); ++j)
          beta_vec[static_cast<Eigen::Index>(j)] = b[j];
        PodWeights weights = pod_weights(sigma, p, beta_vec, epsilon);
        CbcResult result = cbc_construct(n, s, weights);
        return py::make_tuple(result.rule.z, result.error_sq_by_dim);
      },
      py::arg("n"), py::arg("s"), py::arg("sigma") = 1.0, py::arg("p") = 0.55,
      py::arg("epsilon") = 0.05, py::arg("beta") = std::nullopt, py::arg("theta") = 2.0,
      py::arg("radius") = 14.0, py::arg("amplitude") = 5.0,
      "Component-by-component generating vector and the squared worst-case error per dimension");

  m.def(
      "simulate",
      [](const std::string& out_path, const std::string& truth, std::uint64_t truth_seed,
         double gamma0, std::uint64_t noise_seed, double fine_h, double inversion_h, int dimension,
         double theta, double radius, int electrodes, double electrode_width, double impedance) {
        GroundTruth gt;
        gt.kind = truth == "inclusion" ? TruthKind::inclusion : TruthKind::parametric;
        gt.seed = truth_seed;
        NoiseModel noise;
        noise.gamma0 = gamma0;
        noise.seed = noise_seed;
        BasisSpec spec = spec_of(dimension, theta, radius, 5.0);
        MeasurementSet data = simulate_measurements(
            gt, spec, fine_h, inversion_h, uniform_electrodes(electrodes, electrode_width,
                                                              impedance),
            reference_patterns(electrodes), noise);
        save_measurements(data, out_path);
        py::dict d;
        d["electrodes"] = data.voltages.rows();
        d["patterns"] = data.voltages.cols();
        d["path"] = out_path;
        return d;
      },
      py::arg("out_path"), py::arg("truth") = "parametric", py::arg("truth_seed") = 42,
      py::arg("gamma0") = 0.014, py::arg("noise_seed") = 101, py::arg("fine_h") = 0.748,
      py::arg("inversion_h") = 1.496, py::arg("dimension") = 20, py::arg("theta") = 2.0,
      py::arg("radius") = 14.0, py::arg("electrodes") = 16, py::arg("electrode_width") = 2.8,
      py::arg("impedance") = 0.005,
      "Simulate noisy electrode measurements on a fine mesh and save them");

  m.def(
      "posterior_mean",
      [](const std::string& measurements_path, std::int64_t n, int shifts,
         const std::string& method, int grid_resolution, double h, int dimension, double theta,
         double radius, std::optional<std::vector<std::uint32_t>> z, std::uint64_t shift_seed,
         std::uint64_t mc_seed, int threads) {
        MeasurementSet data = load_measurements(measurements_path);
        BasisSpec spec = spec_of(dimension, theta, radius, 5.0);
        Mesh mesh = build_disk_mesh(radius, h, data.electrodes);
        Grid grid = make_grid({grid_resolution, radius});
        SamplingPlan plan;
        if (method == "qmc")
          plan = QmcPlan{rule_of(n, z, dimension), make_shifts(shifts, dimension, shift_seed)};
        else if (method == "mc")
          plan = McPlan{n, shifts, mc_seed};
        else
          throw std::invalid_argument("method must be qmc or mc");
        EstimatorOptions options;
        options.threads = threads;
        PosteriorEstimate est = ratio_estimate(plan, data, spec, mesh, grid, options);
        Eigen::MatrixXd pts(est.grid.size(), 2);
        for (int i = 0; i < est.grid.size(); ++i) {
          pts(i, 0) = est.grid.points[static_cast<std::size_t>(i)].x;
          pts(i, 1) = est.grid.points[static_cast<std::size_t>(i)].y;
        }
        py::dict d;
        d["points"] = pts;
        d["mean"] = est.mean;
        d["variance"] = est.variance;
        d["margin"] = est.margin;
        d["log_normalizer"] = est.log_normalizer;
        d["effective_samples"] = est.effective_samples;
        return d;
      },
      py::arg("measurements_path"), py::arg("n") = 1024, py::arg("shifts") = 8,
      py::arg("method") = "qmc", py::arg("grid_resolution") = 32, py::arg("h") = 1.496,
      py::arg("dimension") = 20, py::arg("theta") = 2.0, py::arg("radius") = 14.0,
      py::arg("z") = std::nullopt, py::arg("shift_seed") = 7, py::arg("mc_seed") = 11,
      py::arg("threads") = 0,
      "Self-normalized posterior-mean conductivity on a grid, with variances and margins");
}
