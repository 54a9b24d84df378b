#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "doctest.h"
#include "eit/config.hpp"
#include "eit/errors.hpp"
#include "eit/io.hpp"
#include "eit/lattice.hpp"

using namespace eit;

namespace {

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

/* Scratch directory removed on destruction; keeps the suite rerunnable. */
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("eit-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("empty config text yields the defaults") {
  std::istringstream empty("");
  CHECK(parse_config_text(empty) == RunConfig{});

  std::istringstream comments("# nothing here\n\n   # still nothing\n");
  CHECK(parse_config_text(comments) == RunConfig{});
}

TEST_CASE("config round-trips through its canonical text form") {
  RunConfig c;
  c.radius = 7.3;
  c.electrodes = 8;
  c.electrode_width = 1.0 / 3.0;
  c.contact_impedance = 0.0125;
  c.theta = 1.3;
  c.dimension = 64;
  c.amplitude = 4.9999999999999991;
  c.gamma0 = 0.0;
  c.noise_seed = 18446744073709551615ULL;
  c.fine_h = 0.374;
  c.coarse_h = 2.992;
  c.truth = "inclusion";
  c.truth_seed = 0;
  c.inclusion_center_x = -4.0;
  c.inclusion_center_y = -2.0;
  c.inclusion_radius = 1.2;
  c.inclusion_contrast = -0.8;
  c.n = 1048576;
  c.shifts = 3;
  c.shift_seed = 99;
  c.mc_seed = 123456789;
  c.grid = 17;
  c.sigma = 2.0;
  c.p = 0.66666666666666663;
  c.epsilon = 0.049999999999999996;
  c.beta_scale = 0.1;
  c.method = "mc";
  c.level_min = 3;
  c.level_max = 11;
  c.data = "measurements.csv";

  std::ostringstream text;
  write_config(c, text);
  std::istringstream back(text.str());
  CHECK(parse_config_text(back) == c);

  // canonical form is stable: writing the reparse gives identical bytes
  std::istringstream reread(text.str());
  std::ostringstream again;
  write_config(parse_config_text(reread), again);
  CHECK(again.str() == text.str());
}

TEST_CASE("parser reports unknown and malformed lines with their line numbers") {
  std::istringstream bad(
      "radius = 14.0\n"
      "bogus_key = 3\n"
      "no equals sign here\n"
      "theta = fast\n");
  const std::string msg = error_text([&] { parse_config_text(bad); });
  CHECK(contains(msg, "line 2: unknown key 'bogus_key'"));
  CHECK(contains(msg, "line 3: expected key=value"));
  CHECK(contains(msg, "line 4: theta"));
  CHECK_THROWS_AS(
      {
        std::istringstream again(
            "radius = 14.0\nbogus_key = 3\nno equals sign here\ntheta = fast\n");
        parse_config_text(again);
      },
      ConfigError);
}

TEST_CASE("duplicate keys are rejected even with identical values") {
  std::istringstream dup("theta = 2.0\ntheta = 2.0\n");
  const std::string msg = error_text([&] { parse_config_text(dup); });
  CHECK(contains(msg, "line 2: duplicate key 'theta'"));
}

TEST_CASE("validation failures are aggregated into one error") {
  std::istringstream bad(
      "radius = -1\n"
      "theta = 1.0\n"
      "p = 2\n"
      "method = quick\n"
      "contact_impedance = 0\n");
  const std::string msg = error_text([&] { parse_config_text(bad); });
  CHECK(contains(msg, "radius must be positive"));
  CHECK(contains(msg, "theta must be > 1"));
  CHECK(contains(msg, "p must lie in (0, 1)"));
  CHECK(contains(msg, "method must be 'qmc', 'mc' or 'both'"));
  CHECK(contains(msg, "contact_impedance must be positive"));
}

TEST_CASE("geometric consistency checks reject impossible setups") {
  // 16 electrodes of width 6 need 96 > 2*pi*14 of circumference
  std::istringstream wide("electrode_width = 6\n");
  CHECK(contains(error_text([&] { parse_config_text(wide); }), "do not fit"));

  std::istringstream inc(
      "truth = inclusion\ninclusion_center_x = -12\ninclusion_center_y = -5\n");
  CHECK(contains(error_text([&] { parse_config_text(inc); }),
                 "inclusion does not fit inside the domain disk"));

  std::istringstream levels("level_min = 8\nlevel_max = 4\n");
  CHECK(contains(error_text([&] { parse_config_text(levels); }), "levels must satisfy"));
}

TEST_CASE("file-based parsing checks that referenced files exist") {
  TempDir dir;
  CHECK_THROWS_AS(parse_config(dir.file("missing.cfg")), ConfigError);

  write_text_file(dir.file("points-nowhere.cfg"), "data = /nonexistent/meas.csv\n");
  CHECK(contains(error_text([&] { parse_config(dir.file("points-nowhere.cfg")); }),
                 "data file does not exist"));

  write_text_file(dir.file("bad-vector.cfg"), "generating_vector = /nonexistent/z.txt\n");
  CHECK(contains(error_text([&] { parse_config(dir.file("bad-vector.cfg")); }),
                 "generating_vector file does not exist"));

  write_text_file(dir.file("ok.cfg"), "n = 512\nshifts = 4\n");
  const RunConfig c = parse_config(dir.file("ok.cfg"));
  CHECK(c.n == 512);
  CHECK(c.shifts == 4);
  CHECK(c.radius == 14.0);
}

TEST_CASE("config views map onto the module-level inputs") {
  RunConfig c;
  const ElectrodeConfig e = electrodes_from(c);
  CHECK(e.count == 16);
  CHECK(e.width == 2.8);
  CHECK(e.contact_impedance.size() == 16);
  CHECK(e.contact_impedance.minCoeff() == 0.005);
  CHECK(e.contact_impedance.maxCoeff() == 0.005);

  const BasisSpec b = basis_from(c);
  CHECK(b.dimension == 20);
  CHECK(b.theta == 2.0);
  CHECK(b.radius == 14.0);
  CHECK(b.amplitude == 5.0);

  c.truth = "inclusion";
  const GroundTruth t = truth_from(c);
  CHECK(t.kind == TruthKind::inclusion);
  CHECK(t.center.x == -4.0);
  CHECK(t.center.y == -5.0);
  CHECK(t.inclusion_radius == 3.0);
  CHECK(t.contrast == 0.2);

  const NoiseModel noise = noise_from(c);
  CHECK(noise.gamma0 == 0.014);
  CHECK(noise.seed == 101);

  const GridSpec g = grid_from(c);
  CHECK(g.resolution == 128);
  CHECK(g.radius == 14.0);
}

TEST_CASE("generating vector resolves to the embedded table or a named file") {
  RunConfig c;
  const auto embedded = generating_from(c);
  const auto def = default_generating_vector();
  REQUIRE(embedded.size() == def.size());
  for (std::size_t j = 0; j < embedded.size(); ++j) CHECK(embedded[j] == def[j]);

  TempDir dir;
  {
    std::ofstream os(dir.file("z.txt"));
    save_generating_vector(std::vector<std::uint32_t>{1, 5, 3}, 8, os);
  }
  c.generating_vector = dir.file("z.txt");
  const auto loaded = generating_from(c);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[0] == 1);
  CHECK(loaded[1] == 5);
  CHECK(loaded[2] == 3);
}

TEST_CASE("file hashing matches the 64-bit FNV-1a reference values") {
  TempDir dir;
  write_text_file(dir.file("empty"), "");
  write_text_file(dir.file("a"), "a");
  write_text_file(dir.file("foobar"), "foobar");
  CHECK(hash_file(dir.file("empty")) == 0xcbf29ce484222325ULL);
  CHECK(hash_file(dir.file("a")) == 0xaf63dc4c8601ec8cULL);
  CHECK(hash_file(dir.file("foobar")) == 0x85944171f73967e8ULL);
  CHECK_THROWS_AS(hash_file(dir.file("nonexistent")), ConfigError);
}

TEST_CASE("manifest lists sorted names with recomputed hashes") {
  TempDir dir;
  write_text_file(dir.file("beta.txt"), "foobar");
  write_text_file(dir.file("alpha.txt"), "a");
  write_manifest(dir.path.string(), {"beta.txt", "alpha.txt"});

  std::ifstream is(dir.file("manifest.txt"));
  REQUIRE(bool(is));
  std::string line1, line2, extra;
  REQUIRE(bool(std::getline(is, line1)));
  REQUIRE(bool(std::getline(is, line2)));
  CHECK_FALSE(bool(std::getline(is, extra)));
  CHECK(line1 == "af63dc4c8601ec8c  alpha.txt");
  CHECK(line2 == "85944171f73967e8  beta.txt");
}

TEST_CASE("graymap output is pinned for a two-by-two grid") {
  const Grid grid = make_grid(GridSpec{2, 1.0});
  REQUIRE(grid.size() == 4);
  Eigen::VectorXd values(4);
  values << 0.0, 1.0, 2.0, 3.0;
  std::ostringstream os;
  write_pgm(grid, values, os);
  CHECK(os.str() ==
        "P2\n"
        "# values min 0 max 3; gray = round(255*(v-min)/(max-min)); outside the disk = 0\n"
        "2 2\n255\n"
        "170 255\n"
        "0 85\n");

  // constant fields render mid-gray rather than dividing by zero
  std::ostringstream flat;
  write_pgm(grid, Eigen::VectorXd::Constant(4, 2.5), flat);
  CHECK(contains(flat.str(), "128 128\n128 128\n"));

  CHECK_THROWS_AS(write_pgm(grid, Eigen::VectorXd::Zero(3), std::cout),
                  std::invalid_argument);
}

TEST_CASE("grid csv writers emit headers and one row per kept cell") {
  const Grid grid = make_grid(GridSpec{4, 1.0});
  REQUIRE(grid.size() == 12);
  std::ostringstream os;
  write_grid_csv(grid, Eigen::VectorXd::LinSpaced(12, 0.0, 11.0), os);
  std::istringstream lines(os.str());
  std::string line;
  REQUIRE(bool(std::getline(lines, line)));
  CHECK(line == "# x,y,value");
  REQUIRE(bool(std::getline(lines, line)));
  CHECK(line == "# resolution 4 radius 1");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  CHECK(rows == 12);
  CHECK_THROWS_AS(write_grid_csv(grid, Eigen::VectorXd::Zero(5), std::cout),
                  std::invalid_argument);
}

TEST_CASE("rms, timing, fit and plot writers agree on the study layout") {
  ConvergenceStudy qmc;
  qmc.method = "qmc";
  qmc.levels = {StudyLevel{1024, 0.5, 1.25}, StudyLevel{2048, 0.25, 2.5}};
  qmc.fit = RateFit{-1.0, 512.0};
  ConvergenceStudy mc;
  mc.method = "mc";
  mc.levels = {StudyLevel{1024, 0.5, 0.0}};
  mc.fit.reset();

  std::ostringstream rms;
  write_rms_csv(qmc, rms);
  CHECK(rms.str() == "# n,rms\n1024,0.5\n2048,0.25\n");

  std::ostringstream timing;
  write_timing(qmc, timing);
  CHECK(timing.str() == "# n seconds\n1024 1.25\n2048 2.5\n");

  const ConvergenceStudy studies[] = {qmc, mc};
  std::ostringstream fits;
  write_fits(studies, fits);
  CHECK(fits.str() == "# method rate constant\nqmc -1 512\nmc nan nan\n");

  const std::string names[] = {"rms_qmc.csv", "rms_mc.csv"};
  std::ostringstream plot;
  write_gnuplot_script(studies, names, plot);
  CHECK(contains(plot.str(), "set logscale xy 2"));
  CHECK(contains(plot.str(), "'rms_qmc.csv' using 1:2 with points title 'qmc'"));
  CHECK(contains(plot.str(), "512*x**(-1) with lines title 'qmc fit'"));
  CHECK(contains(plot.str(), "'rms_mc.csv' using 1:2 with points title 'mc'"));

  const std::string one_name[] = {"rms.csv"};
  CHECK_THROWS_AS(write_gnuplot_script(studies, one_name, std::cout),
                  std::invalid_argument);
}

TEST_CASE("measurements with a dense covariance round-trip bit-exactly") {
  MeasurementSet data;
  data.electrodes = uniform_electrodes(4, 0.3, 0.01);
  Eigen::VectorXd i1(4), i2(4);
  i1 << 1.0, -1.0, 0.0, 0.0;
  i2 << 0.5, 0.0, -0.25, -0.25;
  data.patterns = {make_pattern(i1), make_pattern(i2)};
  data.voltages.resize(4, 2);
  data.voltages << std::sqrt(2.0), -1.0 / 3.0, 0.1234567890123456789, -2.25, 1e-17, -7.5e+8,
      0.0, 3.0;
  Eigen::VectorXd v(4);
  v << 0.1, -0.2, 0.3, 0.05;
  data.gamma = 0.02 * Eigen::MatrixXd::Identity(4, 4) + 0.005 * (v * v.transpose());
  data.metadata["truth"] = "inclusion";
  data.metadata["note"] = "a=b=c";

  std::ostringstream os;
  write_measurements(data, os);
  CHECK(contains(os.str(), "gamma\n"));        // dense covariance goes to its own section
  CHECK_FALSE(contains(os.str(), "gamma_scale"));  // which replaces the scalar form

  std::istringstream is(os.str());
  const MeasurementSet back = read_measurements(is);
  CHECK_NOTHROW(validate_measurements(back));
  CHECK((back.voltages - data.voltages).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.gamma - data.gamma).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.patterns.size() == 2);
  CHECK((back.patterns[0].values - data.patterns[0].values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.patterns[1].values - data.patterns[1].values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.electrodes.count == 4);
  CHECK(back.electrodes.width == 0.3);
  CHECK((back.electrodes.contact_impedance - data.electrodes.contact_impedance)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(back.metadata == data.metadata);
}

TEST_CASE("malformed measurement files are rejected with a reason") {
  std::istringstream early("currents\n1,2\n");
  CHECK(contains(error_text([&] { read_measurements(early); }),
                 "sections before the electrode/pattern counts"));

  std::istringstream nothing("# eit measurements\n");
  CHECK(contains(error_text([&] { read_measurements(nothing); }),
                 "lacks electrode/pattern counts"));

  std::istringstream no_gamma(
      "# electrodes 2\n# patterns 1\n# electrode_width 0.5\n# contact_impedance 0.1,0.1\n"
      "currents\n1\n-1\nvoltages\n2\n-2\n");
  CHECK(contains(error_text([&] { read_measurements(no_gamma); }),
                 "lacks the noise covariance"));

  std::istringstream short_row(
      "# electrodes 2\n# patterns 2\n# electrode_width 0.5\n# contact_impedance 0.1,0.1\n"
      "# gamma_scale 0.014\ncurrents\n1,0\n-1,0\nvoltages\n2\n-2,1\n");
  CHECK(contains(error_text([&] { read_measurements(short_row); }), "expected 2"));

  std::istringstream bad_impedance(
      "# electrodes 2\n# patterns 1\n# electrode_width 0.5\n# contact_impedance 0.1\n"
      "# gamma_scale 0.014\ncurrents\n1\n-1\nvoltages\n2\n-2\n");
  CHECK(contains(error_text([&] { read_measurements(bad_impedance); }),
                 "does not match the electrode count"));
}
