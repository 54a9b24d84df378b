#include "eit/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "eit/errors.hpp"
#include "eit/numeric.hpp"

namespace eit {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<double> split_row(const std::string& line, int expected, const char* what) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      row.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad number in ") + what + " row: '" + cell + "'");
    }
  }
  if (static_cast<int>(row.size()) != expected)
    throw ConfigError(std::string(what) + " row has " + std::to_string(row.size()) +
                      " entries, expected " + std::to_string(expected));
  return row;
}

/* True when gamma == scale * identity exactly (bitwise), as written by the
   simulator; anything else round-trips through the dense section. */
bool isotropic_gamma(const Eigen::MatrixXd& gamma, double& scale) {
  if (gamma.rows() != gamma.cols() || gamma.rows() == 0) return false;
  scale = gamma(0, 0);
  for (Eigen::Index i = 0; i < gamma.rows(); ++i)
    for (Eigen::Index j = 0; j < gamma.cols(); ++j)
      if (gamma(i, j) != (i == j ? scale : 0.0)) return false;
  return true;
}

}  // namespace

void write_measurements(const MeasurementSet& data, std::ostream& os) {
  const int m = data.electrodes.count;
  const int p = static_cast<int>(data.patterns.size());
  os << "# eit measurements\n";
  os << "# electrodes " << m << '\n';
  os << "# patterns " << p << '\n';
  os << "# electrode_width " << fmt(data.electrodes.width) << '\n';
  os << "# contact_impedance ";
  for (int i = 0; i < m; ++i) os << (i ? "," : "") << fmt(data.electrodes.contact_impedance[i]);
  os << '\n';
  double scale = 0.0;
  const bool iso = isotropic_gamma(data.gamma, scale);
  if (iso) os << "# gamma_scale " << fmt(scale) << '\n';
  for (const auto& [key, value] : data.metadata) os << "# meta " << key << '=' << value << '\n';
  os << "currents\n";
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p; ++j) os << (j ? "," : "") << fmt(data.patterns[std::size_t(j)].values[i]);
    os << '\n';
  }
  os << "voltages\n";
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < p; ++j) os << (j ? "," : "") << fmt(data.voltages(i, j));
    os << '\n';
  }
  if (!iso) {
    os << "gamma\n";
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) os << (j ? "," : "") << fmt(data.gamma(i, j));
      os << '\n';
    }
  }
}

MeasurementSet read_measurements(std::istream& is) {
  MeasurementSet data;
  int m = -1, p = -1;
  double width = 0.0;
  std::vector<double> impedance;
  double gamma_scale = -1.0;
  Eigen::MatrixXd currents;

  std::string line;
  std::string section;
  int rows_read = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::stringstream ss(line.substr(1));
      std::string tag;
      ss >> tag;
      if (tag == "electrodes") ss >> m;
      else if (tag == "patterns") ss >> p;
      else if (tag == "electrode_width") { std::string v; ss >> v; width = std::stod(v); }
      else if (tag == "contact_impedance") {
        std::string rest;
        std::getline(ss, rest);
        std::stringstream cs(rest);
        std::string cell;
        while (std::getline(cs, cell, ',')) impedance.push_back(std::stod(cell));
      } else if (tag == "gamma_scale") {
        std::string v;
        ss >> v;
        gamma_scale = std::stod(v);
      } else if (tag == "meta") {
        std::string rest;
        std::getline(ss, rest);
        if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
        const auto eq = rest.find('=');
        if (eq == std::string::npos) throw ConfigError("meta line without '=': " + rest);
        data.metadata[rest.substr(0, eq)] = rest.substr(eq + 1);
      }
      continue;
    }
    if (line == "currents" || line == "voltages" || line == "gamma") {
      if (m < 1 || p < 1)
        throw ConfigError("measurement sections before the electrode/pattern counts");
      if (section == "currents" && rows_read != m)
        throw ConfigError("currents section is incomplete");
      if (section == "voltages" && rows_read != m)
        throw ConfigError("voltages section is incomplete");
      section = line;
      rows_read = 0;
      if (section == "currents") currents.resize(m, p);
      if (section == "voltages") data.voltages.resize(m, p);
      if (section == "gamma") data.gamma.resize(m, m);
      continue;
    }
    if (section.empty()) throw ConfigError("unexpected row outside any section: " + line);
    const int cols = section == "gamma" ? m : p;
    if (rows_read >= m) throw ConfigError("too many rows in section " + section);
    const std::vector<double> row = split_row(line, cols, section.c_str());
    for (int j = 0; j < cols; ++j) {
      if (section == "currents") currents(rows_read, j) = row[std::size_t(j)];
      else if (section == "voltages") data.voltages(rows_read, j) = row[std::size_t(j)];
      else data.gamma(rows_read, j) = row[std::size_t(j)];
    }
    ++rows_read;
  }
  if (m < 1 || p < 1) throw ConfigError("measurement file lacks electrode/pattern counts");
  if (currents.rows() != m) throw ConfigError("measurement file lacks a currents section");
  if (data.voltages.rows() != m) throw ConfigError("measurement file lacks a voltages section");
  if (!section.empty() && rows_read != m)
    throw ConfigError("final section " + section + " is incomplete");
  if (static_cast<int>(impedance.size()) != m)
    throw ConfigError("contact impedance list does not match the electrode count");
  if (!(width > 0.0)) throw ConfigError("measurement file lacks a positive electrode width");
  for (double z : impedance)
    if (!(z > 0.0)) throw ConfigError("contact impedances must be positive");

  data.electrodes.count = m;
  data.electrodes.width = width;
  data.electrodes.contact_impedance =
      Eigen::Map<const Eigen::VectorXd>(impedance.data(), m);
  for (int j = 0; j < p; ++j) data.patterns.push_back(make_pattern(currents.col(j)));
  if (data.gamma.rows() == 0) {
    if (gamma_scale < 0.0) throw ConfigError("measurement file lacks the noise covariance");
    data.gamma = gamma_scale * Eigen::MatrixXd::Identity(m, m);
  }
  return data;
}

void save_measurements(const MeasurementSet& data, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write file: " + path);
  write_measurements(data, os);
  if (!os) throw ConfigError("failed while writing file: " + path);
}

MeasurementSet load_measurements(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open measurement file: " + path);
  return read_measurements(is);
}

void write_posterior_csv(const PosteriorEstimate& estimate, std::ostream& os) {
  os << "# x,y,mean,variance,margin\n";
  os << "# resolution " << estimate.grid.resolution << " radius " << fmt(estimate.grid.radius)
     << '\n';
  for (int g = 0; g < estimate.grid.size(); ++g) {
    const Vec2 pt = estimate.grid.points[std::size_t(g)];
    os << fmt(pt.x) << ',' << fmt(pt.y) << ',' << fmt(estimate.mean[g]) << ','
       << fmt(estimate.variance[g]) << ',' << fmt(estimate.margin[g]) << '\n';
  }
}

void write_grid_csv(const Grid& grid, const Eigen::VectorXd& values, std::ostream& os) {
  if (values.size() != grid.size())
    throw std::invalid_argument("value count does not match the grid");
  os << "# x,y,value\n";
  os << "# resolution " << grid.resolution << " radius " << fmt(grid.radius) << '\n';
  for (int g = 0; g < grid.size(); ++g) {
    const Vec2 pt = grid.points[std::size_t(g)];
    os << fmt(pt.x) << ',' << fmt(pt.y) << ',' << fmt(values[g]) << '\n';
  }
}

void write_pgm(const Grid& grid, const Eigen::VectorXd& values, std::ostream& os) {
  if (values.size() != grid.size())
    throw std::invalid_argument("value count does not match the grid");
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  const int res = grid.resolution;
  os << "P2\n";
  os << "# values min " << fmt(lo) << " max " << fmt(hi)
     << "; gray = round(255*(v-min)/(max-min)); outside the disk = 0\n";
  os << res << ' ' << res << "\n255\n";
  for (int iy = res - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < res; ++ix) {
      int gray = 0;
      const int idx = grid.cell_index[std::size_t(iy) * std::size_t(res) + std::size_t(ix)];
      if (idx >= 0)
        gray = hi > lo ? static_cast<int>(std::lround(255.0 * (values[idx] - lo) / (hi - lo)))
                       : 128;
      os << (ix ? " " : "") << gray;
    }
    os << '\n';
  }
}

void write_rms_csv(const ConvergenceStudy& study, std::ostream& os) {
  os << "# n,rms\n";
  for (const StudyLevel& level : study.levels)
    os << level.n << ',' << fmt(level.rms) << '\n';
}

void write_timing(const ConvergenceStudy& study, std::ostream& os) {
  os << "# n seconds\n";
  for (const StudyLevel& level : study.levels) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", level.seconds);
    os << level.n << ' ' << buf << '\n';
  }
}

void write_fits(std::span<const ConvergenceStudy> studies, std::ostream& os) {
  os << "# method rate constant\n";
  for (const ConvergenceStudy& study : studies) {
    if (study.fit.has_value())
      os << study.method << ' ' << fmt(study.fit->rate) << ' ' << fmt(study.fit->constant) << '\n';
    else
      os << study.method << " nan nan\n";
  }
}

void write_gnuplot_script(std::span<const ConvergenceStudy> studies,
                          std::span<const std::string> csv_names, std::ostream& os) {
  if (studies.size() != csv_names.size())
    throw std::invalid_argument("one csv name per study required");
  os << "set logscale xy 2\n";
  os << "set xlabel 'n'\n";
  os << "set ylabel 'R.M.S. error'\n";
  os << "set datafile separator ','\n";
  os << "set key bottom left\n";
  os << "plot ";
  bool first = true;
  for (std::size_t i = 0; i < studies.size(); ++i) {
    if (!first) os << ", \\\n     ";
    first = false;
    os << '\'' << csv_names[i] << "' using 1:2 with points title '" << studies[i].method << '\'';
    if (studies[i].fit.has_value())
      os << ", \\\n     " << fmt(studies[i].fit->constant) << "*x**(" << fmt(studies[i].fit->rate)
         << ") with lines title '" << studies[i].method << " fit'";
  }
  os << '\n';
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write file: " + path);
  os << content;
  if (!os) throw ConfigError("failed while writing file: " + path);
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open file for hashing: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(is.gcount()), h);
  return h;
}

void write_manifest(const std::string& dir, std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  std::ostringstream body;
  for (const std::string& name : names) {
    char hex[20];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(
                      hash_file((std::filesystem::path(dir) / name).string())));
    body << hex << "  " << name << '\n';
  }
  write_text_file((std::filesystem::path(dir) / "manifest.txt").string(), body.str());
}

}  // namespace eit
