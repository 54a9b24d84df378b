#include "eit/config.hpp"

#include <climits>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "eit/errors.hpp"
#include "eit/lattice.hpp"

namespace eit {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + v + "'");
  }
  if (pos != v.size()) throw std::invalid_argument("trailing characters after number: '" + v + "'");
  if (!std::isfinite(d)) throw std::invalid_argument("number must be finite: '" + v + "'");
  return d;
}

int to_int(const std::string& v) {
  std::size_t pos = 0;
  long long d = 0;
  try {
    d = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("not an integer: '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("trailing characters after integer: '" + v + "'");
  if (d < INT_MIN || d > INT_MAX) throw std::invalid_argument("integer out of range: '" + v + "'");
  return static_cast<int>(d);
}

std::int64_t to_int64(const std::string& v) {
  std::size_t pos = 0;
  long long d = 0;
  try {
    d = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("not an integer: '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("trailing characters after integer: '" + v + "'");
  return d;
}

std::uint64_t to_uint64(const std::string& v) {
  std::size_t pos = 0;
  unsigned long long d = 0;
  try {
    d = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("not an unsigned integer: '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("trailing characters after integer: '" + v + "'");
  if (!v.empty() && v[0] == '-') throw std::invalid_argument("value must be nonnegative: '" + v + "'");
  return d;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define EIT_KEY_DOUBLE(field)                                              \
  Key{#field, [](RunConfig& c, const std::string& v) { c.field = to_double(v); }, \
      [](const RunConfig& c) { return fmt_double(c.field); }}
#define EIT_KEY_INT(field)                                              \
  Key{#field, [](RunConfig& c, const std::string& v) { c.field = to_int(v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define EIT_KEY_INT64(field)                                              \
  Key{#field, [](RunConfig& c, const std::string& v) { c.field = to_int64(v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define EIT_KEY_UINT64(field)                                              \
  Key{#field, [](RunConfig& c, const std::string& v) { c.field = to_uint64(v); }, \
      [](const RunConfig& c) { return std::to_string(c.field); }}
#define EIT_KEY_STRING(field)                                       \
  Key{#field, [](RunConfig& c, const std::string& v) { c.field = v; }, \
      [](const RunConfig& c) { return c.field; }}

const std::vector<Key>& key_table() {
  static const std::vector<Key> keys = {
      EIT_KEY_DOUBLE(radius),
      EIT_KEY_INT(electrodes),
      EIT_KEY_DOUBLE(electrode_width),
      EIT_KEY_DOUBLE(contact_impedance),
      EIT_KEY_DOUBLE(theta),
      EIT_KEY_INT(dimension),
      EIT_KEY_DOUBLE(amplitude),
      EIT_KEY_DOUBLE(gamma0),
      EIT_KEY_UINT64(noise_seed),
      EIT_KEY_DOUBLE(fine_h),
      EIT_KEY_DOUBLE(coarse_h),
      EIT_KEY_STRING(truth),
      EIT_KEY_UINT64(truth_seed),
      EIT_KEY_DOUBLE(inclusion_center_x),
      EIT_KEY_DOUBLE(inclusion_center_y),
      EIT_KEY_DOUBLE(inclusion_radius),
      EIT_KEY_DOUBLE(inclusion_contrast),
      EIT_KEY_INT64(n),
      EIT_KEY_INT(shifts),
      EIT_KEY_UINT64(shift_seed),
      EIT_KEY_UINT64(mc_seed),
      EIT_KEY_STRING(generating_vector),
      EIT_KEY_INT(grid),
      EIT_KEY_DOUBLE(sigma),
      EIT_KEY_DOUBLE(p),
      EIT_KEY_DOUBLE(epsilon),
      EIT_KEY_DOUBLE(beta_scale),
      EIT_KEY_STRING(method),
      EIT_KEY_INT(level_min),
      EIT_KEY_INT(level_max),
      EIT_KEY_STRING(data),
  };
  return keys;
}

#undef EIT_KEY_DOUBLE
#undef EIT_KEY_INT
#undef EIT_KEY_INT64
#undef EIT_KEY_UINT64
#undef EIT_KEY_STRING

void validate(const RunConfig& c, std::vector<std::string>& errors) {
  auto fail = [&errors](const std::string& msg) { errors.push_back(msg); };
  if (!(c.radius > 0.0)) fail("radius must be positive");
  if (c.electrodes < 2) fail("electrodes must be >= 2");
  if (!(c.electrode_width > 0.0)) fail("electrode_width must be positive");
  if (c.radius > 0.0 && c.electrode_width > 0.0 && c.electrodes >= 2 &&
      c.electrodes * c.electrode_width >= 2.0 * M_PI * c.radius)
    fail("electrodes do not fit on the boundary circle (count * width >= circumference)");
  if (!(c.contact_impedance > 0.0)) fail("contact_impedance must be positive");
  if (!(c.theta > 1.0)) fail("theta must be > 1");
  if (c.dimension < 1) fail("dimension must be >= 1");
  if (!(c.amplitude > 0.0)) fail("amplitude must be positive");
  if (!(c.gamma0 >= 0.0)) fail("gamma0 must be nonnegative");
  if (!(c.fine_h > 0.0)) fail("fine_h must be positive");
  if (!(c.coarse_h > 0.0)) fail("coarse_h must be positive");
  if (c.truth != "parametric" && c.truth != "inclusion")
    fail("truth must be 'parametric' or 'inclusion'");
  if (c.truth == "inclusion") {
    if (!(c.inclusion_radius > 0.0)) fail("inclusion_radius must be positive");
    if (!(c.inclusion_contrast > -1.0)) fail("inclusion_contrast must exceed -1");
    if (c.radius > 0.0 && c.inclusion_radius > 0.0 &&
        std::hypot(c.inclusion_center_x, c.inclusion_center_y) + c.inclusion_radius > c.radius)
      fail("inclusion does not fit inside the domain disk");
  }
  if (c.n < 1) fail("n must be >= 1");
  if (c.shifts < 1) fail("shifts must be >= 1");
  if (c.grid < 1) fail("grid must be >= 1");
  if (!(c.sigma >= 1.0)) fail("sigma must be >= 1");
  if (!(c.p > 0.0 && c.p < 1.0)) fail("p must lie in (0, 1)");
  if (!(c.epsilon > 0.0 && c.epsilon < 0.5)) fail("epsilon must lie in (0, 1/2)");
  if (!(c.beta_scale > 0.0)) fail("beta_scale must be positive");
  if (c.method != "qmc" && c.method != "mc" && c.method != "both")
    fail("method must be 'qmc', 'mc' or 'both'");
  if (c.level_min < 1 || c.level_max < c.level_min || c.level_max > 40)
    fail("levels must satisfy 1 <= level_min <= level_max <= 40");
  if (c.generating_vector.empty()) fail("generating_vector must be 'embedded' or a file path");
}

}  // namespace

RunConfig parse_config_text(std::istream& is) {
  RunConfig config;
  std::vector<std::string> errors;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected key=value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Key* desc = nullptr;
    for (const Key& k : key_table())
      if (key == k.name) {
        desc = &k;
        break;
      }
    if (desc == nullptr) {
      errors.push_back("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      continue;
    }
    if (!seen.insert(key).second) {
      errors.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      continue;
    }
    try {
      desc->set(config, value);
    } catch (const std::exception& e) {
      errors.push_back("line " + std::to_string(lineno) + ": " + key + ": " + e.what());
    }
  }
  validate(config, errors);
  if (!errors.empty()) {
    std::string joined = "invalid configuration:";
    for (const std::string& e : errors) joined += "\n  " + e;
    throw ConfigError(joined);
  }
  return config;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  RunConfig config;
  try {
    config = parse_config_text(is);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (config.generating_vector != "embedded" &&
      !std::filesystem::exists(config.generating_vector))
    throw ConfigError(path + ": generating_vector file does not exist: " +
                      config.generating_vector);
  if (!config.data.empty() && !std::filesystem::exists(config.data))
    throw ConfigError(path + ": data file does not exist: " + config.data);
  return config;
}

void write_config(const RunConfig& config, std::ostream& os) {
  for (const Key& k : key_table()) os << k.name << '=' << k.get(config) << '\n';
}

ElectrodeConfig electrodes_from(const RunConfig& config) {
  return uniform_electrodes(config.electrodes, config.electrode_width, config.contact_impedance);
}

BasisSpec basis_from(const RunConfig& config) {
  BasisSpec spec;
  spec.dimension = config.dimension;
  spec.theta = config.theta;
  spec.radius = config.radius;
  spec.amplitude = config.amplitude;
  return spec;
}

GroundTruth truth_from(const RunConfig& config) {
  GroundTruth truth;
  truth.kind = config.truth == "inclusion" ? TruthKind::inclusion : TruthKind::parametric;
  truth.seed = config.truth_seed;
  truth.center = {config.inclusion_center_x, config.inclusion_center_y};
  truth.inclusion_radius = config.inclusion_radius;
  truth.contrast = config.inclusion_contrast;
  return truth;
}

NoiseModel noise_from(const RunConfig& config) {
  return NoiseModel{config.gamma0, config.noise_seed};
}

GridSpec grid_from(const RunConfig& config) { return GridSpec{config.grid, config.radius}; }

std::vector<std::uint32_t> generating_from(const RunConfig& config) {
  if (config.generating_vector == "embedded") {
    const auto z = default_generating_vector();
    return std::vector<std::uint32_t>(z.begin(), z.end());
  }
  std::ifstream is(config.generating_vector);
  if (!is) throw ConfigError("cannot open generating-vector file: " + config.generating_vector);
  return load_generating_vector(is).z;
}

}  // namespace eit
