#include "eit/lattice.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "eit/errors.hpp"
#include "eit/numeric.hpp"

namespace eit {

namespace {

bool power_of_two(std::int64_t n) { return n >= 2 && (n & (n - 1)) == 0; }

/* Constructed by the repo's own component-by-component search (modulus 2^16,
   weights matched to the default conductivity prior); odd components stay
   valid for any power-of-two modulus after reduction. Regenerate with
   `eit cbc --n 65536 --s 32`. */
/* Constructed by `eit cbc --n 65536 --s 32` with the default weight parameters
   (sigma=1, p=0.55, epsilon=0.05, beta from the field weight sequence). Odd
   components stay valid for any power-of-two modulus; make_lattice reduces
   them for smaller n. */
constexpr std::uint32_t kDefaultGeneratingVector[32] = {
    1,     19463, 15683, 7625,  30007, 20551, 12693, 25591, 24745, 30769, 29657,
    4331,  5725,  24299, 21033, 14123, 27705, 16785, 31527, 10415, 5877,  28451,
    5403,  11611, 13553, 30957, 24167, 22633, 9593,  24831, 23857, 4603};

}  // namespace

std::span<const std::uint32_t> default_generating_vector() {
  return {kDefaultGeneratingVector, 32};
}

LatticeRule make_lattice(std::int64_t n, std::span<const std::uint32_t> z, int s) {
  if (!power_of_two(n))
    throw std::invalid_argument("lattice modulus must be a power of two >= 2, got " +
                                std::to_string(n));
  if (s < 1) throw std::invalid_argument("lattice dimension must be >= 1");
  if (int(z.size()) < s)
    throw std::invalid_argument("generating vector provides " + std::to_string(z.size()) +
                                " components, need " + std::to_string(s));
  LatticeRule rule;
  rule.n = n;
  rule.z.resize(std::size_t(s));
  for (int j = 0; j < s; ++j) {
    const std::uint32_t zj = z[std::size_t(j)];
    if (zj % 2 == 0)
      throw std::invalid_argument("generating vector component " + std::to_string(j + 1) +
                                  " is even; components must be coprime with the modulus");
    rule.z[std::size_t(j)] = std::uint32_t(zj % std::uint64_t(n));  // stays odd, n even
  }
  return rule;
}

LatticeRule default_lattice(std::int64_t n, int s) {
  return make_lattice(n, default_generating_vector(), s);
}

GeneratingVectorFile load_generating_vector(std::istream& is) {
  GeneratingVectorFile out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = line;
    const auto ws = t.find_first_not_of(" \t\r");
    t = ws == std::string::npos ? "" : t.substr(ws);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::istringstream hs(t.substr(1));
      std::string word;
      std::int64_t m = 0;
      if (hs >> word >> m && word == "modulus") {
        if (!power_of_two(m))
          throw ConfigError("generating vector file line " + std::to_string(lineno) +
                            ": modulus must be a power of two");
        out.modulus = m;
      }
      continue;
    }
    try {
      const long long v = std::stoll(t);
      if (v <= 0 || v > 0x7fffffffLL) throw std::out_of_range("range");
      out.z.push_back(std::uint32_t(v));
    } catch (const std::exception&) {
      throw ConfigError("generating vector file line " + std::to_string(lineno) +
                        ": expected one positive integer, got '" + t + "'");
    }
  }
  if (out.z.empty()) throw ConfigError("generating vector file has no components");
  return out;
}

void save_generating_vector(std::span<const std::uint32_t> z, std::int64_t modulus,
                            std::ostream& os) {
  os << "# modulus " << modulus << "\n";
  for (std::uint32_t v : z) os << v << "\n";
}

ShiftSet make_shifts(int count, int dim, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("shift count must be >= 1");
  if (dim < 1) throw std::invalid_argument("shift dimension must be >= 1");
  ShiftSet s;
  s.seed = seed;
  s.delta.resize(count, dim);
  for (int r = 0; r < count; ++r) {
    const std::uint64_t rs = derive_seed(seed, std::uint64_t(r));
    for (int j = 0; j < dim; ++j) s.delta(r, j) = uniform01(rs, std::uint64_t(j));
  }
  return s;
}

std::int64_t lattice_coord_int(const LatticeRule& rule, std::int64_t k, int j) {
  if (j < 0 || j >= rule.dimension()) throw std::invalid_argument("lattice coordinate out of range");
  const std::uint64_t kk = std::uint64_t(((k % rule.n) + rule.n) % rule.n);
  return std::int64_t((kk * rule.z[std::size_t(j)]) % std::uint64_t(rule.n));
}

Eigen::MatrixXd lattice_points(const LatticeRule& rule) {
  Eigen::MatrixXd pts(rule.n, rule.dimension());
  for (std::int64_t k = 0; k < rule.n; ++k)
    for (int j = 0; j < rule.dimension(); ++j)
      pts(k, j) = double(lattice_coord_int(rule, k, j)) / double(rule.n);
  return pts;
}

void shifted_lattice_point(const LatticeRule& rule, const ShiftSet& shifts, int r, std::int64_t k,
                           std::span<double> out) {
  const int s = rule.dimension();
  if (int(out.size()) != s) throw std::invalid_argument("output length mismatch");
  if (r < 0 || r >= shifts.count()) throw std::invalid_argument("shift index out of range");
  if (shifts.dimension() < s) throw std::invalid_argument("shift dimension too small");
  for (int j = 0; j < s; ++j) {
    const double t =
        double((std::uint64_t(k) * rule.z[std::size_t(j)]) % std::uint64_t(rule.n)) / double(rule.n);
    double u = t + shifts.delta(r, j);
    if (u >= 1.0) u -= 1.0;
    out[std::size_t(j)] = u;
  }
}

void mc_point(std::uint64_t rep_seed, std::int64_t k, std::span<double> out) {
  const int s = int(out.size());
  for (int j = 0; j < s; ++j)
    out[std::size_t(j)] = uniform01(rep_seed, std::uint64_t(k) * std::uint64_t(s) + std::uint64_t(j));
}

void to_parameter_box(std::span<double> u) {
  for (double& v : u) v -= 0.5;
}

namespace {

/* Shared chunked accumulation: points supplied per (rep, node), the chunk grid
   fixed by n alone, per-chunk Kahan partials merged in chunk order. */
CubatureResult chunked_mean(const Integrand& f, int out_dim, std::int64_t n, int reps,
                            const std::function<void(int, std::int64_t, std::span<double>)>& point,
                            int s, int threads) {
  if (out_dim < 1) throw std::invalid_argument("integrand output dimension must be >= 1");
  if (n < 1) throw std::invalid_argument("node count must be >= 1");
  constexpr std::int64_t kChunk = 1024;
  const std::int64_t nchunks = (n + kChunk - 1) / kChunk;

  CubatureResult res;
  res.per_rep.resize(reps, out_dim);
  std::vector<KahanSum> chunk_sums(std::size_t(nchunks) * std::size_t(out_dim));
  for (int r = 0; r < reps; ++r) {
    std::fill(chunk_sums.begin(), chunk_sums.end(), KahanSum{});
    parallel_chunks(
        n, kChunk,
        [&](std::int64_t b, std::int64_t e, std::int64_t ci) {
          std::vector<double> y(static_cast<std::size_t>(s));
          std::vector<double> out(static_cast<std::size_t>(out_dim));
          KahanSum* acc = &chunk_sums[std::size_t(ci) * std::size_t(out_dim)];
          for (std::int64_t k = b; k < e; ++k) {
            point(r, k, y);
            to_parameter_box(y);
            f(std::span<const double>(y.data(), y.size()), std::span<double>(out.data(), out.size()));
            for (int d = 0; d < out_dim; ++d) acc[d].add(out[std::size_t(d)]);
          }
        },
        threads);
    for (int d = 0; d < out_dim; ++d) {
      KahanSum total;
      for (std::int64_t c = 0; c < nchunks; ++c)
        total.merge(chunk_sums[std::size_t(c) * std::size_t(out_dim) + std::size_t(d)]);
      res.per_rep(r, d) = total.value() / double(n);
    }
  }

  res.mean.resize(out_dim);
  res.std_error = Eigen::VectorXd::Zero(out_dim);
  for (int d = 0; d < out_dim; ++d) {
    KahanSum m;
    for (int r = 0; r < reps; ++r) m.add(res.per_rep(r, d));
    res.mean[d] = m.value() / reps;
  }
  if (reps >= 2) {
    for (int d = 0; d < out_dim; ++d) {
      double ss = 0.0;
      for (int r = 0; r < reps; ++r) {
        const double dlt = res.per_rep(r, d) - res.mean[d];
        ss += dlt * dlt;
      }
      res.std_error[d] = std::sqrt(ss / (double(reps) * double(reps - 1)));
    }
  }
  return res;
}

}  // namespace

CubatureResult qmc_mean(const Integrand& f, int out_dim, const LatticeRule& rule,
                        const ShiftSet& shifts, int threads) {
  if (shifts.dimension() < rule.dimension())
    throw std::invalid_argument("shift dimension smaller than lattice dimension");
  return chunked_mean(
      f, out_dim, rule.n, shifts.count(),
      [&](int r, std::int64_t k, std::span<double> y) { shifted_lattice_point(rule, shifts, r, k, y); },
      rule.dimension(), threads);
}

CubatureResult mc_mean(const Integrand& f, int out_dim, int point_dim, std::int64_t n,
                       int replications, std::uint64_t seed, int threads) {
  if (replications < 1) throw std::invalid_argument("replication count must be >= 1");
  if (point_dim < 1) throw std::invalid_argument("point dimension must be >= 1");
  std::vector<std::uint64_t> rep_seeds;
  for (int r = 0; r < replications; ++r) rep_seeds.push_back(derive_seed(seed, std::uint64_t(r)));
  return chunked_mean(
      f, out_dim, n, replications,
      [&](int r, std::int64_t k, std::span<double> y) { mc_point(rep_seeds[std::size_t(r)], k, y); },
      point_dim, threads);
}

}  // namespace eit
