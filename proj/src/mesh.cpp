#include "eit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "eit/errors.hpp"

namespace eit {

namespace {

constexpr double kAngularFactor = 0.7;  // keeps zipper diagonals under 1.5 * target_h

double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct RingVertex {
  int index;
  double angle;  // strictly increasing along the ring, arbitrary offset
};

/* Triangulates the annulus between two concentric CCW rings by an angular
   two-pointer sweep. Ties advance the inner ring, which keeps the pointer
   gap at or below the coarser ring's spacing. */
void zip_rings(const std::vector<RingVertex>& inner, const std::vector<RingVertex>& outer,
               std::vector<std::array<int, 3>>& tris) {
  const int p = int(inner.size());
  const int q = int(outer.size());
  // rebase the outer ring so it starts at its vertex nearest inner[0]
  int jb = 0;
  double best = 1e300;
  for (int j = 0; j < q; ++j) {
    double d = std::remainder(outer[std::size_t(j)].angle - inner[0].angle, 2.0 * M_PI);
    if (std::abs(d) < best) {
      best = std::abs(d);
      jb = j;
    }
  }
  // unwrapped angle sequences starting from the aligned pair
  const double b_shift = std::remainder(outer[std::size_t(jb)].angle - inner[0].angle, 2.0 * M_PI);
  std::vector<double> bu(std::size_t(q) + 1);
  bu[0] = inner[0].angle + b_shift;
  for (int j = 1; j < q; ++j) {
    double step = outer[std::size_t((jb + j) % q)].angle - outer[std::size_t((jb + j - 1) % q)].angle;
    if (step <= 0) step += 2.0 * M_PI;
    bu[std::size_t(j)] = bu[std::size_t(j - 1)] + step;
  }
  bu[std::size_t(q)] = bu[0] + 2.0 * M_PI;
  std::vector<double> au(std::size_t(p) + 1);
  for (int i = 0; i <= p; ++i)
    au[std::size_t(i)] = inner[std::size_t(i % p)].angle + 2.0 * M_PI * (i / p);

  int ia = 0, ib = 0;
  while (ia < p || ib < q) {
    const double next_a = ia < p ? au[std::size_t(ia + 1)] : 1e300;
    const double next_b = ib < q ? bu[std::size_t(ib + 1)] : 1e300;
    const int vi = inner[std::size_t(ia % p)].index;
    const int vo = outer[std::size_t((jb + ib) % q)].index;
    if (next_a <= next_b) {
      tris.push_back({vi, vo, inner[std::size_t((ia + 1) % p)].index});
      ++ia;
    } else {
      tris.push_back({vi, vo, outer[std::size_t((jb + ib + 1) % q)].index});
      ++ib;
    }
  }
}

}  // namespace

ElectrodeConfig uniform_electrodes(int count, double width, double z) {
  ElectrodeConfig e;
  e.count = count;
  e.width = width;
  e.contact_impedance = Eigen::VectorXd::Constant(count, z);
  return e;
}

Mesh build_disk_mesh(double radius, double target_h, const ElectrodeConfig& electrodes) {
  if (!(radius > 0)) throw std::invalid_argument("mesh radius must be > 0");
  if (!(target_h > 0)) throw std::invalid_argument("mesh width target must be > 0");
  const int M = electrodes.count;
  if (M < 2) throw std::invalid_argument("need at least two electrodes");
  if (!(electrodes.width > 0)) throw std::invalid_argument("electrode width must be > 0");
  if (electrodes.contact_impedance.size() != M)
    throw std::invalid_argument("contact impedance count does not match electrode count");
  for (int m = 0; m < M; ++m)
    if (!(electrodes.contact_impedance[m] > 0))
      throw std::invalid_argument("contact impedances must be positive (well-posedness needs a "
                                  "positive lower bound)");
  if (!(M * electrodes.width < 2 * M_PI * radius))
    throw std::invalid_argument("electrodes do not fit on the boundary circle: count * width must "
                                "stay below the circumference");

  const double dtheta_max = kAngularFactor * target_h / radius;
  const double half = electrodes.width / (2.0 * radius);  // electrode half-angle

  // Boundary: alternating electrode arcs and gaps, starting at electrode 0's
  // left endpoint; each arc subdivided uniformly. Endpoints land exactly.
  std::vector<double> bangles;
  std::vector<int> btags;  // tag for segment [angle_i, angle_{i+1})
  for (int m = 0; m < M; ++m) {
    const double center = 2.0 * M_PI * m / M;
    const double gap_end = 2.0 * M_PI * (m + 1) / M - half;
    const std::array<std::pair<double, double>, 2> arcs = {
        std::pair{center - half, center + half}, std::pair{center + half, gap_end}};
    for (int part = 0; part < 2; ++part) {
      const auto [a0, a1] = arcs[std::size_t(part)];
      const int segs = std::max<int>(1, int(std::ceil((a1 - a0) / dtheta_max - 1e-12)));
      for (int t = 0; t < segs; ++t) {
        bangles.push_back(a0 + (a1 - a0) * t / segs);
        btags.push_back(part == 0 ? m : -1);
      }
    }
  }
  const int nb = int(bangles.size());

  Mesh mesh;
  mesh.radius = radius;
  mesh.num_electrodes = M;

  const int K = std::max(1, int(std::ceil(radius / target_h - 1e-12)));
  const bool pie = K <= 3;  // tiny meshes: same angular grid on every ring

  mesh.vertices.push_back({0.0, 0.0});
  std::vector<std::vector<RingVertex>> rings;  // inner rings 1..K-1, then boundary
  for (int i = 1; i < K; ++i) {
    const double r = radius * i / K;
    std::vector<RingVertex> ring;
    if (pie) {
      for (int j = 0; j < nb; ++j) {
        ring.push_back({int(mesh.vertices.size()), bangles[std::size_t(j)]});
        mesh.vertices.push_back({r * std::cos(bangles[std::size_t(j)]), r * std::sin(bangles[std::size_t(j)])});
      }
    } else {
      const int c = std::max(3, int(std::ceil(2.0 * M_PI * (radius / K) / (kAngularFactor * target_h) - 1e-12)));
      const int ni = c * i;
      for (int j = 0; j < ni; ++j) {
        const double ang = 2.0 * M_PI * j / ni;
        ring.push_back({int(mesh.vertices.size()), ang});
        mesh.vertices.push_back({r * std::cos(ang), r * std::sin(ang)});
      }
    }
    rings.push_back(std::move(ring));
  }
  {
    std::vector<RingVertex> bring;
    for (int j = 0; j < nb; ++j) {
      bring.push_back({int(mesh.vertices.size()), bangles[std::size_t(j)]});
      mesh.vertices.push_back(
          {radius * std::cos(bangles[std::size_t(j)]), radius * std::sin(bangles[std::size_t(j)])});
    }
    rings.push_back(std::move(bring));
  }

  // center fan
  {
    const auto& r1 = rings.front();
    const int n1 = int(r1.size());
    for (int j = 0; j < n1; ++j)
      mesh.triangles.push_back({0, r1[std::size_t(j)].index, r1[std::size_t((j + 1) % n1)].index});
  }
  for (std::size_t i = 0; i + 1 < rings.size(); ++i) zip_rings(rings[i], rings[i + 1], mesh.triangles);

  // boundary edges in angular order
  const auto& bring = rings.back();
  for (int j = 0; j < nb; ++j) {
    mesh.boundary_edges.push_back({bring[std::size_t(j)].index, bring[std::size_t((j + 1) % nb)].index});
    mesh.boundary_tag.push_back(btags[std::size_t(j)]);
  }

  double width = 0.0;
  for (int t = 0; t < int(mesh.triangles.size()); ++t) {
    const auto& tri = mesh.triangles[std::size_t(t)];
    const Vec2 a = mesh.vertices[std::size_t(tri[0])];
    const Vec2 b = mesh.vertices[std::size_t(tri[1])];
    const Vec2 c = mesh.vertices[std::size_t(tri[2])];
    if (triangle_area(mesh, t) <= 0)
      throw NumericalError("mesh construction produced a degenerate triangle");
    width = std::max({width, dist(a, b), dist(b, c), dist(c, a)});
  }
  mesh.mesh_width = width;
  if (width > 1.5 * target_h)
    throw NumericalError("mesh width " + std::to_string(width) + " exceeds 1.5 * target " +
                         std::to_string(target_h));
  return mesh;
}

double triangle_area(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[std::size_t(t)];
  const Vec2 a = mesh.vertices[std::size_t(tri[0])];
  const Vec2 b = mesh.vertices[std::size_t(tri[1])];
  const Vec2 c = mesh.vertices[std::size_t(tri[2])];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

Vec2 triangle_centroid(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[std::size_t(t)];
  const Vec2 a = mesh.vertices[std::size_t(tri[0])];
  const Vec2 b = mesh.vertices[std::size_t(tri[1])];
  const Vec2 c = mesh.vertices[std::size_t(tri[2])];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

double electrode_length(const Mesh& mesh, int m) {
  double len = 0.0;
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e)
    if (mesh.boundary_tag[e] == m)
      len += dist(mesh.vertices[std::size_t(mesh.boundary_edges[e][0])],
                  mesh.vertices[std::size_t(mesh.boundary_edges[e][1])]);
  return len;
}

void validate_mesh(const Mesh& mesh) {
  const int nv = int(mesh.vertices.size());
  if (nv < 3 || mesh.triangles.empty()) throw NumericalError("mesh too small");
  if (mesh.boundary_edges.size() != mesh.boundary_tag.size())
    throw NumericalError("boundary tag count mismatch");
  std::map<std::pair<int, int>, int> edge_count;
  for (int t = 0; t < int(mesh.triangles.size()); ++t) {
    const auto& tri = mesh.triangles[std::size_t(t)];
    for (int v : tri)
      if (v < 0 || v >= nv) throw NumericalError("triangle vertex index out of range");
    if (triangle_area(mesh, t) <= 0) throw NumericalError("non-positive triangle area");
    for (int e = 0; e < 3; ++e) {
      int u = tri[std::size_t(e)], v = tri[std::size_t((e + 1) % 3)];
      if (u > v) std::swap(u, v);
      edge_count[{u, v}]++;
    }
  }
  // boundary: single closed CCW cycle, each edge used by exactly one triangle
  const int nb = int(mesh.boundary_edges.size());
  for (int e = 0; e < nb; ++e) {
    const auto& be = mesh.boundary_edges[std::size_t(e)];
    if (be[1] != mesh.boundary_edges[std::size_t((e + 1) % nb)][0])
      throw NumericalError("boundary edges do not form a closed cycle");
    int u = be[0], v = be[1];
    if (u > v) std::swap(u, v);
    const auto it = edge_count.find({u, v});
    if (it == edge_count.end() || it->second != 1)
      throw NumericalError("boundary edge not covered by exactly one triangle");
    if (mesh.boundary_tag[std::size_t(e)] < -1 || mesh.boundary_tag[std::size_t(e)] >= mesh.num_electrodes)
      throw NumericalError("boundary tag out of range");
  }
  for (const auto& [key, cnt] : edge_count)
    if (cnt > 2) throw NumericalError("edge shared by more than two triangles");
  for (int m = 0; m < mesh.num_electrodes; ++m)
    if (electrode_length(mesh, m) <= 0) throw NumericalError("electrode without boundary edges");
}

void write_mesh(const Mesh& mesh, std::ostream& os) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu %zu %zu %.17g %d %.17g\n", mesh.vertices.size(),
                mesh.triangles.size(), mesh.boundary_edges.size(), mesh.radius,
                mesh.num_electrodes, mesh.mesh_width);
  os << buf;
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", v.x, v.y);
    os << buf;
  }
  for (const auto& t : mesh.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (std::size_t e = 0; e < mesh.boundary_edges.size(); ++e)
    os << mesh.boundary_edges[e][0] << ' ' << mesh.boundary_edges[e][1] << ' '
       << mesh.boundary_tag[e] << '\n';
}

Mesh read_mesh(std::istream& is) {
  Mesh mesh;
  std::size_t nv = 0, nt = 0, nb = 0;
  if (!(is >> nv >> nt >> nb >> mesh.radius >> mesh.num_electrodes >> mesh.mesh_width))
    throw ConfigError("mesh file: malformed header");
  mesh.vertices.resize(nv);
  for (auto& v : mesh.vertices)
    if (!(is >> v.x >> v.y)) throw ConfigError("mesh file: truncated vertex list");
  mesh.triangles.resize(nt);
  for (auto& t : mesh.triangles)
    if (!(is >> t[0] >> t[1] >> t[2])) throw ConfigError("mesh file: truncated triangle list");
  mesh.boundary_edges.resize(nb);
  mesh.boundary_tag.resize(nb);
  for (std::size_t e = 0; e < nb; ++e)
    if (!(is >> mesh.boundary_edges[e][0] >> mesh.boundary_edges[e][1] >> mesh.boundary_tag[e]))
      throw ConfigError("mesh file: truncated boundary list");
  try {
    validate_mesh(mesh);
  } catch (const NumericalError& err) {
    throw ConfigError(std::string("mesh file failed validation: ") + err.what());
  }
  return mesh;
}

}  // namespace eit
