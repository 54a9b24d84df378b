#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "eit/mesh.hpp"

using namespace eit;

namespace {
constexpr double kRadius = 14.0;
const ElectrodeConfig kElectrodes = uniform_electrodes(16, 2.8, 0.005);
}  // namespace

TEST_CASE("disk mesh satisfies the structural contract") {
  const double h = 1.496;
  const Mesh mesh = build_disk_mesh(kRadius, h, kElectrodes);
  validate_mesh(mesh);
  CHECK(mesh.radius == kRadius);
  CHECK(mesh.num_electrodes == 16);
  CHECK(mesh.mesh_width <= 1.5 * h);
  CHECK(mesh.vertices.size() > 100);

  SUBCASE("triangles are counterclockwise with positive area") {
    for (int t = 0; t < int(mesh.triangles.size()); ++t) CHECK(triangle_area(mesh, t) > 0.0);
  }

  SUBCASE("boundary vertices sit on the circle") {
    for (const auto& e : mesh.boundary_edges)
      for (int v : e) {
        const Vec2 p = mesh.vertices[std::size_t(v)];
        CHECK(std::hypot(p.x, p.y) == doctest::Approx(kRadius).epsilon(1e-12));
      }
  }

  SUBCASE("every electrode is present and has the right arc length") {
    std::set<int> seen;
    for (int tag : mesh.boundary_tag)
      if (tag >= 0) seen.insert(tag);
    REQUIRE(seen.size() == 16);
    for (int m = 0; m < 16; ++m) {
      // chord-sum of the polyline approximating a 2.8 arc on radius 14
      CHECK(electrode_length(mesh, m) == doctest::Approx(2.8).epsilon(1e-3));
    }
  }

  SUBCASE("gaps separate the electrodes") {
    int gaps = 0;
    for (int tag : mesh.boundary_tag)
      if (tag < 0) ++gaps;
    CHECK(gaps >= 16);  // at least one untagged edge between consecutive electrodes
  }
}

TEST_CASE("refinement shrinks the mesh width and grows the vertex count") {
  const Mesh coarse = build_disk_mesh(kRadius, 1.496, kElectrodes);
  const Mesh fine = build_disk_mesh(kRadius, 0.748, kElectrodes);
  validate_mesh(fine);
  CHECK(fine.mesh_width < coarse.mesh_width);
  CHECK(fine.mesh_width <= 1.5 * 0.748);
  CHECK(fine.vertices.size() > 2 * coarse.vertices.size());
}

TEST_CASE("very coarse targets fall back to a valid pie mesh") {
  const Mesh pie = build_disk_mesh(kRadius, 14.0, kElectrodes);
  validate_mesh(pie);
  std::set<int> seen;
  for (int tag : pie.boundary_tag)
    if (tag >= 0) seen.insert(tag);
  CHECK(seen.size() == 16);
}

TEST_CASE("mesh text round trip is exact") {
  const Mesh mesh = build_disk_mesh(kRadius, 2.0, kElectrodes);
  std::stringstream ss;
  write_mesh(mesh, ss);
  const Mesh back = read_mesh(ss);
  validate_mesh(back);
  REQUIRE(back.vertices.size() == mesh.vertices.size());
  REQUIRE(back.triangles.size() == mesh.triangles.size());
  REQUIRE(back.boundary_edges.size() == mesh.boundary_edges.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    CHECK(back.vertices[i].x == mesh.vertices[i].x);
    CHECK(back.vertices[i].y == mesh.vertices[i].y);
  }
  CHECK(back.triangles == mesh.triangles);
  CHECK(back.boundary_tag == mesh.boundary_tag);
  CHECK(back.radius == mesh.radius);
  CHECK(back.mesh_width == mesh.mesh_width);
  CHECK(back.num_electrodes == mesh.num_electrodes);
}

TEST_CASE("invalid geometry is rejected") {
  CHECK_THROWS_AS(build_disk_mesh(-1.0, 1.0, kElectrodes), std::invalid_argument);
  CHECK_THROWS_AS(build_disk_mesh(kRadius, 0.0, kElectrodes), std::invalid_argument);
  // electrodes wider than the circumference cannot fit
  CHECK_THROWS_AS(build_disk_mesh(kRadius, 1.0, uniform_electrodes(16, 6.0, 0.005)),
                  std::invalid_argument);
  // non-positive contact impedance breaks well-posedness
  CHECK_THROWS_AS(build_disk_mesh(kRadius, 1.0, uniform_electrodes(16, 2.8, 0.0)),
                  std::invalid_argument);
}
