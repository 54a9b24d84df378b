#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <vector>

#include "eit/field.hpp"

namespace eit {

struct ElectrodeConfig {
  int count = 16;
  double width = 2.8;                  // arc length of each electrode
  Eigen::VectorXd contact_impedance;   // one positive value per electrode

  bool operator==(const ElectrodeConfig&) const = default;
};

/* count electrodes of the given arc width, common contact impedance z. */
ElectrodeConfig uniform_electrodes(int count, double width, double z);

/* Conforming triangulation of the disk. Boundary edges form one CCW cycle;
   electrode endpoints are mesh vertices, so each boundary edge lies entirely
   inside one electrode (tag = electrode id) or one gap (tag = -1). */
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;       // CCW
  std::vector<std::array<int, 2>> boundary_edges;  // ordered along the boundary
  std::vector<int> boundary_tag;                   // per boundary edge
  double radius = 0.0;
  double mesh_width = 0.0;  // max triangle diameter
  int num_electrodes = 0;
};

/* Structured polar mesh: rings with vertex counts proportional to radius,
   outermost ring aligned with the electrode layout. Guarantees
   mesh_width <= 1.5 * target_h. */
Mesh build_disk_mesh(double radius, double target_h, const ElectrodeConfig& electrodes);

/* Plain-text round trip. Column order is documented in the README:
   header "nv nt nb radius electrodes mesh_width", then nv lines "x y",
   nt lines "i j k", nb lines "i j tag" (0-based indices). */
void write_mesh(const Mesh& mesh, std::ostream& os);
Mesh read_mesh(std::istream& is);

/* Structural checks: positive triangle areas, closed boundary cycle, every
   boundary edge in exactly one triangle and interior edges in two, tags in
   range. Throws on violation; used after parsing and in tests. */
void validate_mesh(const Mesh& mesh);

/* Sum of boundary-edge chord lengths tagged with electrode m. */
double electrode_length(const Mesh& mesh, int m);

double triangle_area(const Mesh& mesh, int t);
Vec2 triangle_centroid(const Mesh& mesh, int t);

}  // namespace eit
