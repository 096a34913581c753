#ifndef CSL_MESH_HPP
#define CSL_MESH_HPP

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "csl/fieldexpr.hpp"

namespace csl {

// Tetrahedral complex with oriented boundary triangles.  Immutable after
// construction; safe for concurrent read.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 4>> tets;  // positively oriented

  struct BoundaryTri {
    std::array<int, 3> v;
    int owner_tet;
    Vec3 normal;  // unit, points out of the owner tet
  };
  std::vector<BoundaryTri> boundary;

  std::vector<char> on_boundary;        // per-vertex flag
  std::vector<int> boundary_vertices;   // sorted
  std::vector<int> interior_vertices;   // sorted
  std::vector<int> boundary_index_of;   // vertex -> index into boundary_vertices, or -1
  std::vector<int> interior_index_of;   // vertex -> index into interior_vertices, or -1

  // Vertex adjacency through edges (CSR).
  std::vector<int> adj_offsets;
  std::vector<int> adj;

  double h_max = 0.0;        // max edge length
  int interior_faces = 0;    // faces shared by two tets

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_tets() const { return static_cast<int>(tets.size()); }

  double tet_volume(int t) const;
  Vec3 tet_centroid(int t) const;
};

// Builds derived data (boundary, adjacency, orientation) from vertices+tets.
// Flips negatively oriented tets; returns how many were flipped.
int finalize_mesh(Mesh& m);

// Unit cube [0,1]^3, `divisions` cells per axis, 6 tets per cell.
Mesh make_box(int divisions);

// Unit ball by radial max-norm projection of a box mesh; divisions = 2^(level+1).
Mesh make_ball(int level);
int ball_divisions(int level);

// Spherical shell r in [r_inner, 1]: the ball's surface triangulation extruded
// radially inward in layers of comparable thickness.
Mesh make_shell(int level, double r_inner);

struct GmshLoadReport {
  int flipped_tets = 0;
  int provided_triangles = 0;
  bool triangles_consistent = true;
};

// Gmsh MSH 2.2 ASCII, element types 4 (tet) and optionally 2 (triangle).
// The boundary is rebuilt from tet faces; provided triangles are validated
// against the rebuilt set.
Mesh load_gmsh(std::istream& in, GmshLoadReport* report = nullptr);
Mesh load_gmsh_file(const std::string& path, GmshLoadReport* report = nullptr);
void write_gmsh(const Mesh& m, std::ostream& out);
void write_gmsh_file(const Mesh& m, const std::string& path);

// VTK legacy ASCII unstructured grid with optional point/cell scalar fields.
void write_vtk(const Mesh& m, std::ostream& out,
               const std::map<std::string, std::vector<double>>& point_scalars = {},
               const std::map<std::string, std::vector<double>>& cell_scalars = {});
void write_vtk_file(const Mesh& m, const std::string& path,
                    const std::map<std::string, std::vector<double>>& point_scalars = {},
                    const std::map<std::string, std::vector<double>>& cell_scalars = {});

}  // namespace csl

#endif
