#ifndef CSL_CONFIG_HPP
#define CSL_CONFIG_HPP

#include <json.hpp>
#include <iosfwd>
#include <optional>
#include <string>

#include "csl/eigenlin.hpp"
#include "csl/geometry.hpp"
#include "csl/mesh.hpp"

namespace csl {

// Schema-validated run configuration; unknown keys are rejected.
//
//   {
//     "geometry": {"n": 3, "base": "euclidean" | {"g": [6 exprs], "R": expr,
//                  "h": expr}, "boundary": {"kind": "ball", "radius": 1.0},
//                  "conformal": [{"expr": "..."} | {"bump": {"center": [x,y,z],
//                  "radius": r, "amplitude": a}}]},
//     "mesh": {"kind": "ball"|"box"|"shell"|"gmsh", "level": L,
//              "divisions": d, "r_inner": r, "path": "file.msh"},
//     "problem": {"bc": "dirichlet"|"neumann"|"robin", "s": 0.0,
//                 "n_eigs": 6, "tau": 1e-7},
//     "output": {"csv": path, "json": path, "vtk": path},
//     "seed": 0
//   }
struct RunConfig {
  nlohmann::json raw;  // resolved config (for report provenance)
  Geometry geometry = Geometry::euclidean_ball();
  Mesh mesh;
  BC bc = BC::Robin;
  double s = 0.0;
  int n_eigs = 6;
  double tau = 1e-7;
  unsigned seed = 0;
  std::optional<std::string> out_csv, out_json, out_vtk;

  static RunConfig load(const std::string& path);
  static RunConfig from_json(const nlohmann::json& j);
};

Geometry geometry_from_json(const nlohmann::json& j);
Mesh mesh_from_json(const nlohmann::json& j, BoundaryShape* shape_hint = nullptr);

void write_matrix_market(const SparseMat& A, std::ostream& out);

// CSV writers; doubles are printed with %.17g so identical runs emit
// identical bytes.
void write_spectrum_csv(const SpectralResult& r, std::ostream& out);
void write_steklov_csv(const SpectralResult& r, std::ostream& out);

// Process-wide default for assembly worker threads (CLI --threads).
void set_default_assembly_threads(int threads);
int default_assembly_threads();

}  // namespace csl

#endif
