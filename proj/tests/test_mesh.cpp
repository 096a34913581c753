#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "csl/mesh.hpp"

using namespace csl;

namespace {

double total_volume(const Mesh& m) {
  double v = 0;
  for (int t = 0; t < m.num_tets(); ++t) v += m.tet_volume(t);
  return v;
}

double boundary_area(const Mesh& m) {
  double a = 0;
  for (const auto& bt : m.boundary) {
    Vec3 e1 = m.vertices[bt.v[1]] - m.vertices[bt.v[0]];
    Vec3 e2 = m.vertices[bt.v[2]] - m.vertices[bt.v[0]];
    a += 0.5 * e1.cross(e2).norm();
  }
  return a;
}

void check_invariants(const Mesh& m) {
  // positive volumes
  for (int t = 0; t < m.num_tets(); ++t) CHECK(m.tet_volume(t) > 0.0);
  // Euler/face count
  CHECK(4 * m.num_tets() == 2 * m.interior_faces + static_cast<int>(m.boundary.size()));
  // outward normals
  for (const auto& bt : m.boundary) {
    Vec3 fc = (m.vertices[bt.v[0]] + m.vertices[bt.v[1]] + m.vertices[bt.v[2]]) / 3.0;
    CHECK(bt.normal.dot(fc - m.tet_centroid(bt.owner_tet)) > 0.0);
  }
  // boundary flags equal the vertex set of boundary triangles
  std::vector<char> flag(m.num_vertices(), 0);
  for (const auto& bt : m.boundary)
    for (int v : bt.v) flag[v] = 1;
  for (int v = 0; v < m.num_vertices(); ++v) CHECK(flag[v] == m.on_boundary[v]);
}

}  // namespace

TEST_CASE("box: counts by construction") {
  Mesh m1 = make_box(1);
  CHECK(m1.num_vertices() == 8);
  CHECK(m1.num_tets() == 6);
  CHECK(m1.boundary.size() == 12);
  check_invariants(m1);

  Mesh m2 = make_box(2);
  CHECK(m2.num_vertices() == 27);
  CHECK(m2.num_tets() == 48);
  check_invariants(m2);
}

TEST_CASE("box: volume partitions the unit cube") {
  for (int d : {1, 2, 3, 5}) {
    Mesh m = make_box(d);
    CHECK(total_volume(m) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(boundary_area(make_box(3)) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("ball: boundary vertices on the unit sphere") {
  for (int level : {0, 1, 2}) {
    Mesh m = make_ball(level);
    check_invariants(m);
    for (int v : m.boundary_vertices)
      CHECK(m.vertices[v].norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("ball: volume and area converge at second order") {
  const double pi = std::acos(-1.0);
  double verr[3], aerr[3];
  double h[3];
  for (int level = 0; level <= 2; ++level) {
    Mesh m = make_ball(level);
    verr[level] = std::abs(total_volume(m) - 4 * pi / 3);
    aerr[level] = std::abs(boundary_area(m) - 4 * pi);
    h[level] = m.h_max;
  }
  // h halves per level; O(h^2) means error ratios around 4, demand >= 2.5
  CHECK(h[1] < h[0]);
  CHECK(h[2] < h[1]);
  CHECK(verr[0] / verr[1] > 2.5);
  CHECK(verr[1] / verr[2] > 2.5);
  CHECK(aerr[0] / aerr[1] > 2.5);
  CHECK(aerr[1] / aerr[2] > 2.5);
}

TEST_CASE("shell: two sphere boundaries, volume converges") {
  const double pi = std::acos(-1.0);
  const double rin = 0.5;
  double verr[2];
  for (int level = 1; level <= 2; ++level) {
    Mesh m = make_shell(level, rin);
    check_invariants(m);
    for (int v : m.boundary_vertices) {
      double r = m.vertices[v].norm();
      bool on_in = std::abs(r - rin) < 1e-12;
      bool on_out = std::abs(r - 1.0) < 1e-12;
      CHECK((on_in || on_out));
    }
    verr[level - 1] = std::abs(total_volume(m) - 4 * pi / 3 * (1 - rin * rin * rin));
  }
  CHECK(verr[0] / verr[1] > 2.5);
}

TEST_CASE("gmsh: single tet round trip") {
  std::string msh =
      "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"
      "$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n"
      "$Elements\n1\n1 4 2 1 1 1 2 3 4\n$EndElements\n";
  std::istringstream in(msh);
  Mesh m = load_gmsh(in);
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_tets() == 1);
  CHECK(m.boundary.size() == 4);
  check_invariants(m);
}

TEST_CASE("gmsh: write then reload reproduces connectivity") {
  Mesh m = make_box(2);
  std::ostringstream out;
  write_gmsh(m, out);
  std::istringstream in(out.str());
  GmshLoadReport rep;
  Mesh m2 = load_gmsh(in, &rep);
  CHECK(m2.num_vertices() == m.num_vertices());
  CHECK(m2.num_tets() == m.num_tets());
  CHECK(m2.boundary.size() == m.boundary.size());
  CHECK(rep.flipped_tets == 0);
  CHECK(rep.triangles_consistent);
  CHECK(rep.provided_triangles == static_cast<int>(m.boundary.size()));
  for (int t = 0; t < m.num_tets(); ++t) CHECK(m2.tets[t] == m.tets[t]);
  for (int v = 0; v < m.num_vertices(); ++v)
    CHECK((m2.vertices[v] - m.vertices[v]).norm() == 0.0);
}

TEST_CASE("gmsh: inverted tet is repaired and reported") {
  std::string msh =
      "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"
      "$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n"
      "$Elements\n1\n1 4 2 1 1 1 3 2 4\n$EndElements\n";  // negative orientation
  std::istringstream in(msh);
  GmshLoadReport rep;
  Mesh m = load_gmsh(in, &rep);
  CHECK(rep.flipped_tets == 1);
  CHECK(m.tet_volume(0) > 0.0);
}

TEST_CASE("gmsh: unsupported input is rejected") {
  {
    std::istringstream in("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");
    CHECK_THROWS_AS(load_gmsh(in), MeshError);
  }
  {
    std::istringstream in("not a mesh");
    CHECK_THROWS_AS(load_gmsh(in), MeshError);
  }
  {
    // type 5 = hexahedron: unsupported
    std::istringstream in(
        "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n1\n1 0 0 0\n$EndNodes\n"
        "$Elements\n1\n1 5 0 1 1 1 1 1 1 1 1\n$EndElements\n");
    CHECK_THROWS_AS(load_gmsh(in), MeshError);
  }
  {
    // stray triangle not on the tet boundary
    std::string msh =
        "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"
        "$Nodes\n5\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n5 1 1 1\n$EndNodes\n"
        "$Elements\n2\n1 4 0 1 2 3 4\n2 2 0 1 2 5\n$EndElements\n";
    std::istringstream in(msh);
    CHECK_THROWS_AS(load_gmsh(in), MeshError);
  }
}

TEST_CASE("refinement decreases h monotonically") {
  CHECK(make_ball(1).h_max < make_ball(0).h_max);
  CHECK(make_box(4).h_max < make_box(2).h_max);
}

TEST_CASE("vtk writer emits well-formed header and data") {
  Mesh m = make_box(1);
  std::vector<double> u(m.num_vertices());
  std::iota(u.begin(), u.end(), 0.0);
  std::ostringstream out;
  write_vtk(m, out, {{"u", u}});
  std::string s = out.str();
  CHECK(s.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(s.find("POINTS 8 double") != std::string::npos);
  CHECK(s.find("CELL_TYPES 6") != std::string::npos);
  CHECK(s.find("SCALARS u double 1") != std::string::npos);
}
