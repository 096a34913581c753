#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "csl/eigenlin.hpp"
#include "csl/lab.hpp"
#include "csl/nodal.hpp"
#include "oracles.hpp"

using namespace csl;

TEST_CASE("decompose: constant field is one domain with empty interface") {
  Mesh mesh = make_box(3);
  Vector u = Vector::Ones(mesh.num_vertices());
  NodalDecomposition d = decompose(mesh, u);
  CHECK(d.domain_count() == 1);
  CHECK(d.interface.empty());
  CHECK(d.domains[0].sign == 1);
  CHECK_THROWS_AS(decompose(mesh, Vector(Vector::Zero(mesh.num_vertices()))), Error);
}

TEST_CASE("decompose: planar level set through cell interiors") {
  // odd divisions: the plane x = 1/2 crosses element interiors
  Mesh mesh = make_box(5);
  Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) u[v] = mesh.vertices[v][0] - 0.5;
  NodalDecomposition d = decompose(mesh, u);
  CHECK(d.domain_count() == 2);
  double area = 0;
  for (const auto& piece : d.interface)
    area += 0.5 * (piece.corners[1] - piece.corners[0])
                      .cross(piece.corners[2] - piece.corners[0])
                      .norm();
  CHECK(area == doctest::Approx(1.0).epsilon(1e-12));  // exact for a linear field
  CHECK(boundary_nodal_limit_check(mesh, d));
}

TEST_CASE("decompose: mesh-aligned zero plane (exact zero vertices)") {
  Mesh mesh = make_box(4);
  Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) u[v] = mesh.vertices[v][0] - 0.5;
  NodalDecomposition d = decompose(mesh, u);
  CHECK(d.domain_count() == 2);
  // zero vertices belong to no domain
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (std::abs(mesh.vertices[v][0] - 0.5) < 1e-12) CHECK(d.domain_of[v] == -1);
  // boundary zeros sit on the (vertex-resolved) zero set
  CHECK(boundary_nodal_limit_check(mesh, d));
}

TEST_CASE("decompose: second Dirichlet eigenfunction of the cube has two domains") {
  Mesh mesh = make_box(5);
  OperatorPair P = assemble(mesh, Geometry::euclidean_box(), BC::Dirichlet);
  SpectralResult r = eigs(P, 2);
  Vector u = Vector::Zero(mesh.num_vertices());
  for (int i = 0; i < P.size(); ++i) u[P.dof_to_vertex[i]] = r.eigenvectors(i, 1);
  NodalDecomposition d = decompose(mesh, u);
  CHECK(d.domain_count() == 2);
  CHECK(d.domains[0].sign * d.domains[1].sign == -1);
}

TEST_CASE("property: decompose is independent of vertex ordering") {
  Mesh mesh = make_ball(1);
  std::mt19937_64 rng(4);
  Vector u(mesh.num_vertices());
  ScalarField f = Expr::parse("x + 0.7*y - 0.5*z + 0.3*sin(5*x)");
  for (int v = 0; v < mesh.num_vertices(); ++v) u[v] = f.value(mesh.vertices[v]);
  NodalDecomposition d0 = decompose(mesh, u);

  // permute vertices
  std::vector<int> perm(mesh.num_vertices());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);  // perm[old] = new
  Mesh pm;
  pm.vertices.resize(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) pm.vertices[perm[v]] = mesh.vertices[v];
  for (const auto& t : mesh.tets)
    pm.tets.push_back({perm[t[0]], perm[t[1]], perm[t[2]], perm[t[3]]});
  finalize_mesh(pm);
  Vector pu(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) pu[perm[v]] = u[v];
  NodalDecomposition d1 = decompose(pm, pu);

  CHECK(d0.domain_count() == d1.domain_count());
  // compare partitions as sets of original vertex ids
  auto canon = [](const NodalDecomposition& d, const std::vector<int>& map) {
    std::set<std::set<int>> parts;
    for (const auto& dom : d.domains) {
      std::set<int> s;
      for (int v : dom.vertices) s.insert(map[v]);
      parts.insert(s);
    }
    return parts;
  };
  std::vector<int> identity(mesh.num_vertices());
  std::iota(identity.begin(), identity.end(), 0);
  std::vector<int> inv(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) inv[perm[v]] = v;
  CHECK(canon(d0, identity) == canon(d1, inv));
}

TEST_CASE("clipped integration: half-cube volumes and |u| mass") {
  Mesh mesh = make_box(5);
  Geometry G = Geometry::euclidean_box();
  Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) u[v] = mesh.vertices[v][0] - 0.5;
  NodalDecomposition d = decompose(mesh, u);
  for (int dom = 0; dom < 2; ++dom) {
    double vol = integrate_domain(mesh, G, d, dom, [](const Vec3&, double) { return 1.0; });
    CHECK(vol == doctest::Approx(0.5).epsilon(1e-12));
    double umass = integrate_domain(mesh, G, d, dom,
                                    [](const Vec3&, double uval) { return std::abs(uval); });
    CHECK(umass == doctest::Approx(0.125).epsilon(1e-12));  // int |x-1/2| over half
    double barea = integrate_domain_boundary(
        mesh, G, d, dom, [](const Vec3&, double, const Vec3&) { return 1.0; });
    CHECK(barea == doctest::Approx(3.0).epsilon(1e-12));  // half the cube surface
  }
}

TEST_CASE("prescription residual: flat cube constants are exactly zero") {
  Mesh mesh = make_box(4);
  Geometry G = Geometry::euclidean_box();
  OperatorPair P = assemble(mesh, G, BC::Robin, 0.0);
  Vector ones = Vector::Ones(mesh.num_vertices());
  CHECK(std::abs(prescription_residual(mesh, G, ones, P)) <= 1e-12);
  // non-kernel vectors are rejected
  Vector bad(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) bad[v] = mesh.vertices[v][0];
  CHECK_THROWS_AS(prescription_residual(mesh, G, bad, P), Error);
}

TEST_CASE("nodal identity: all terms vanish for constants on the flat cube") {
  Mesh mesh = make_box(3);
  Geometry G = Geometry::euclidean_box();
  Vector u = Vector::Ones(mesh.num_vertices());
  NodalDecomposition d = decompose(mesh, u);
  double r = nodal_identity_residual(mesh, G, d, 0, ScalarField(Expr::parse("1")));
  CHECK(r == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("obstruction: sign flip of u leaves the integrals unchanged") {
  Mesh mesh = make_box(5);
  Geometry G = Geometry::euclidean_box();
  Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) u[v] = mesh.vertices[v][0] - 0.5;
  NodalDecomposition d = decompose(mesh, u);
  NodalDecomposition dneg = decompose(mesh, Vector(-u));
  ScalarField omega = Expr::parse("0.2*x - 0.1*y*z");
  for (int dom = 0; dom < 2; ++dom) {
    ObstructionResult a = obstruction_check(mesh, G, omega, d, dom);
    ObstructionResult b = obstruction_check(mesh, G, omega, dneg, dom);
    CHECK(a.lhs == doctest::Approx(b.lhs).epsilon(1e-12));
    CHECK(a.lhs_alt == doctest::Approx(b.lhs_alt).epsilon(1e-12));
  }
}

TEST_CASE("flux invariant: omega = 0 on the flat cube constants gives 0 = 0") {
  Mesh mesh = make_box(3);
  Geometry G = Geometry::euclidean_box();
  Vector u = Vector::Ones(mesh.num_vertices());
  NodalDecomposition d = decompose(mesh, u);
  FluxInvariant f = boundary_flux_invariant(mesh, G, ScalarField(), d, 0);
  CHECK(std::abs(f.lhs) <= 1e-14);
  CHECK(std::abs(f.rhs) <= 1e-14);
}

TEST_CASE("lp density: unit field on the flat cube, and domain splitting") {
  Mesh mesh = make_box(5);
  Geometry G = Geometry::euclidean_box();
  Vector u = Vector::Ones(mesh.num_vertices());
  NodalDecomposition d = decompose(mesh, u);
  CHECK(lp_density(mesh, G, d) == doctest::Approx(1.0).epsilon(1e-12));

  Vector w(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) w[v] = mesh.vertices[v][0] - 0.5;
  NodalDecomposition dw = decompose(mesh, w);
  double total = lp_density(mesh, G, dw);
  double split = lp_density(mesh, G, dw, 0) + lp_density(mesh, G, dw, 1);
  // |u|^6 exceeds the rule degree, so whole-tet and clipped quadratures
  // differ at their own error level
  CHECK(split == doctest::Approx(total).epsilon(1e-6));
}

TEST_CASE("lp density: conformal transport invariance on the tuned instance") {
  TunedInstance inst = make_tuned_instance(1, 2, BC::Robin);
  NodalDecomposition d = decompose(inst.mesh, inst.u);
  CHECK(d.domain_count() == 2);

  ScalarField omega = Expr::parse("0.3*x + 0.15*y - 0.1*z*z");
  Geometry Ghat = inst.G.pushed(omega);
  Vector uhat(inst.u.size());
  for (int v = 0; v < inst.u.size(); ++v)
    uhat[v] = std::exp(-0.5 * omega.value(inst.mesh.vertices[v])) * inst.u[v];
  NodalDecomposition dhat = decompose(inst.mesh, uhat);

  // sign pattern exactly invariant
  CHECK(dhat.vertex_sign == d.vertex_sign);
  CHECK(dhat.domain_of == d.domain_of);

  double lp0 = lp_density(inst.mesh, inst.G, d);
  double lp1 = lp_density(inst.mesh, Ghat, dhat);
  CHECK(lp1 == doctest::Approx(lp0).epsilon(0.02));  // exponents cancel, O(h^2) numerics
}

TEST_CASE("boundary nodal limit check on a tuned two-domain kernel") {
  TunedInstance inst = make_tuned_instance(1, 2, BC::Robin);
  NodalDecomposition d = decompose(inst.mesh, inst.u);
  CHECK(boundary_nodal_limit_check(inst.mesh, d));

  // no boundary zeros: vacuously true
  Mesh cube = make_box(3);
  Vector ones = Vector::Ones(cube.num_vertices());
  CHECK(boundary_nodal_limit_check(cube, decompose(cube, ones)));
}

TEST_CASE("prescription residual transports under a constant conformal push") {
  // With omega = c the transported kernel e^{-omega/2} u scales the residual
  // by e^{c/2} exactly, so it stays at discretization size.
  TunedInstance inst = make_tuned_instance(1, 1, BC::Robin);
  OperatorPair P = assemble(inst.mesh, inst.G, BC::Robin, 0.0);
  double base = prescription_residual(inst.mesh, inst.G, inst.u, P);

  const double c = 0.4;
  Geometry Ghat = inst.G.pushed(ScalarField::constant(c));
  OperatorPair Phat = assemble(inst.mesh, Ghat, BC::Robin, 0.0);
  Vector uhat = std::exp(-0.5 * c) * inst.u;
  double pushed = prescription_residual(inst.mesh, Ghat, uhat, Phat);
  CHECK(pushed == doctest::Approx(std::exp(0.5 * c) * base).epsilon(1e-8));
}

TEST_CASE("obstruction at omega = 0 reduces to the per-domain prescription balance") {
  TunedInstance inst = make_tuned_instance(1, 2, BC::Robin);
  NodalDecomposition d = decompose(inst.mesh, inst.u);
  const double cn = conformal_coupling(3).value();
  for (int dom = 0; dom < d.domain_count(); ++dom) {
    ObstructionResult r = obstruction_check(inst.mesh, inst.G, ScalarField(), d, dom);
    CHECK(r.lhs == doctest::Approx(r.lhs_alt).epsilon(1e-12));  // same weight at omega=0
    // equals c_n int_D R|u| + 2 c_n int_{bnd patch} h|u|, and is negative
    // (it equals minus the interface flux of |grad u|)
    double direct =
        integrate_domain(inst.mesh, inst.G, d, dom,
                         [&](const Vec3& p, double uval) {
                           return cn * inst.G.scalar_curvature(p) * std::abs(uval);
                         }) +
        integrate_domain_boundary(inst.mesh, inst.G, d, dom,
                                  [&](const Vec3& p, double uval, const Vec3& nrm) {
                                    return 2 * cn * inst.G.mean_curvature(p, nrm) *
                                           std::abs(uval);
                                  });
    CHECK(r.lhs == doctest::Approx(direct).epsilon(1e-10));
    CHECK(r.lhs < 0.0);
  }
}

TEST_CASE("nodal VTK export carries domain ids and u") {
  Mesh mesh = make_box(3);
  Vector u(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) u[v] = mesh.vertices[v][0] - 0.47;
  NodalDecomposition d = decompose(mesh, u);
  std::ostringstream out;
  write_nodal_vtk(mesh, d, out);
  CHECK(out.str().find("SCALARS u double 1") != std::string::npos);
  CHECK(out.str().find("SCALARS domain double 1") != std::string::npos);
}
