#ifndef CSL_NODAL_HPP
#define CSL_NODAL_HPP

#include <array>
#include <iosfwd>
#include <vector>

#include "csl/fem.hpp"

namespace csl {

// Signed vertex partition of a P1 function into nodal domains, with the
// piecewise-linear zero level set.  Near-zero vertices (|u| <= tau_u) belong
// to no domain; domains connect through strictly signed vertices only.
struct NodalDecomposition {
  Vector u;
  double tau_u = 0.0;
  std::vector<int> vertex_sign;  // +1, -1, 0
  std::vector<int> domain_of;    // vertex -> domain index, -1 if none

  struct Domain {
    int sign = 0;
    std::vector<int> vertices;
    std::vector<int> tets;  // tets owning at least one vertex of the domain
  };
  std::vector<Domain> domains;

  // Zero level set of the P1 interpolant, one or two triangles per cut tet.
  struct InterfacePiece {
    int tet = -1;
    std::array<Vec3, 3> corners;
    int plus_domain = -1;
    int minus_domain = -1;
  };
  std::vector<InterfacePiece> interface;

  int domain_count() const { return static_cast<int>(domains.size()); }
};

NodalDecomposition decompose(const Mesh& mesh, const Vector& u, double tau_rel = 1e-9);

// Integral of fn(p, u(p)) over the domain's sign region, in the metric
// volume element (clipped tets, exact P1 level-set geometry).
double integrate_domain(const Mesh& mesh, const Geometry& G,
                        const NodalDecomposition& d, int domain,
                        const std::function<double(const Vec3&, double)>& fn);
// Same over the domain's boundary patch (its part of the mesh boundary);
// fn(p, u(p), facet_normal).
double integrate_domain_boundary(
    const Mesh& mesh, const Geometry& G, const NodalDecomposition& d, int domain,
    const std::function<double(const Vec3&, double, const Vec3&)>& fn);
// Integral over the domain's interior interface of fn(p) * |grad u|_g, the
// gradient taken from the owning tet at the piece centroid.
double integrate_domain_interface(const Mesh& mesh, const Geometry& G,
                                  const NodalDecomposition& d, int domain,
                                  const std::function<double(const Vec3&)>& fn);

// c_n int_M R u dv + 2 c_n int_bnd h u dsigma for a near-kernel u; the
// continuum value vanishes identically, so the return is a pure
// discretization residual.  `pair` is the robin(0) assembly used for the
// near-kernel precondition check.
double prescription_residual(const Mesh& mesh, const Geometry& G, const Vector& u,
                             const OperatorPair& robin0, double tau_rel = 1e-7);

// int_D |u| P(v) dv + int_{interface} v |grad u| dsigma
//   + int_{boundary patch} |u| B(v) dsigma, which vanishes in the continuum.
double nodal_identity_residual(const Mesh& mesh, const Geometry& G,
                               const NodalDecomposition& d, int domain,
                               const ScalarField& v);

// Obstruction integral for the curvature pair of push(G, omega) over one
// nodal domain; lhs uses the printed boundary weight exponent (n+1)/2, and
// lhs_alt the exponent n/2 from the transformation bookkeeping (the two are
// reported side by side).
struct ObstructionResult {
  double lhs = 0.0;
  double lhs_alt = 0.0;
  double margin = 0.0;
  bool strictly_negative = false;
};
ObstructionResult obstruction_check(const Mesh& mesh, const Geometry& G,
                                    const ScalarField& omega, const NodalDecomposition& d,
                                    int domain, double margin_factor = 0.02);

// Conformally invariant boundary flux: lhs computed at push(G, omega) with
// the transported kernel, rhs from the curvature data at G.
struct FluxInvariant {
  double lhs = 0.0;
  double rhs = 0.0;
};
FluxInvariant boundary_flux_invariant(const Mesh& mesh, const Geometry& G,
                                      const ScalarField& omega,
                                      const NodalDecomposition& d, int domain);

// int |u|^p dv_g with p = 2n/(n-2); domain = -1 integrates over all of M.
double lp_density(const Mesh& mesh, const Geometry& G, const NodalDecomposition& d,
                  int domain = -1);

// Every boundary vertex where u vanishes (at tau_u) must lie within
// 2 h_max of the interior zero level set.
bool boundary_nodal_limit_check(const Mesh& mesh, const NodalDecomposition& d);

// VTK export: u as point scalar, dominant domain id as cell scalar.
void write_nodal_vtk(const Mesh& mesh, const NodalDecomposition& d, std::ostream& out);

}  // namespace csl

#endif
