#ifndef CSL_FEM_HPP
#define CSL_FEM_HPP

#include <Eigen/Sparse>
#include <functional>
#include <string>
#include <vector>

#include "csl/geometry.hpp"
#include "csl/mesh.hpp"

namespace csl {

using SparseMat = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

enum class BC { Dirichlet, Neumann, Robin };
std::string bc_name(BC bc);

struct AssemblyOptions {
  int threads = 1;  // 0 = hardware concurrency
};

// Assembled symmetric pair (A, M) for one boundary condition.
//
// A realizes the form  a_s(u,v) = int (grad u . grad v + c_n R u v) dv
//                                 + int_bnd (2 c_n h + s) u v dsigma
// in the geometry's metric; the boundary term is dropped for Dirichlet
// (eliminated DOFs) and Neumann (natural condition).  M is the metric mass
// matrix on the same DOFs; Mb the boundary mass on boundary vertices.
struct OperatorPair {
  BC bc = BC::Robin;
  double s = 0.0;
  SparseMat A;
  SparseMat M;
  SparseMat Mb;                      // boundary-vertex space
  std::vector<int> dof_to_vertex;    // DOF -> mesh vertex
  std::vector<int> interior_dofs;    // DOF indices of interior vertices
  std::vector<int> boundary_dofs;    // DOF indices of boundary vertices (empty for Dirichlet)
  int tet_quad_order = 2;
  int tri_quad_order = 2;
  std::string geometry_hash;

  int size() const { return static_cast<int>(A.rows()); }
  // ||A||_inf / ||M||_inf; the natural scale for kernel tolerances.
  double norm_scale() const;
};

OperatorPair assemble(const Mesh& mesh, const Geometry& G, BC bc, double s = 0.0,
                      const AssemblyOptions& opts = {});

// (u^T A u)/(u^T M u) for the robin(0) assembly; u indexed by mesh vertex.
double rayleigh_quotient(const Mesh& mesh, const Geometry& G, const Vector& u_vertex);
double rayleigh_quotient(const OperatorPair& robin0, const Vector& u);

// Quadrature of pointwise fields against the metric volume/area elements.
// These use a higher-order rule than assembly (degree 5 / 4), so identities
// evaluated through them measure genuine consistency error rather than
// reproducing the assembly's own sums.
double integrate_interior(const Mesh& mesh, const Geometry& G,
                          const std::function<double(const Vec3&)>& f);
double integrate_interior(const Mesh& mesh, const Geometry& G,
                          const std::function<double(int, const Vec3&)>& f);
double integrate_boundary(const Mesh& mesh, const Geometry& G,
                          const std::function<double(const Vec3&)>& f);
double integrate_boundary(const Mesh& mesh, const Geometry& G,
                          const std::function<double(int, const Vec3&)>& f);

// Weak covariance residual: assembles the conformal Laplacian at
// G_hat = push(G, omega), applies it to the transported interpolant of f and
// subtracts the transported interior/boundary images of P_{1,g} f and B_g f.
// Returns the discrete dual (H^-1) norm of the residual functional.
double covariance_residual(const Mesh& mesh, const Geometry& G, const ScalarField& omega,
                           const Expr& f);

// Linear interpolation helpers for vertex vectors.
double p1_value(const Mesh& mesh, const Vector& u, int tet, const Vec3& p);
Vec3 p1_gradient(const Mesh& mesh, const Vector& u, int tet);

// Quadrature rules (barycentric points, weights summing to 1); exposed for
// reuse by the nodal integrators and verified against monomials in tests.
struct TetRule {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
};
struct TriRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
};
const TetRule& tet_rule_order2();
const TetRule& tet_rule_order5();
const TriRule& tri_rule_order2();
const TriRule& tri_rule_order4();

}  // namespace csl

#endif
