#ifndef CSL_CONFORMAL_HPP
#define CSL_CONFORMAL_HPP

#include <functional>
#include <vector>

#include "csl/eigenlin.hpp"

namespace csl {

// Extracts A(rows, cols) from a sparse matrix.
SparseMat submatrix(const SparseMat& A, const std::vector<int>& rows,
                    const std::vector<int>& cols);

// Discrete conformal Dirichlet-to-Robin operator: the boundary Schur
// complement of the robin(0) matrix.  When the interior block is singular at
// tolerance tau (0 is a discrete Dirichlet eigenvalue), the operator is
// built on the subspace S = { u : u^T (A_bi W) = 0 } using the pseudo-inverse
// of the interior block, and the bases are returned.
struct SteklovOperator {
  Matrix D;             // on boundary vertices (regular) or on S (degenerate)
  SparseMat Mb;         // boundary mass
  Matrix M_S;           // Z^T Mb Z (degenerate branch only)
  bool degenerate = false;
  Matrix ker_interior;  // W: interior near-kernel of the Dirichlet block (cols)
  Matrix S_basis;       // Z: orthonormal basis of S in boundary coordinates
  double tau = 0.0;
  int boundary_size = 0;

  // Eigenpairs of D y = sigma Mb y (or the S-restricted pencil); vectors are
  // returned in boundary-vertex coordinates.
  SpectralResult eigs(int k) const;
  // Negative count, tau-classified.
  int negative_count() const;
};

// `lambda_shift` builds the operator from A - lambda M instead of A: the
// counting identity extends to the counting functions N_R(lambda) and
// N_D(lambda), though those are conformally invariant only at lambda = 0.
SteklovOperator steklov(const Mesh& mesh, const Geometry& G, double tau_rel = 1e-7,
                        double lambda_shift = 0.0);

// M-orthonormal near-kernel of a pair: eigenvectors with |lambda| <= tau.
Matrix kernel_of(const OperatorPair& pair, double tau_rel = 1e-7,
                 SpectralResult* spectrum = nullptr);

// Spectra of the analytic Robin family B_g u + s u = 0 over a grid of s,
// with eigenvalue curves matched across the grid by M-overlap.
struct RobinFamily {
  std::vector<double> s_values;
  std::vector<SpectralResult> spectra;
  // curves(i, j) = i-th matched eigenvalue curve at s_values[j]
  Matrix curves;
};
RobinFamily robin_family(const Mesh& mesh, const Geometry& G,
                         const std::vector<double>& s_values, int k,
                         const EigsOptions& opts = {});

// d lambda / d s along a Robin eigenvalue curve equals the boundary mass of
// the (M-normalized) eigenfunction; returns that assembled value.
double robin_eigenvalue_slope(const OperatorPair& robin_pair, const Vector& eigvec);

// Bisects a one-parameter family of geometries until the k-th robin(0)
// eigenvalue vanishes (k is 1-based).
struct TuneResult {
  double t_star = 0.0;
  double lambda = 0.0;
  Vector kernel_vec;   // vertex vector
  int iterations = 0;
};
TuneResult tune_to_kernel(const Mesh& mesh,
                          const std::function<Geometry(double)>& family, int k,
                          double t_lo, double t_hi, double tol_rel = 1e-9,
                          const EigsOptions& opts = {});
// Same, for the Dirichlet eigenvalue (manufactures dim ker P^D >= 1).
TuneResult tune_to_dirichlet_kernel(const Mesh& mesh,
                                    const std::function<Geometry(double)>& family, int k,
                                    double t_lo, double t_hi, double tol_rel = 1e-9,
                                    const EigsOptions& opts = {});

// All counts of the negative-eigenvalue identity
//   N_R - N_D = N_-(D_hat) + dim ker P^D
// computed at a common tolerance.
struct FriedlanderCounts {
  int N_R = 0;
  int N_D = 0;
  int dim_ker_D = 0;
  int N_neg_steklov = 0;
  bool identity_holds = false;
  bool degenerate_branch = false;
  double tau = 0.0;
};
FriedlanderCounts friedlander_counts(const Mesh& mesh, const Geometry& G,
                                     double tau_rel = 1e-7, double lambda_shift = 0.0);

}  // namespace csl

#endif
