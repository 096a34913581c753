#ifndef CSL_EIGENLIN_HPP
#define CSL_EIGENLIN_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>

#include "csl/fem.hpp"

namespace csl {

using Matrix = Eigen::MatrixXd;

// Eigenpairs of A x = lambda M x, eigenvalues ascending, eigenvectors
// M-orthonormal.
struct SpectralResult {
  Vector eigenvalues;
  Matrix eigenvectors;
  Vector residuals;     // ||A x - lambda M x||_{M^-1}
  std::string solver;   // "dense" | "lanczos"
  double tau = 0.0;     // absolute kernel tolerance used for dim-ker queries
};

struct EigsOptions {
  double tau_rel = 1e-7;
  int dense_limit = 3000;   // dense path for sizes up to this
  enum class Force { Auto, Dense, Lanczos } force = Force::Auto;
  int max_iter = 400;       // Lanczos steps per restart
  int max_restarts = 5;
  double residual_tol = 1e-9;
};

SpectralResult eigs(const SparseMat& A, const SparseMat& M, int k, const EigsOptions& opts = {});
SpectralResult eigs(const OperatorPair& pair, int k, const EigsOptions& opts = {});

// Eigenvalues of (A, M) closest to zero (by shift-invert at 0), ascending by
// magnitude; used for tolerance-aware kernel classification.
SpectralResult eigs_near_zero(const SparseMat& A, const SparseMat& M, int k,
                              const EigsOptions& opts = {});

// Counts from a symmetric-indefinite LDL^T with 1x1/2x2 pivoting.
struct DenseInertia {
  int n_neg = 0;
  int n_zero = 0;
  int n_pos = 0;
};
DenseInertia ldlt_inertia(Matrix A, double zero_tol_rel = 0.0);

// Inertia of the pencil (A, M): n_neg from the pivoted LDL^T of A (valid by
// Sylvester's law since M is SPD).  The tau-classified counts come from the
// inertias of the shifted pencils A +- tau M, which stay exact integers even
// when an eigenvalue sits at roundoff scale.  A targeted small-eigenvalue
// solve guards the window: throws TauAmbiguityError when eigenvalues straddle
// tau within a factor 10.
struct Inertia {
  int n_neg = 0;          // raw LDL^T count, lambda < 0
  int n_neg_strict = 0;   // lambda < -tau
  int n_zero_at_tau = 0;  // |lambda| <= tau
  double tau = 0.0;       // absolute
};
Inertia negative_inertia(const SparseMat& A, const SparseMat& M, double tau_abs);
Inertia negative_inertia(const OperatorPair& pair, double tau_rel = 1e-7);

}  // namespace csl

#endif
