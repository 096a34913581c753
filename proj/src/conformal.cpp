#include "csl/conformal.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "csl/errors.hpp"

namespace csl {

SparseMat submatrix(const SparseMat& A, const std::vector<int>& rows,
                    const std::vector<int>& cols) {
  std::vector<int> rmap(A.rows(), -1), cmap(A.cols(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) rmap[rows[i]] = static_cast<int>(i);
  for (std::size_t j = 0; j < cols.size(); ++j) cmap[cols[j]] = static_cast<int>(j);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMat::InnerIterator it(A, k); it; ++it) {
      int r = rmap[it.row()], c = cmap[it.col()];
      if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
    }
  SparseMat S(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

// ---------------------------------------------------------------------------
// Steklov operator
// ---------------------------------------------------------------------------

namespace {

// Counts sign classes of a small dense symmetric pencil at tolerance tau,
// throwing on tau-ambiguity.
int dense_pencil_negatives(const Matrix& D, const Matrix& Mass, double tau) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(D, Mass);
  if (es.info() != Eigen::Success) throw SolverError("dense pencil eigensolver failed");
  int neg = 0;
  const double lo = tau / std::sqrt(10.0), hi = tau * std::sqrt(10.0);
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double v = es.eigenvalues()[i];
    double a = std::abs(v);
    if (a > lo && a < hi)
      throw TauAmbiguityError("Steklov eigenvalue " + std::to_string(v) +
                              " straddles tau=" + std::to_string(tau));
    if (v < -tau) ++neg;
  }
  return neg;
}

}  // namespace

SteklovOperator steklov(const Mesh& mesh, const Geometry& G, double tau_rel,
                        double lambda_shift) {
  OperatorPair P = assemble(mesh, G, BC::Robin, 0.0);
  if (lambda_shift != 0.0) P.A = (P.A - lambda_shift * P.M).eval();
  const double tau = tau_rel * P.norm_scale();
  const auto& I = P.interior_dofs;
  const auto& B = P.boundary_dofs;
  const int ni = static_cast<int>(I.size());
  const int nb = static_cast<int>(B.size());
  if (nb == 0) throw Error("steklov: mesh has no boundary vertices");

  SparseMat A_ii = submatrix(P.A, I, I);
  SparseMat A_ib = submatrix(P.A, I, B);
  SparseMat M_ii = submatrix(P.M, I, I);

  SteklovOperator S;
  S.Mb = P.Mb;
  S.tau = tau;
  S.boundary_size = nb;

  // Interior (Dirichlet-block) near-kernel at tau.
  SpectralResult near = eigs_near_zero(A_ii, M_ii, std::min(ni, 4));
  const double lo = tau / std::sqrt(10.0), hi = tau * std::sqrt(10.0);
  int kdim = 0;
  for (int i = 0; i < near.eigenvalues.size(); ++i) {
    double a = std::abs(near.eigenvalues[i]);
    if (a > lo && a < hi)
      throw TauAmbiguityError("interior eigenvalue " + std::to_string(near.eigenvalues[i]) +
                              " straddles tau=" + std::to_string(tau) +
                              " in the Steklov construction");
    if (a <= tau) ++kdim;
  }

  Matrix A_ib_d = Matrix(A_ib);
  Matrix A_bb_d = Matrix(submatrix(P.A, B, B));

  if (kdim == 0) {
    Eigen::SimplicialLDLT<SparseMat> solver(A_ii);
    if (solver.info() != Eigen::Success)
      throw SolverError("interior factorization failed in Steklov construction");
    Matrix X = solver.solve(A_ib_d);
    S.D = A_bb_d - A_ib_d.transpose() * X;
    S.D = 0.5 * (S.D + S.D.transpose()).eval();
    S.S_basis = Matrix::Identity(nb, nb);
    return S;
  }

  // Degenerate branch: 0 is a discrete Dirichlet eigenvalue.
  S.degenerate = true;
  // Euclidean-orthonormal interior kernel basis W.
  Matrix W = near.eigenvectors.leftCols(kdim);
  {
    Eigen::HouseholderQR<Matrix> qr(W);
    W = qr.householderQ() * Matrix::Identity(ni, kdim);
  }
  S.ker_interior = W;

  // Discrete S = null space of (A_bi W)^T; columns of R are the variational
  // conormals of the kernel elements.
  Matrix R = A_ib_d.transpose() * W;  // nb x kdim
  Eigen::ColPivHouseholderQR<Matrix> qr(R);
  qr.setThreshold(1e-10);
  int rank = static_cast<int>(qr.rank());
  if (rank < kdim)
    throw TauAmbiguityError(
        "kernel conormals are numerically dependent; discrete S is ill-defined");
  Matrix Q = qr.householderQ() * Matrix::Identity(nb, nb);
  Matrix Z = Q.rightCols(nb - rank);  // orthonormal basis of S
  S.S_basis = Z;

  // Pseudo-inverse action of A_ii on the kernel complement via the bordered
  // system [A W; W^T 0].
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < A_ii.outerSize(); ++k)
    for (SparseMat::InnerIterator it(A_ii, k); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int j = 0; j < kdim; ++j)
    for (int i = 0; i < ni; ++i) {
      double w = W(i, j);
      if (w != 0.0) {
        trip.emplace_back(i, ni + j, w);
        trip.emplace_back(ni + j, i, w);
      }
    }
  SparseMat bordered(ni + kdim, ni + kdim);
  bordered.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SparseMat> solver(bordered);
  if (solver.info() != Eigen::Success)
    throw SolverError("bordered factorization failed in degenerate Steklov branch");

  Matrix rhs = Matrix::Zero(ni + kdim, nb);
  rhs.topRows(ni) = A_ib_d;
  Matrix X = solver.solve(rhs).topRows(ni);

  Matrix Dfull = A_bb_d - A_ib_d.transpose() * X;
  Dfull = 0.5 * (Dfull + Dfull.transpose()).eval();
  S.D = Z.transpose() * Dfull * Z;
  S.M_S = Z.transpose() * Matrix(P.Mb) * Z;
  return S;
}

SpectralResult SteklovOperator::eigs(int k) const {
  SpectralResult r;
  r.solver = "dense";
  r.tau = tau;
  const Matrix& Mass = degenerate ? M_S : Matrix(Mb);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(D, Mass);
  if (es.info() != Eigen::Success) throw SolverError("Steklov eigensolver failed");
  k = std::min<int>(k, es.eigenvalues().size());
  r.eigenvalues = es.eigenvalues().head(k);
  Matrix Y = es.eigenvectors().leftCols(k);
  r.residuals.resize(k);
  Eigen::LLT<Matrix> mllt(Mass);
  for (int i = 0; i < k; ++i) {
    Vector res = D * Y.col(i) - r.eigenvalues[i] * (Mass * Y.col(i));
    r.residuals[i] = std::sqrt(res.dot(mllt.solve(res)));
  }
  r.eigenvectors = degenerate ? Matrix(S_basis * Y) : Y;
  return r;
}

int SteklovOperator::negative_count() const {
  return degenerate ? dense_pencil_negatives(D, M_S, tau)
                    : dense_pencil_negatives(D, Matrix(Mb), tau);
}

// ---------------------------------------------------------------------------
// Kernels and tuning
// ---------------------------------------------------------------------------

Matrix kernel_of(const OperatorPair& pair, double tau_rel, SpectralResult* spectrum) {
  const double tau = tau_rel * pair.norm_scale();
  const int n = pair.size();
  SpectralResult near = eigs_near_zero(pair.A, pair.M, std::min(n, 6));
  const double lo = tau / std::sqrt(10.0), hi = tau * std::sqrt(10.0);
  std::vector<int> keep;
  for (int i = 0; i < near.eigenvalues.size(); ++i) {
    double a = std::abs(near.eigenvalues[i]);
    if (a > lo && a < hi)
      throw TauAmbiguityError("eigenvalue " + std::to_string(near.eigenvalues[i]) +
                              " straddles tau=" + std::to_string(tau));
    if (a <= tau) keep.push_back(i);
  }
  Matrix K(n, keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) K.col(i) = near.eigenvectors.col(keep[i]);
  if (spectrum) {
    *spectrum = near;
    spectrum->tau = tau;
  }
  return K;
}

RobinFamily robin_family(const Mesh& mesh, const Geometry& G,
                         const std::vector<double>& s_values, int k,
                         const EigsOptions& opts) {
  OperatorPair base = assemble(mesh, G, BC::Robin, 0.0);
  // s enters only through the boundary mass; reuse the s=0 assembly.
  const int n = base.size();
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < base.Mb.outerSize(); ++c)
    for (SparseMat::InnerIterator it(base.Mb, c); it; ++it)
      trip.emplace_back(base.boundary_dofs[it.row()], base.boundary_dofs[it.col()],
                        it.value());
  SparseMat Mb_full(n, n);
  Mb_full.setFromTriplets(trip.begin(), trip.end());

  RobinFamily fam;
  fam.s_values = s_values;
  for (double s : s_values) {
    OperatorPair Ps = base;
    Ps.s = s;
    Ps.A = base.A + s * Mb_full;
    fam.spectra.push_back(eigs(Ps, k, opts));
  }

  // Match curves across the grid by M-overlap, ties broken by eigenvalue
  // proximity (the overlap handles crossings; proximity handles clusters).
  const int ns = static_cast<int>(s_values.size());
  fam.curves.resize(k, ns);
  std::vector<int> perm(k);
  Matrix prev_vecs;
  for (int j = 0; j < ns; ++j) {
    const auto& cur = fam.spectra[j];
    if (j == 0) {
      for (int i = 0; i < k; ++i) {
        perm[i] = i;
        fam.curves(i, 0) = cur.eigenvalues[i];
      }
    } else {
      Matrix overlap = prev_vecs.transpose() * (base.M * cur.eigenvectors);
      std::vector<int> assigned(k, -1);
      std::vector<char> used(k, 0);
      // Greedy global assignment by decreasing overlap magnitude.
      std::vector<std::tuple<double, int, int>> cand;
      for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b)
          cand.emplace_back(std::abs(overlap(a, b)), a, b);
      std::sort(cand.begin(), cand.end(), [](auto& x, auto& y) {
        return std::get<0>(x) > std::get<0>(y);
      });
      std::vector<char> row_done(k, 0);
      for (auto& [val, a, b] : cand) {
        (void)val;
        if (row_done[a] || used[b]) continue;
        assigned[a] = b;
        row_done[a] = 1;
        used[b] = 1;
      }
      std::vector<int> newperm(k);
      for (int a = 0; a < k; ++a) newperm[a] = assigned[a];
      // Compose with the running permutation: curve i followed prev column
      // perm[i]; prev column a maps to cur column assigned[a].
      for (int i = 0; i < k; ++i) perm[i] = newperm[perm[i]];
      for (int i = 0; i < k; ++i) fam.curves(i, j) = cur.eigenvalues[perm[i]];
    }
    prev_vecs = cur.eigenvectors;
  }
  return fam;
}

double robin_eigenvalue_slope(const OperatorPair& robin_pair, const Vector& eigvec) {
  // lambda' = int_bnd u^2 dsigma for M-normalized u.
  Vector ub(robin_pair.boundary_dofs.size());
  for (std::size_t i = 0; i < robin_pair.boundary_dofs.size(); ++i)
    ub[i] = eigvec[robin_pair.boundary_dofs[i]];
  double norm2 = eigvec.dot(robin_pair.M * eigvec);
  return ub.dot(robin_pair.Mb * ub) / norm2;
}

namespace {

TuneResult tune_generic(const Mesh& mesh, const std::function<Geometry(double)>& family,
                        int k, double t_lo, double t_hi, double tol_rel, BC bc,
                        const EigsOptions& opts) {
  if (k < 1) throw Error("tune_to_kernel: k is 1-based and must be >= 1");
  struct Eval {
    double lambda;
    double scale;
    Vector vec;
  };
  auto eval = [&](double t) -> Eval {
    OperatorPair P = assemble(mesh, family(t), bc);
    SpectralResult r = eigs(P, k, opts);
    return {r.eigenvalues[k - 1], P.norm_scale(), r.eigenvectors.col(k - 1)};
  };
  Eval lo = eval(t_lo), hi = eval(t_hi);
  if (lo.lambda == 0.0) return {t_lo, 0.0, lo.vec, 0};
  if (hi.lambda == 0.0) return {t_hi, 0.0, hi.vec, 0};
  if ((lo.lambda > 0) == (hi.lambda > 0))
    throw Error("tune_to_kernel: eigenvalue does not change sign over the bracket [" +
                std::to_string(t_lo) + ", " + std::to_string(t_hi) + "]");
  TuneResult out;
  for (int it = 0; it < 200; ++it) {
    double tm = 0.5 * (t_lo + t_hi);
    Eval mid = eval(tm);
    out.t_star = tm;
    out.lambda = mid.lambda;
    out.kernel_vec = mid.vec;
    out.iterations = it + 1;
    if (std::abs(mid.lambda) <= tol_rel * mid.scale) return out;
    if ((mid.lambda > 0) == (lo.lambda > 0)) {
      t_lo = tm;
      lo = mid;
    } else {
      t_hi = tm;
      hi = mid;
    }
    if (t_hi - t_lo <= 1e-15 * std::max(1.0, std::abs(t_lo)))
      throw SolverError("tune_to_kernel: bracket collapsed before reaching tolerance");
  }
  throw SolverError("tune_to_kernel: bisection did not converge in 200 iterations");
}

}  // namespace

TuneResult tune_to_kernel(const Mesh& mesh, const std::function<Geometry(double)>& family,
                          int k, double t_lo, double t_hi, double tol_rel,
                          const EigsOptions& opts) {
  return tune_generic(mesh, family, k, t_lo, t_hi, tol_rel, BC::Robin, opts);
}

TuneResult tune_to_dirichlet_kernel(const Mesh& mesh,
                                    const std::function<Geometry(double)>& family, int k,
                                    double t_lo, double t_hi, double tol_rel,
                                    const EigsOptions& opts) {
  return tune_generic(mesh, family, k, t_lo, t_hi, tol_rel, BC::Dirichlet, opts);
}

// ---------------------------------------------------------------------------
// Friedlander counts
// ---------------------------------------------------------------------------

FriedlanderCounts friedlander_counts(const Mesh& mesh, const Geometry& G, double tau_rel,
                                     double lambda_shift) {
  OperatorPair PR = assemble(mesh, G, BC::Robin, 0.0);
  OperatorPair PD = assemble(mesh, G, BC::Dirichlet);
  if (lambda_shift != 0.0) {
    PR.A = (PR.A - lambda_shift * PR.M).eval();
    PD.A = (PD.A - lambda_shift * PD.M).eval();
  }
  const double tau = tau_rel * PR.norm_scale();

  FriedlanderCounts out;
  out.tau = tau;

  Inertia iR = negative_inertia(PR.A, PR.M, tau);
  Inertia iD = negative_inertia(PD.A, PD.M, tau);
  out.N_R = iR.n_neg_strict;
  out.N_D = iD.n_neg_strict;
  out.dim_ker_D = iD.n_zero_at_tau;

  SteklovOperator S = steklov(mesh, G, tau_rel, lambda_shift);
  out.degenerate_branch = S.degenerate;
  if (S.degenerate &&
      static_cast<int>(S.ker_interior.cols()) != out.dim_ker_D)
    throw TauAmbiguityError("inconsistent Dirichlet kernel dimensions between inertia and "
                            "Steklov construction");
  out.N_neg_steklov = S.negative_count();

  out.identity_holds = (out.N_R - out.N_D) == (out.N_neg_steklov + out.dim_ker_D);
  return out;
}

}  // namespace csl
