#include "csl/fem.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <thread>

#include "csl/errors.hpp"

namespace csl {

std::string bc_name(BC bc) {
  switch (bc) {
    case BC::Dirichlet:
      return "dirichlet";
    case BC::Neumann:
      return "neumann";
    case BC::Robin:
      return "robin";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Quadrature rules
// ---------------------------------------------------------------------------

const TetRule& tet_rule_order2() {
  static const TetRule rule = [] {
    TetRule r;
    const double a = 0.5854101966249685, b = 0.1381966011250105;
    for (int i = 0; i < 4; ++i) {
      std::array<double, 4> p = {b, b, b, b};
      p[i] = a;
      r.points.push_back(p);
      r.weights.push_back(0.25);
    }
    return r;
  }();
  return rule;
}

const TetRule& tet_rule_order5() {
  static const TetRule rule = [] {
    TetRule r;
    auto add4 = [&](double b, double w) {
      // orbit (a,b,b,b) with a = 1 - 3b
      double a = 1.0 - 3.0 * b;
      for (int i = 0; i < 4; ++i) {
        std::array<double, 4> p = {b, b, b, b};
        p[i] = a;
        r.points.push_back(p);
        r.weights.push_back(w);
      }
    };
    auto add6 = [&](double a, double w) {
      double b = 0.5 - a;
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
          std::array<double, 4> p = {b, b, b, b};
          p[i] = a;
          p[j] = a;
          r.points.push_back(p);
          r.weights.push_back(w);
        }
    };
    // 14-point degree-5 rule; verified against monomials in the test suite.
    add4(0.3108859192633005, 0.1126879257180162);
    add4(0.0927352503108912, 0.0734930431163619);
    add6(0.0455037041256497, 0.0425460207770812);
    return r;
  }();
  return rule;
}

const TriRule& tri_rule_order2() {
  static const TriRule rule = [] {
    TriRule r;
    for (int i = 0; i < 3; ++i) {
      std::array<double, 3> p = {1.0 / 6, 1.0 / 6, 1.0 / 6};
      p[i] = 2.0 / 3;
      r.points.push_back(p);
      r.weights.push_back(1.0 / 3);
    }
    return r;
  }();
  return rule;
}

const TriRule& tri_rule_order4() {
  static const TriRule rule = [] {
    TriRule r;
    auto add3 = [&](double a, double w) {
      double b = (1.0 - a) / 2.0;
      for (int i = 0; i < 3; ++i) {
        std::array<double, 3> p = {b, b, b};
        p[i] = a;
        r.points.push_back(p);
        r.weights.push_back(w);
      }
    };
    // Dunavant degree 4.
    add3(1.0 - 2 * 0.445948490915965, 0.223381589678011);
    add3(1.0 - 2 * 0.091576213509771, 0.109951743655322);
    return r;
  }();
  return rule;
}

// ---------------------------------------------------------------------------
// Element helpers
// ---------------------------------------------------------------------------

namespace {

struct TetGeom {
  Vec3 grad[4];   // constant P1 gradients
  double volume;  // Euclidean
};

TetGeom tet_geom(const Mesh& mesh, int t) {
  TetGeom g;
  const auto& T = mesh.tets[t];
  Mat3 E;
  for (int c = 0; c < 3; ++c) E.col(c) = mesh.vertices[T[c + 1]] - mesh.vertices[T[0]];
  g.volume = E.determinant() / 6.0;
  Mat3 Einv = E.inverse();
  for (int i = 0; i < 3; ++i) g.grad[i + 1] = Einv.row(i);
  g.grad[0] = -(g.grad[1] + g.grad[2] + g.grad[3]);
  return g;
}

Vec3 bary_point(const Mesh& mesh, const std::array<int, 4>& T,
                const std::array<double, 4>& lam) {
  return lam[0] * mesh.vertices[T[0]] + lam[1] * mesh.vertices[T[1]] +
         lam[2] * mesh.vertices[T[2]] + lam[3] * mesh.vertices[T[3]];
}

Vec3 bary_point_tri(const Mesh& mesh, const std::array<int, 3>& T,
                    const std::array<double, 3>& lam) {
  return lam[0] * mesh.vertices[T[0]] + lam[1] * mesh.vertices[T[1]] +
         lam[2] * mesh.vertices[T[2]];
}

uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return hc ? static_cast<int>(hc) : 1;
}

// Runs fn(i, buffer) over [0,n) in contiguous chunks, one buffer per worker;
// buffers are merged in chunk order afterwards, so results do not depend on
// the thread count.
template <typename Buffer, typename Fn>
std::vector<Buffer> chunked_parallel(int n, int threads, Fn&& fn) {
  threads = std::min(std::max(threads, 1), std::max(n, 1));
  std::vector<Buffer> bufs(threads);
  std::vector<std::exception_ptr> errs(threads);
  std::vector<std::thread> pool;
  int chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    int lo = w * chunk, hi = std::min(n, lo + chunk);
    auto work = [&, w, lo, hi] {
      try {
        for (int i = lo; i < hi; ++i) fn(i, bufs[w]);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    };
    if (threads == 1)
      work();
    else
      pool.emplace_back(work);
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return bufs;
}

using Triplet = Eigen::Triplet<double>;

double boundary_area_element(const Geometry::MetricSample& ms, const Vec3& e1, const Vec3& e2) {
  double g11 = e1.dot(ms.g * e1), g12 = e1.dot(ms.g * e2), g22 = e2.dot(ms.g * e2);
  return std::sqrt(std::max(g11 * g22 - g12 * g12, 0.0));
}

}  // namespace

OperatorPair assemble(const Mesh& mesh, const Geometry& G, BC bc, double s,
                      const AssemblyOptions& opts) {
  if (G.dim() != 3) throw Error("meshed assembly requires n = 3");
  const int threads = resolve_threads(opts.threads);
  const double cn = conformal_coupling(3).value();
  const double bcn = boundary_coupling(3).value();
  const bool curved = !G.stack().empty() || G.base().R.has_value() || !G.base().euclidean;

  OperatorPair P;
  P.bc = bc;
  P.s = s;

  const int nv = mesh.num_vertices();
  std::vector<int> dof_of(nv, -1);
  if (bc == BC::Dirichlet) {
    P.dof_to_vertex = mesh.interior_vertices;
    for (int i = 0; i < static_cast<int>(mesh.interior_vertices.size()); ++i)
      dof_of[mesh.interior_vertices[i]] = i;
  } else {
    P.dof_to_vertex.resize(nv);
    for (int v = 0; v < nv; ++v) {
      P.dof_to_vertex[v] = v;
      dof_of[v] = v;
    }
  }
  const int ndof = static_cast<int>(P.dof_to_vertex.size());
  if (ndof == 0) throw Error("no degrees of freedom (mesh has no interior vertices?)");

  struct VolBuf {
    std::vector<Triplet> a, m;
  };
  auto vol = chunked_parallel<VolBuf>(mesh.num_tets(), threads, [&](int t, VolBuf& buf) {
    const TetRule& tr = tet_rule_order2();
    TetGeom tg = tet_geom(mesh, t);
    const auto& T = mesh.tets[t];
    double ke[4][4] = {};
    double me[4][4] = {};
    for (std::size_t q = 0; q < tr.points.size(); ++q) {
      Vec3 p = bary_point(mesh, T, tr.points[q]);
      auto ms = G.metric(p);
      double w = tr.weights[q] * tg.volume * ms.sqrt_det;
      double rq = curved ? cn * G.scalar_curvature(p) : 0.0;
      const auto& lam = tr.points[q];
      Vec3 gi[4];
      for (int a = 0; a < 4; ++a) gi[a] = ms.g_inv * tg.grad[a];
      for (int a = 0; a < 4; ++a)
        for (int b = a; b < 4; ++b) {
          double mass = w * lam[a] * lam[b];
          ke[a][b] += w * gi[a].dot(tg.grad[b]) + rq * mass;
          me[a][b] += mass;
        }
    }
    for (int a = 0; a < 4; ++a)
      for (int b = a; b < 4; ++b) {
        int ia = dof_of[T[a]], ib = dof_of[T[b]];
        if (ia < 0 || ib < 0) continue;
        buf.a.emplace_back(ia, ib, ke[a][b]);
        buf.m.emplace_back(ia, ib, me[a][b]);
        if (ia != ib) {
          buf.a.emplace_back(ib, ia, ke[a][b]);
          buf.m.emplace_back(ib, ia, me[a][b]);
        }
      }
  });

  // Boundary pass: plain boundary mass (for Mb) and, for Robin, the
  // (2 c_n h + s)-weighted boundary term added to A.
  struct BndBuf {
    std::vector<Triplet> mb;      // boundary-vertex indexing
    std::vector<Triplet> robin;   // DOF indexing
  };
  auto bnd = chunked_parallel<BndBuf>(
      static_cast<int>(mesh.boundary.size()), threads, [&](int bti, BndBuf& buf) {
        const TriRule& sr = tri_rule_order2();
        const auto& bt = mesh.boundary[bti];
        Vec3 e1 = mesh.vertices[bt.v[1]] - mesh.vertices[bt.v[0]];
        Vec3 e2 = mesh.vertices[bt.v[2]] - mesh.vertices[bt.v[0]];
        double me[3][3] = {};
        double re[3][3] = {};
        for (std::size_t q = 0; q < sr.points.size(); ++q) {
          Vec3 p = bary_point_tri(mesh, bt.v, sr.points[q]);
          auto ms = G.metric(p);
          double w = 0.5 * sr.weights[q] * boundary_area_element(ms, e1, e2);
          double coeff =
              bc == BC::Robin ? bcn * G.mean_curvature(p, bt.normal) + s : 0.0;
          const auto& lam = sr.points[q];
          for (int a = 0; a < 3; ++a)
            for (int b = a; b < 3; ++b) {
              double mass = w * lam[a] * lam[b];
              me[a][b] += mass;
              re[a][b] += coeff * mass;
            }
        }
        for (int a = 0; a < 3; ++a)
          for (int b = a; b < 3; ++b) {
            int ba = mesh.boundary_index_of[bt.v[a]];
            int bb = mesh.boundary_index_of[bt.v[b]];
            buf.mb.emplace_back(ba, bb, me[a][b]);
            if (ba != bb) buf.mb.emplace_back(bb, ba, me[a][b]);
            if (bc == BC::Robin) {
              int ia = dof_of[bt.v[a]], ib = dof_of[bt.v[b]];
              buf.robin.emplace_back(ia, ib, re[a][b]);
              if (ia != ib) buf.robin.emplace_back(ib, ia, re[a][b]);
            }
          }
      });

  std::vector<Triplet> ta, tm, tmb;
  for (auto& b : vol) {
    ta.insert(ta.end(), b.a.begin(), b.a.end());
    tm.insert(tm.end(), b.m.begin(), b.m.end());
  }
  for (auto& b : bnd) {
    ta.insert(ta.end(), b.robin.begin(), b.robin.end());
    tmb.insert(tmb.end(), b.mb.begin(), b.mb.end());
  }

  P.A.resize(ndof, ndof);
  P.A.setFromTriplets(ta.begin(), ta.end());
  P.M.resize(ndof, ndof);
  P.M.setFromTriplets(tm.begin(), tm.end());
  const int nb = static_cast<int>(mesh.boundary_vertices.size());
  P.Mb.resize(nb, nb);
  P.Mb.setFromTriplets(tmb.begin(), tmb.end());

  if (bc == BC::Dirichlet) {
    P.interior_dofs.resize(ndof);
    for (int i = 0; i < ndof; ++i) P.interior_dofs[i] = i;
  } else {
    P.interior_dofs = mesh.interior_vertices;
    P.boundary_dofs = mesh.boundary_vertices;
  }

  std::string desc = G.describe() + "|bc=" + bc_name(bc) + "|s=" + std::to_string(s) +
                     "|nv=" + std::to_string(nv) + "|nt=" + std::to_string(mesh.num_tets());
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a(desc)));
  P.geometry_hash = hex;
  return P;
}

double OperatorPair::norm_scale() const {
  auto inf_norm = [](const SparseMat& S) {
    Vector rows = Vector::Zero(S.rows());
    for (int k = 0; k < S.outerSize(); ++k)
      for (SparseMat::InnerIterator it(S, k); it; ++it) rows[it.row()] += std::abs(it.value());
    return rows.maxCoeff();
  };
  double mn = inf_norm(M);
  if (mn == 0.0) throw Error("mass matrix has zero norm");
  return inf_norm(A) / mn;
}

double rayleigh_quotient(const OperatorPair& robin0, const Vector& u) {
  double den = u.dot(robin0.M * u);
  if (den <= 0.0) throw Error("Rayleigh quotient of a zero (or non-)vector");
  return u.dot(robin0.A * u) / den;
}

double rayleigh_quotient(const Mesh& mesh, const Geometry& G, const Vector& u_vertex) {
  if (u_vertex.size() != mesh.num_vertices())
    throw Error("rayleigh_quotient expects one value per mesh vertex");
  OperatorPair P = assemble(mesh, G, BC::Robin, 0.0);
  return rayleigh_quotient(P, u_vertex);
}

// ---------------------------------------------------------------------------
// Integration of pointwise fields
// ---------------------------------------------------------------------------

double integrate_interior(const Mesh& mesh, const Geometry& G,
                          const std::function<double(int, const Vec3&)>& f) {
  const TetRule& tr = tet_rule_order5();
  double total = 0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    double vol = mesh.tet_volume(t);
    for (std::size_t q = 0; q < tr.points.size(); ++q) {
      Vec3 p = bary_point(mesh, mesh.tets[t], tr.points[q]);
      total += tr.weights[q] * vol * G.metric(p).sqrt_det * f(t, p);
    }
  }
  return total;
}

double integrate_interior(const Mesh& mesh, const Geometry& G,
                          const std::function<double(const Vec3&)>& f) {
  return integrate_interior(mesh, G, [&](int, const Vec3& p) { return f(p); });
}

double integrate_boundary(const Mesh& mesh, const Geometry& G,
                          const std::function<double(int, const Vec3&)>& f) {
  const TriRule& sr = tri_rule_order4();
  double total = 0;
  for (int b = 0; b < static_cast<int>(mesh.boundary.size()); ++b) {
    const auto& bt = mesh.boundary[b];
    Vec3 e1 = mesh.vertices[bt.v[1]] - mesh.vertices[bt.v[0]];
    Vec3 e2 = mesh.vertices[bt.v[2]] - mesh.vertices[bt.v[0]];
    for (std::size_t q = 0; q < sr.points.size(); ++q) {
      Vec3 p = bary_point_tri(mesh, bt.v, sr.points[q]);
      auto ms = G.metric(p);
      total += 0.5 * sr.weights[q] * boundary_area_element(ms, e1, e2) * f(b, p);
    }
  }
  return total;
}

double integrate_boundary(const Mesh& mesh, const Geometry& G,
                          const std::function<double(const Vec3&)>& f) {
  return integrate_boundary(mesh, G, [&](int, const Vec3& p) { return f(p); });
}

// ---------------------------------------------------------------------------
// P1 interpolation
// ---------------------------------------------------------------------------

double p1_value(const Mesh& mesh, const Vector& u, int tet, const Vec3& p) {
  const auto& T = mesh.tets[tet];
  Mat3 E;
  for (int c = 0; c < 3; ++c) E.col(c) = mesh.vertices[T[c + 1]] - mesh.vertices[T[0]];
  Vec3 lam123 = E.inverse() * (p - mesh.vertices[T[0]]);
  double lam0 = 1.0 - lam123.sum();
  return lam0 * u[T[0]] + lam123[0] * u[T[1]] + lam123[1] * u[T[2]] + lam123[2] * u[T[3]];
}

Vec3 p1_gradient(const Mesh& mesh, const Vector& u, int tet) {
  TetGeom tg = tet_geom(mesh, tet);
  const auto& T = mesh.tets[tet];
  Vec3 g = Vec3::Zero();
  for (int i = 0; i < 4; ++i) g += u[T[i]] * tg.grad[i];
  return g;
}

// ---------------------------------------------------------------------------
// Weak conformal covariance residual
// ---------------------------------------------------------------------------

double covariance_residual(const Mesh& mesh, const Geometry& G, const ScalarField& omega,
                           const Expr& f) {
  const int n = G.dim();
  const double mu = 0.5 * n - 1.0;
  Geometry Ghat = G.pushed(omega);
  OperatorPair Phat = assemble(mesh, Ghat, BC::Robin, 0.0);

  const int nv = mesh.num_vertices();
  Vector v1(nv);
  for (int v = 0; v < nv; ++v) {
    const Vec3& p = mesh.vertices[v];
    v1[v] = std::exp(-mu * omega.value(p)) * f.value(p);
  }
  Vector lhs = Phat.A * v1;

  // Interior image: int phi_i e^{-(n/2+1) omega} (P_{1,g} f) dv_ghat.
  Vector rhs = Vector::Zero(nv);
  const TetRule& tr = tet_rule_order5();
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tets[t];
    double vol = mesh.tet_volume(t);
    for (std::size_t q = 0; q < tr.points.size(); ++q) {
      const auto& lam = tr.points[q];
      Vec3 p = bary_point(mesh, T, lam);
      double dens = Ghat.metric(p).sqrt_det;
      double val = std::exp(-(0.5 * n + 1.0) * omega.value(p)) *
                   G.conformal_laplacian_of(f.jet(p), p);
      double w = tr.weights[q] * vol * dens * val;
      for (int a = 0; a < 4; ++a) rhs[T[a]] += w * lam[a];
    }
  }
  // Boundary image: int phi_i e^{-(n/2) omega} (B_g f) dsigma_ghat.
  const TriRule& sr = tri_rule_order4();
  for (const auto& bt : mesh.boundary) {
    Vec3 e1 = mesh.vertices[bt.v[1]] - mesh.vertices[bt.v[0]];
    Vec3 e2 = mesh.vertices[bt.v[2]] - mesh.vertices[bt.v[0]];
    for (std::size_t q = 0; q < sr.points.size(); ++q) {
      const auto& lam = sr.points[q];
      Vec3 p = bary_point_tri(mesh, bt.v, lam);
      auto ms = Ghat.metric(p);
      double darea = boundary_area_element(ms, e1, e2);
      double val = std::exp(-0.5 * n * omega.value(p)) *
                   G.conformal_robin_of(f.jet(p), p, bt.normal);
      double w = 0.5 * sr.weights[q] * darea * val;
      for (int a = 0; a < 3; ++a) rhs[bt.v[a]] += w * lam[a];
    }
  }

  Vector r = lhs - rhs;
  // Dual (discrete H^-1) norm against a fixed flat H^1-equivalent form; the
  // residual is an H^1 functional, so the L2 dual norm would not converge.
  Geometry flat(G.dim(), BaseMetric::flat(), G.boundary());
  OperatorPair K = assemble(mesh, flat, BC::Neumann);
  SparseMat H1 = K.A + K.M;
  Eigen::SimplicialLLT<SparseMat> llt(H1);
  if (llt.info() != Eigen::Success) throw SolverError("H1 norm factorization failed");
  return std::sqrt(r.dot(llt.solve(r)));
}

}  // namespace csl
