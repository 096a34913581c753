#include "csl/nodal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "csl/errors.hpp"

namespace csl {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

Vec3 edge_cut(const Vec3& a, const Vec3& b, double ua, double ub) {
  double t = ua / (ua - ub);  // ua and ub have opposite (weak) signs
  return a + t * (b - a);
}

// Sub-simplices of { x in tet : u(x) > 0 } for the P1 interpolant with the
// given vertex values; each sub-tet carries the interpolated u at its
// corners (cut corners carry exactly 0).
struct SubTet {
  std::array<Vec3, 4> c;
  std::array<double, 4> u;
};

void clip_tet_positive(const std::array<Vec3, 4>& x, const std::array<double, 4>& w,
                       std::vector<SubTet>& out) {
  int pos[4], neg[4];
  int np = 0, nn = 0;
  for (int i = 0; i < 4; ++i) {
    if (w[i] > 0)
      pos[np++] = i;
    else
      neg[nn++] = i;
  }
  auto cut = [&](int i, int j) { return edge_cut(x[i], x[j], w[i], w[j]); };
  switch (np) {
    case 0:
      return;
    case 4:
      out.push_back({{x[0], x[1], x[2], x[3]}, {w[0], w[1], w[2], w[3]}});
      return;
    case 1: {
      int i = pos[0];
      out.push_back({{x[i], cut(i, neg[0]), cut(i, neg[1]), cut(i, neg[2])},
                     {w[i], 0, 0, 0}});
      return;
    }
    case 3: {
      // prism between the positive face and the cut triangle
      int l = neg[0];
      int i = pos[0], j = pos[1], k = pos[2];
      Vec3 ci = cut(i, l), cj = cut(j, l), ck = cut(k, l);
      out.push_back({{x[i], x[j], x[k], ci}, {w[i], w[j], w[k], 0}});
      out.push_back({{x[j], x[k], ci, cj}, {w[j], w[k], 0, 0}});
      out.push_back({{x[k], ci, cj, ck}, {w[k], 0, 0, 0}});
      return;
    }
    case 2: {
      // wedge: positive edge (i,j) against negative edge (k,l)
      int i = pos[0], j = pos[1], k = neg[0], l = neg[1];
      Vec3 cik = cut(i, k), cil = cut(i, l), cjk = cut(j, k), cjl = cut(j, l);
      out.push_back({{x[i], cik, cil, x[j]}, {w[i], 0, 0, w[j]}});
      out.push_back({{cik, cil, x[j], cjk}, {0, 0, w[j], 0}});
      out.push_back({{cil, x[j], cjk, cjl}, {0, w[j], 0, 0}});
      return;
    }
  }
}

struct SubTri {
  std::array<Vec3, 3> c;
  std::array<double, 3> u;
};

void clip_tri_positive(const std::array<Vec3, 3>& x, const std::array<double, 3>& w,
                       std::vector<SubTri>& out) {
  int pos[3], neg[3];
  int np = 0, nn = 0;
  for (int i = 0; i < 3; ++i) {
    if (w[i] > 0)
      pos[np++] = i;
    else
      neg[nn++] = i;
  }
  auto cut = [&](int i, int j) { return edge_cut(x[i], x[j], w[i], w[j]); };
  switch (np) {
    case 0:
      return;
    case 3:
      out.push_back({{x[0], x[1], x[2]}, {w[0], w[1], w[2]}});
      return;
    case 1: {
      int i = pos[0];
      out.push_back({{x[i], cut(i, neg[0]), cut(i, neg[1])}, {w[i], 0, 0}});
      return;
    }
    case 2: {
      int i = pos[0], j = pos[1], k = neg[0];
      Vec3 cik = cut(i, k), cjk = cut(j, k);
      out.push_back({{x[i], x[j], cik}, {w[i], w[j], 0}});
      out.push_back({{x[j], cjk, cik}, {w[j], 0, 0}});
      return;
    }
  }
}

double tri_area(const std::array<Vec3, 3>& c) {
  return 0.5 * (c[1] - c[0]).cross(c[2] - c[0]).norm();
}

// Metric surface integral of fn over a flat triangle given by corners.
double metric_tri_integral(const Geometry& G, const std::array<Vec3, 3>& c,
                           const std::function<double(const Vec3&)>& fn) {
  const TriRule& rule = tri_rule_order4();
  Vec3 e1 = c[1] - c[0], e2 = c[2] - c[0];
  double total = 0;
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const auto& lam = rule.points[q];
    Vec3 p = lam[0] * c[0] + lam[1] * c[1] + lam[2] * c[2];
    auto ms = G.metric(p);
    double g11 = e1.dot(ms.g * e1), g12 = e1.dot(ms.g * e2), g22 = e2.dot(ms.g * e2);
    double darea = std::sqrt(std::max(g11 * g22 - g12 * g12, 0.0));
    total += 0.5 * rule.weights[q] * darea * fn(p);
  }
  return total;
}

}  // namespace

NodalDecomposition decompose(const Mesh& mesh, const Vector& u, double tau_rel) {
  const int nv = mesh.num_vertices();
  if (u.size() != nv) throw Error("decompose: one value per mesh vertex required");
  double umax = u.cwiseAbs().maxCoeff();
  if (umax == 0.0) throw Error("decompose: u is identically zero");

  NodalDecomposition d;
  d.u = u;
  d.tau_u = tau_rel * umax;
  d.vertex_sign.assign(nv, 0);
  for (int v = 0; v < nv; ++v)
    if (std::abs(u[v]) > d.tau_u) d.vertex_sign[v] = u[v] > 0 ? 1 : -1;

  UnionFind uf(nv);
  for (int v = 0; v < nv; ++v) {
    if (d.vertex_sign[v] == 0) continue;
    for (int e = mesh.adj_offsets[v]; e < mesh.adj_offsets[v + 1]; ++e) {
      int w = mesh.adj[e];
      if (d.vertex_sign[w] == d.vertex_sign[v]) uf.unite(v, w);
    }
  }

  // Canonical domain order: by smallest contained vertex index.
  std::map<int, int> root_to_domain;
  d.domain_of.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (d.vertex_sign[v] == 0) continue;
    int r = uf.find(v);
    auto [it, fresh] = root_to_domain.try_emplace(r, static_cast<int>(root_to_domain.size()));
    if (fresh) {
      d.domains.emplace_back();
      d.domains.back().sign = d.vertex_sign[v];
    }
    d.domain_of[v] = it->second;
    d.domains[it->second].vertices.push_back(v);
  }

  // Tet membership and interface pieces.
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const auto& T = mesh.tets[t];
    int plus_dom = -1, minus_dom = -1;
    bool has_pos = false, has_neg = false;
    for (int a = 0; a < 4; ++a) {
      int v = T[a];
      if (u[v] > 0) has_pos = true;
      if (u[v] < 0) has_neg = true;
      if (d.domain_of[v] >= 0) {
        if (d.vertex_sign[v] > 0)
          plus_dom = d.domain_of[v];
        else
          minus_dom = d.domain_of[v];
      }
    }
    if (plus_dom >= 0) d.domains[plus_dom].tets.push_back(t);
    if (minus_dom >= 0 && minus_dom != plus_dom) d.domains[minus_dom].tets.push_back(t);

    if (has_pos && has_neg) {
      std::array<Vec3, 4> x;
      std::array<double, 4> w;
      for (int a = 0; a < 4; ++a) {
        x[a] = mesh.vertices[T[a]];
        w[a] = u[T[a]];
      }
      int pos[4], neg[4];
      int np = 0, nn = 0;
      for (int a = 0; a < 4; ++a) {
        if (w[a] > 0)
          pos[np++] = a;
        else
          neg[nn++] = a;
      }
      auto cut = [&](int i, int j) { return edge_cut(x[i], x[j], w[i], w[j]); };
      auto emit = [&](const Vec3& a, const Vec3& b, const Vec3& c) {
        NodalDecomposition::InterfacePiece piece;
        piece.tet = t;
        piece.corners = {a, b, c};
        piece.plus_domain = plus_dom;
        piece.minus_domain = minus_dom;
        d.interface.push_back(piece);
      };
      if (np == 1) {
        emit(cut(pos[0], neg[0]), cut(pos[0], neg[1]), cut(pos[0], neg[2]));
      } else if (np == 3) {
        emit(cut(pos[0], neg[0]), cut(pos[1], neg[0]), cut(pos[2], neg[0]));
      } else if (np == 2) {
        // cyclic quad (i-k, j-k, j-l, i-l) split along a diagonal
        Vec3 cik = cut(pos[0], neg[0]), cjk = cut(pos[1], neg[0]);
        Vec3 cjl = cut(pos[1], neg[1]), cil = cut(pos[0], neg[1]);
        emit(cik, cjk, cjl);
        emit(cik, cjl, cil);
      }
    }
  }
  return d;
}

double integrate_domain(const Mesh& mesh, const Geometry& G,
                        const NodalDecomposition& d, int domain,
                        const std::function<double(const Vec3&, double)>& fn) {
  if (domain < 0 || domain >= d.domain_count()) throw Error("integrate_domain: bad domain");
  const auto& dom = d.domains[domain];
  const double sign = dom.sign;
  const TetRule& rule = tet_rule_order5();
  double total = 0;
  std::vector<SubTet> subs;
  for (int t : dom.tets) {
    const auto& T = mesh.tets[t];
    std::array<Vec3, 4> x;
    std::array<double, 4> w;
    for (int a = 0; a < 4; ++a) {
      x[a] = mesh.vertices[T[a]];
      w[a] = sign * d.u[T[a]];
    }
    subs.clear();
    clip_tet_positive(x, w, subs);
    for (const auto& s : subs) {
      Mat3 E;
      for (int c = 0; c < 3; ++c) E.col(c) = s.c[c + 1] - s.c[0];
      double vol = std::abs(E.determinant()) / 6.0;
      if (vol == 0.0) continue;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const auto& lam = rule.points[q];
        Vec3 p = lam[0] * s.c[0] + lam[1] * s.c[1] + lam[2] * s.c[2] + lam[3] * s.c[3];
        double uval =
            sign * (lam[0] * s.u[0] + lam[1] * s.u[1] + lam[2] * s.u[2] + lam[3] * s.u[3]);
        total += rule.weights[q] * vol * G.metric(p).sqrt_det * fn(p, uval);
      }
    }
  }
  return total;
}

double integrate_domain_boundary(
    const Mesh& mesh, const Geometry& G, const NodalDecomposition& d, int domain,
    const std::function<double(const Vec3&, double, const Vec3&)>& fn) {
  if (domain < 0 || domain >= d.domain_count()) throw Error("integrate_domain_boundary: bad domain");
  const double sign = d.domains[domain].sign;
  const TriRule& rule = tri_rule_order4();
  double total = 0;
  std::vector<SubTri> subs;
  for (const auto& bt : mesh.boundary) {
    // only triangles touching this domain
    bool touches = false;
    for (int v : bt.v)
      if (d.domain_of[v] == domain) touches = true;
    if (!touches) continue;
    std::array<Vec3, 3> x;
    std::array<double, 3> w;
    for (int a = 0; a < 3; ++a) {
      x[a] = mesh.vertices[bt.v[a]];
      w[a] = sign * d.u[bt.v[a]];
    }
    subs.clear();
    clip_tri_positive(x, w, subs);
    for (const auto& s : subs) {
      Vec3 e1 = s.c[1] - s.c[0], e2 = s.c[2] - s.c[0];
      if (tri_area(s.c) == 0.0) continue;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const auto& lam = rule.points[q];
        Vec3 p = lam[0] * s.c[0] + lam[1] * s.c[1] + lam[2] * s.c[2];
        double uval = sign * (lam[0] * s.u[0] + lam[1] * s.u[1] + lam[2] * s.u[2]);
        auto ms = G.metric(p);
        double g11 = e1.dot(ms.g * e1), g12 = e1.dot(ms.g * e2), g22 = e2.dot(ms.g * e2);
        double darea = std::sqrt(std::max(g11 * g22 - g12 * g12, 0.0));
        total += 0.5 * rule.weights[q] * darea * fn(p, uval, bt.normal);
      }
    }
  }
  return total;
}

double integrate_domain_interface(const Mesh& mesh, const Geometry& G,
                                  const NodalDecomposition& d, int domain,
                                  const std::function<double(const Vec3&)>& fn) {
  if (domain < 0 || domain >= d.domain_count()) throw Error("integrate_domain_interface: bad domain");
  double total = 0;
  for (const auto& piece : d.interface) {
    if (piece.plus_domain != domain && piece.minus_domain != domain) continue;
    if (tri_area(piece.corners) == 0.0) continue;
    // |grad u|_g from the owning tet at the piece centroid
    Vec3 grad = p1_gradient(mesh, d.u, piece.tet);
    Vec3 centroid = (piece.corners[0] + piece.corners[1] + piece.corners[2]) / 3.0;
    auto ms = G.metric(centroid);
    double gnorm = std::sqrt(grad.dot(ms.g_inv * grad));
    total += metric_tri_integral(G, piece.corners, [&](const Vec3& p) { return gnorm * fn(p); });
  }
  return total;
}

double prescription_residual(const Mesh& mesh, const Geometry& G, const Vector& u,
                             const OperatorPair& robin0, double tau_rel) {
  double tau = tau_rel * robin0.norm_scale();
  double rq = std::abs(rayleigh_quotient(robin0, u));
  if (rq > 10 * tau)
    throw Error("prescription_residual: u is not a near-kernel vector (|RQ| = " +
                std::to_string(rq) + " > 10 tau = " + std::to_string(10 * tau) + ")");
  const double cn = conformal_coupling(G.dim()).value();
  double interior = integrate_interior(mesh, G, [&](int t, const Vec3& p) {
    return G.scalar_curvature(p) * p1_value(mesh, u, t, p);
  });
  double boundary = integrate_boundary(mesh, G, [&](int b, const Vec3& p) {
    const auto& bt = mesh.boundary[b];
    return G.mean_curvature(p, bt.normal) * p1_value(mesh, u, bt.owner_tet, p);
  });
  return cn * interior + 2 * cn * boundary;
}

double nodal_identity_residual(const Mesh& mesh, const Geometry& G,
                               const NodalDecomposition& d, int domain,
                               const ScalarField& v) {
  double term_interior = integrate_domain(mesh, G, d, domain, [&](const Vec3& p, double uval) {
    return std::abs(uval) * G.conformal_laplacian_of(v.jet(p), p);
  });
  double term_interface =
      integrate_domain_interface(mesh, G, d, domain, [&](const Vec3& p) { return v.value(p); });
  double term_boundary = integrate_domain_boundary(
      mesh, G, d, domain, [&](const Vec3& p, double uval, const Vec3& nrm) {
        return std::abs(uval) * G.conformal_robin_of(v.jet(p), p, nrm);
      });
  return term_interior + term_interface + term_boundary;
}

ObstructionResult obstruction_check(const Mesh& mesh, const Geometry& G,
                                    const ScalarField& omega, const NodalDecomposition& d,
                                    int domain, double margin_factor) {
  const int n = G.dim();
  const double cn = conformal_coupling(n).value();
  Geometry Ghat = G.pushed(omega);

  double interior = integrate_domain(mesh, G, d, domain, [&](const Vec3& p, double uval) {
    double wi = cn * std::exp((0.5 * n + 1.0) * omega.value(p));
    return Ghat.scalar_curvature(p) * std::abs(uval) * wi;
  });
  double bnd_printed = 0, bnd_alt = 0, absmass = 0;
  bnd_printed = integrate_domain_boundary(
      mesh, G, d, domain, [&](const Vec3& p, double uval, const Vec3& nrm) {
        double wb = 2 * cn * std::exp(0.5 * (n + 1.0) * omega.value(p));
        return Ghat.mean_curvature(p, nrm) * std::abs(uval) * wb;
      });
  bnd_alt = integrate_domain_boundary(
      mesh, G, d, domain, [&](const Vec3& p, double uval, const Vec3& nrm) {
        double wb = 2 * cn * std::exp(0.5 * n * omega.value(p));
        return Ghat.mean_curvature(p, nrm) * std::abs(uval) * wb;
      });
  absmass = integrate_domain(mesh, G, d, domain, [&](const Vec3& p, double uval) {
    double wi = cn * std::exp((0.5 * n + 1.0) * omega.value(p));
    return std::abs(Ghat.scalar_curvature(p)) * std::abs(uval) * wi;
  });
  absmass += integrate_domain_boundary(
      mesh, G, d, domain, [&](const Vec3& p, double uval, const Vec3& nrm) {
        double wb = 2 * cn * std::exp(0.5 * (n + 1.0) * omega.value(p));
        return std::abs(Ghat.mean_curvature(p, nrm)) * std::abs(uval) * wb;
      });

  ObstructionResult out;
  out.lhs = interior + bnd_printed;
  out.lhs_alt = interior + bnd_alt;
  out.margin = margin_factor * mesh.h_max * absmass;
  out.strictly_negative = out.lhs < -out.margin;
  return out;
}

FluxInvariant boundary_flux_invariant(const Mesh& mesh, const Geometry& G,
                                      const ScalarField& omega,
                                      const NodalDecomposition& d, int domain) {
  const int n = G.dim();
  const double cn = conformal_coupling(n).value();
  const double mu = 0.5 * n - 1.0;

  FluxInvariant out;
  out.rhs = integrate_domain(mesh, G, d, domain,
                             [&](const Vec3& p, double uval) {
                               return cn * G.scalar_curvature(p) * std::abs(uval);
                             }) +
            integrate_domain_boundary(mesh, G, d, domain,
                                      [&](const Vec3& p, double uval, const Vec3& nrm) {
                                        return 2 * cn * G.mean_curvature(p, nrm) *
                                               std::abs(uval);
                                      });

  // Transported kernel in the pushed metric; signs are unchanged, so the
  // domain indexing carries over.
  Geometry Ghat = G.pushed(omega);
  Vector uhat(d.u.size());
  for (int v = 0; v < d.u.size(); ++v)
    uhat[v] = std::exp(-mu * omega.value(mesh.vertices[v])) * d.u[v];
  NodalDecomposition dhat = decompose(mesh, uhat);
  if (dhat.domain_count() != d.domain_count())
    throw Error("boundary_flux_invariant: transported kernel changed the domain count");
  out.lhs = -integrate_domain_interface(mesh, Ghat, dhat, domain, [&](const Vec3& p) {
    return std::exp((1.0 - 0.5 * n) * omega.value(p));
  });
  return out;
}

double lp_density(const Mesh& mesh, const Geometry& G, const NodalDecomposition& d,
                  int domain) {
  const double p_exp = critical_exponent(G.dim());
  if (domain < 0) {
    return integrate_interior(mesh, G, [&](int t, const Vec3& p) {
      return std::pow(std::abs(p1_value(mesh, d.u, t, p)), p_exp);
    });
  }
  return integrate_domain(mesh, G, d, domain, [&](const Vec3&, double uval) {
    return std::pow(std::abs(uval), p_exp);
  });
}

bool boundary_nodal_limit_check(const Mesh& mesh, const NodalDecomposition& d) {
  // point-to-triangle distance
  auto dist_tri = [](const Vec3& p, const std::array<Vec3, 3>& c) {
    Vec3 e0 = c[1] - c[0], e1 = c[2] - c[0], w = p - c[0];
    double a = e0.dot(e0), b = e0.dot(e1), cc = e1.dot(e1), dd = e0.dot(w), e = e1.dot(w);
    double det = a * cc - b * b;
    double s = det > 0 ? (cc * dd - b * e) / det : 0.0;
    double t = det > 0 ? (a * e - b * dd) / det : 0.0;
    if (s < 0) s = 0;
    if (t < 0) t = 0;
    if (s + t > 1) {
      double sum = s + t;
      s /= sum;
      t /= sum;
    }
    // clamped point is approximate for edge regions; refine by projecting on
    // each edge and taking the minimum
    Vec3 q = c[0] + s * e0 + t * e1;
    double best = (p - q).norm();
    for (int i = 0; i < 3; ++i) {
      Vec3 A = c[i], B = c[(i + 1) % 3];
      Vec3 ab = B - A;
      double tt = std::clamp(ab.dot(p - A) / ab.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (p - (A + tt * ab)).norm());
    }
    return best;
  };

  // Interior zero-class vertices are part of the discrete zero set as well
  // (a mesh-aligned nodal plane produces no strictly-crossing tets).
  std::vector<int> interior_zeros;
  for (int v : mesh.interior_vertices)
    if (std::abs(d.u[v]) <= d.tau_u) interior_zeros.push_back(v);

  for (int v : mesh.boundary_vertices) {
    if (std::abs(d.u[v]) > d.tau_u) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& piece : d.interface)
      best = std::min(best, dist_tri(mesh.vertices[v], piece.corners));
    for (int w : interior_zeros)
      best = std::min(best, (mesh.vertices[v] - mesh.vertices[w]).norm());
    if (best > 2.0 * mesh.h_max) return false;
  }
  return true;
}

void write_nodal_vtk(const Mesh& mesh, const NodalDecomposition& d, std::ostream& out) {
  std::vector<double> uvals(d.u.data(), d.u.data() + d.u.size());
  std::vector<double> cell(mesh.num_tets(), -1.0);
  for (int t = 0; t < mesh.num_tets(); ++t) {
    int counts_best = 0;
    for (int a = 0; a < 4; ++a) {
      int dom = d.domain_of[mesh.tets[t][a]];
      if (dom < 0) continue;
      int c = 0;
      for (int b = 0; b < 4; ++b)
        if (d.domain_of[mesh.tets[t][b]] == dom) ++c;
      if (c > counts_best) {
        counts_best = c;
        cell[t] = dom;
      }
    }
  }
  write_vtk(mesh, out, {{"u", uvals}}, {{"domain", cell}});
}

}  // namespace csl
