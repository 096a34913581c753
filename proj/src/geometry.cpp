#include "csl/geometry.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace csl {

Rational conformal_coupling(int n) {
  if (n < 3) throw Error("conformal coupling requires dimension n >= 3");
  long num = n - 2, den = 4L * (n - 1);
  long g = std::gcd(num, den);
  return {num / g, den / g};
}

Rational boundary_coupling(int n) {
  if (n < 3) throw Error("boundary coupling requires dimension n >= 3");
  long num = n - 2, den = 2L * (n - 1);
  long g = std::gcd(num, den);
  return {num / g, den / g};
}

double critical_exponent(int n) {
  if (n < 3) throw Error("critical exponent requires dimension n >= 3");
  return 2.0 * n / (n - 2.0);
}

// ---------------------------------------------------------------------------
// BoundaryShape
// ---------------------------------------------------------------------------

Vec3 BoundaryShape::normal(const Vec3& p, const Vec3& fallback) const {
  switch (kind) {
    case Kind::Ball:
      return p.normalized();
    case Kind::Shell: {
      double mid = 0.5 * (r_inner + radius);
      return p.norm() < mid ? Vec3(-p.normalized()) : Vec3(p.normalized());
    }
    case Kind::Box:
    case Kind::None:
      return fallback;
  }
  return fallback;
}

double BoundaryShape::mean_curvature(const Vec3& p, int n) const {
  switch (kind) {
    case Kind::Ball:
      return (n - 1) / p.norm();
    case Kind::Shell: {
      double mid = 0.5 * (r_inner + radius);
      return p.norm() < mid ? -(n - 1) / p.norm() : (n - 1) / p.norm();
    }
    case Kind::Box:
      return 0.0;
    case Kind::None:
      throw Error("mean curvature queried on a mesh without boundary shape");
  }
  return 0.0;
}

std::string BoundaryShape::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Ball:
      os << "ball(r=" << radius << ")";
      break;
    case Kind::Box:
      os << "box";
      break;
    case Kind::Shell:
      os << "shell(" << r_inner << "," << radius << ")";
      break;
    case Kind::None:
      os << "none";
      break;
  }
  return os.str();
}

std::string BaseMetric::describe() const {
  if (euclidean && !R && !h) return "euclidean";
  std::ostringstream os;
  os << (euclidean ? "euclidean" : "g[" + g[0].str() + ";" + g[1].str() + ";" + g[2].str() +
                                       ";" + g[3].str() + ";" + g[4].str() + ";" + g[5].str() + "]");
  if (R) os << ",R=" << R->describe();
  if (h) os << ",h=" << h->describe();
  return os.str();
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

Geometry::Geometry(int n, BaseMetric base, BoundaryShape boundary)
    : n_(n), base_(std::move(base)), boundary_(boundary) {
  if (n < 3) throw Error("Geometry requires dimension n >= 3");
}

Geometry Geometry::euclidean_ball(double radius) {
  return Geometry(3, BaseMetric::flat(), BoundaryShape::ball(radius));
}
Geometry Geometry::euclidean_box() {
  return Geometry(3, BaseMetric::flat(), BoundaryShape::box());
}
Geometry Geometry::euclidean_shell(double r_inner, double radius) {
  return Geometry(3, BaseMetric::flat(), BoundaryShape::shell(r_inner, radius));
}

Geometry Geometry::pushed(const ScalarField& omega) const {
  Geometry g = *this;
  g.stack_.push_back(omega);
  return g;
}

double Geometry::omega(const Vec3& p) const {
  double s = 0;
  for (const auto& w : stack_) s += w.value(p);
  return s;
}

Jet2 Geometry::omega_jet(const Vec3& p) const {
  Jet2 s;
  for (const auto& w : stack_) s = s + w.jet(p);
  return s;
}

Mat3 Geometry::base_metric_at(const Vec3& p) const {
  if (base_.euclidean) return Mat3::Identity();
  Mat3 G;
  double xx = base_.g[0].value(p), yy = base_.g[1].value(p), zz = base_.g[2].value(p);
  double xy = base_.g[3].value(p), xz = base_.g[4].value(p), yz = base_.g[5].value(p);
  G << xx, xy, xz, xy, yy, yz, xz, yz, zz;
  return G;
}

Geometry::MetricSample Geometry::metric(const Vec3& p) const {
  MetricSample s;
  double w = omega(p);
  double e2 = std::exp(2.0 * w);
  Mat3 Gb = base_metric_at(p);
  s.g = e2 * Gb;
  Eigen::LLT<Mat3> llt(s.g);
  if (llt.info() != Eigen::Success)
    throw Error("metric is not positive definite at queried point");
  s.g_inv = s.g.inverse();
  double detb = Gb.determinant();
  if (!(detb > 0)) throw Error("base metric has nonpositive determinant");
  s.sqrt_det = std::exp(n_ * w) * std::sqrt(detb);
  return s;
}

double Geometry::base_grad_sq(const Vec3& grad, const Vec3& p) const {
  if (base_.euclidean) return grad.squaredNorm();
  Mat3 G = base_metric_at(p);
  return grad.dot(G.inverse() * grad);
}

double Geometry::base_laplace_pos(const Jet2& vjet, const Vec3& p) const {
  if (base_.euclidean) return -vjet.laplacian();
  // -g^{ij}(d2_ij v - Gamma^k_ij d_k v) from entry jets.
  std::array<Jet2, 6> gj;
  for (int i = 0; i < 6; ++i) gj[i] = base_.g[i].jet(p);
  auto entry = [&](int i, int j) -> const Jet2& {
    static const int idx[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
    return gj[idx[i][j]];
  };
  Mat3 G;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) G(i, j) = entry(i, j).v;
  Mat3 Ginv = G.inverse();
  // Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
  double gamma[3][3][3];
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int l = 0; l < 3; ++l)
          s += Ginv(k, l) * (entry(j, l).g[i] + entry(i, l).g[j] - entry(i, j).g[l]);
        gamma[k][i][j] = 0.5 * s;
      }
  Mat3 H = vjet.hessian();
  double acc = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double hij = H(i, j);
      for (int k = 0; k < 3; ++k) hij -= gamma[k][i][j] * vjet.g[k];
      acc += Ginv(i, j) * hij;
    }
  return -acc;
}

double Geometry::scalar_curvature(const Vec3& p) const {
  double Rb = base_.R ? base_.R->value(p) : 0.0;
  if (stack_.empty()) return Rb;
  Jet2 W = omega_jet(p);
  double lap_pos_omega = base_laplace_pos(W, p);     // -div grad in base metric
  double grad2 = base_grad_sq(W.g, p);
  double n = n_;
  // R_hat = e^{-2W} (R_base + 2(n-1) Lap_g W - (n-1)(n-2)|grad W|^2_g),
  // all base-metric quantities, positive Laplacian convention.
  return std::exp(-2.0 * W.v) *
         (Rb + 2.0 * (n - 1.0) * lap_pos_omega - (n - 1.0) * (n - 2.0) * grad2);
}

Vec3 Geometry::base_unit_normal(const Vec3& p, const Vec3& facet_normal) const {
  Vec3 nhat = boundary_.kind == BoundaryShape::Kind::None
                  ? facet_normal
                  : boundary_.normal(p, facet_normal);
  if (base_.euclidean) return nhat;
  // g-unit outward conormal: G^{-1} nhat normalized in g.
  Mat3 G = base_metric_at(p);
  Vec3 v = G.inverse() * nhat;
  double len = std::sqrt(v.dot(G * v));
  return v / len;
}

double Geometry::mean_curvature(const Vec3& p, const Vec3& facet_normal) const {
  double hb;
  if (base_.h) {
    hb = base_.h->value(p);
  } else {
    if (boundary_.kind == BoundaryShape::Kind::None)
      throw Error("mean curvature needs a boundary shape or a trusted h field");
    hb = boundary_.mean_curvature(p, n_);
  }
  if (stack_.empty()) return hb;
  Jet2 W = omega_jet(p);
  Vec3 nu = base_unit_normal(p, facet_normal);
  double dnu = nu.dot(W.g);
  return std::exp(-W.v) * ((n_ - 1.0) * dnu + hb);
}

double Geometry::laplace_pos(const Jet2& vjet, const Vec3& p) const {
  double base = base_laplace_pos(vjet, p);
  if (stack_.empty()) return base;
  Jet2 W = omega_jet(p);
  double cross = base_.euclidean ? W.g.dot(vjet.g) : W.g.dot(base_metric_at(p).inverse() * vjet.g);
  return std::exp(-2.0 * W.v) * (base - (n_ - 2.0) * cross);
}

double Geometry::conformal_laplacian_of(const Jet2& vjet, const Vec3& p) const {
  return laplace_pos(vjet, p) + conformal_coupling(n_).value() * scalar_curvature(p) * vjet.v;
}

double Geometry::conformal_robin_of(const Jet2& vjet, const Vec3& p,
                                    const Vec3& facet_normal) const {
  // Unit outward normal of the full metric: e^{-Omega} times the base one.
  Vec3 nu = base_unit_normal(p, facet_normal);
  double dnu = std::exp(-omega(p)) * nu.dot(vjet.g);
  return dnu + boundary_coupling(n_).value() * mean_curvature(p, facet_normal) * vjet.v;
}

std::string Geometry::describe() const {
  std::ostringstream os;
  os << "n=" << n_ << ";base=" << base_.describe() << ";bnd=" << boundary_.describe();
  for (const auto& w : stack_) os << ";push=" << w.describe();
  return os.str();
}

}  // namespace csl
