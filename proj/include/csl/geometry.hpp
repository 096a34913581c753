#ifndef CSL_GEOMETRY_HPP
#define CSL_GEOMETRY_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "csl/fieldexpr.hpp"

namespace csl {

// Reduced fraction; the dimension couplings are exact rationals.
struct Rational {
  long num = 0;
  long den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

// (n-2)/(4(n-1)), the coupling in front of the scalar curvature. n >= 3.
Rational conformal_coupling(int n);
// (n-2)/(2(n-1)), the coupling in front of the mean curvature. n >= 3.
Rational boundary_coupling(int n);
// 2n/(n-2), the critical Sobolev exponent.
double critical_exponent(int n);

// Implicit description of the boundary the mesh approximates.  Supplies the
// Euclidean outward normal and the flat-space mean curvature at boundary
// points: sphere of radius r -> (n-1)/r, flat face -> 0, inner shell
// boundary -> -(n-1)/r.
struct BoundaryShape {
  enum class Kind { None, Ball, Box, Shell };
  Kind kind = Kind::None;
  double radius = 1.0;    // ball / shell outer radius
  double r_inner = 0.5;   // shell only

  static BoundaryShape none() { return {}; }
  static BoundaryShape ball(double radius = 1.0) {
    return {Kind::Ball, radius, 0.0};
  }
  static BoundaryShape box() { return {Kind::Box, 1.0, 0.0}; }
  static BoundaryShape shell(double r_inner, double radius = 1.0) {
    return {Kind::Shell, radius, r_inner};
  }

  // Outward Euclidean unit normal at a boundary point; `fallback` is the
  // mesh facet normal, used when the shape gives no analytic answer.
  Vec3 normal(const Vec3& p, const Vec3& fallback) const;
  double mean_curvature(const Vec3& p, int n) const;
  std::string describe() const;
};

// Base metric: Euclidean by default, or trusted user-supplied fields.  The
// metric entries are exprs so their derivatives (for Christoffel symbols)
// are available; R and h are taken at face value.
struct BaseMetric {
  bool euclidean = true;
  // Symmetric storage xx, yy, zz, xy, xz, yz when not Euclidean.
  std::array<Expr, 6> g{};
  std::optional<ScalarField> R;  // defaults to 0 (flat)
  std::optional<ScalarField> h;  // defaults to the boundary shape's value

  static BaseMetric flat() { return {}; }
  std::string describe() const;
};

// Riemannian data of the computational domain: a base metric with an ordered
// stack of conformal factors on top.  The served metric is e^{2*Omega} g_base
// with Omega the sum of the stack.  Immutable; queries are reentrant.
class Geometry {
 public:
  Geometry(int n, BaseMetric base, BoundaryShape boundary);
  static Geometry euclidean_ball(double radius = 1.0);
  static Geometry euclidean_box();
  static Geometry euclidean_shell(double r_inner, double radius = 1.0);

  int dim() const { return n_; }
  const BoundaryShape& boundary() const { return boundary_; }
  const BaseMetric& base() const { return base_; }
  const std::vector<ScalarField>& stack() const { return stack_; }

  Geometry pushed(const ScalarField& omega) const;

  double omega(const Vec3& p) const;       // composed conformal factor
  Jet2 omega_jet(const Vec3& p) const;

  struct MetricSample {
    Mat3 g;          // metric tensor
    Mat3 g_inv;
    double sqrt_det; // volume density
  };
  MetricSample metric(const Vec3& p) const;

  double scalar_curvature(const Vec3& p) const;

  // Mean curvature of the deformed boundary w.r.t. the outward normal;
  // `facet_normal` supplies the discrete normal when the shape has none.
  double mean_curvature(const Vec3& p, const Vec3& facet_normal) const;

  // Base-metric outward unit normal (used by the transformation law and by
  // pointwise boundary operators).
  Vec3 base_unit_normal(const Vec3& p, const Vec3& facet_normal) const;

  // Positive Laplacian (-div grad) of a smooth field given its Euclidean jet.
  double laplace_pos(const Jet2& vjet, const Vec3& p) const;
  // Pointwise conformal Laplacian: laplace_pos(v) + c_n R v.
  double conformal_laplacian_of(const Jet2& vjet, const Vec3& p) const;
  // Pointwise conformal Robin operator: d_nu v + 2 c_n h v (nu is the unit
  // outward normal of this geometry's metric).
  double conformal_robin_of(const Jet2& vjet, const Vec3& p, const Vec3& facet_normal) const;

  std::string describe() const;

 private:
  int n_;
  BaseMetric base_;
  BoundaryShape boundary_;
  std::vector<ScalarField> stack_;

  Mat3 base_metric_at(const Vec3& p) const;
  // Positive Laplace-Beltrami of the *base* metric from entry jets.
  double base_laplace_pos(const Jet2& vjet, const Vec3& p) const;
  double base_grad_sq(const Vec3& grad, const Vec3& p) const;  // |grad|^2 in base metric
};

}  // namespace csl

#endif
