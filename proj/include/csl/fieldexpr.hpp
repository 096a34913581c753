#ifndef CSL_FIELDEXPR_HPP
#define CSL_FIELDEXPR_HPP

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "csl/errors.hpp"

namespace csl {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Second-order jet of a scalar field at a point: value, gradient and Hessian.
// All arithmetic keeps the Hessian in symmetric storage, so hess(i,j) and
// hess(j,i) are the same double by construction.
struct Jet2 {
  double v = 0.0;
  Vec3 g = Vec3::Zero();
  // Symmetric storage: xx, yy, zz, xy, xz, yz.
  std::array<double, 6> h{{0, 0, 0, 0, 0, 0}};

  static Jet2 constant(double c) {
    Jet2 j;
    j.v = c;
    return j;
  }
  static Jet2 variable(int axis, double value);

  Mat3 hessian() const {
    Mat3 H;
    H << h[0], h[3], h[4], h[3], h[1], h[5], h[4], h[5], h[2];
    return H;
  }
  double laplacian() const { return h[0] + h[1] + h[2]; }  // trace of Hessian
};

Jet2 operator-(const Jet2& a);
Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, const Jet2& b);
Jet2 operator*(double s, const Jet2& a);
Jet2 operator+(const Jet2& a, double s);

Jet2 jet_exp(const Jet2& a);
Jet2 jet_log(const Jet2& a);
Jet2 jet_sin(const Jet2& a);
Jet2 jet_cos(const Jet2& a);
Jet2 jet_sqrt(const Jet2& a);
Jet2 jet_tanh(const Jet2& a);
Jet2 jet_pow_int(const Jet2& a, long k);     // exact repeated multiplication
Jet2 jet_pow_real(const Jet2& a, double p);  // requires a.v > 0

namespace detail {
struct ExprNode;
}

// Parsed arithmetic expression over x, y, z with named parameters.
//
// Grammar: expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)* ;
// factor := '-' factor | base ('^' factor)? ; base := number | ident |
// ident '(' expr ')' | '(' expr ')'.  Functions: exp, log, sin, cos, sqrt,
// tanh.  Precedence ^ > unary- > *,/ > +,-.  Any other identifier is a
// parameter that must be bound via with_param before evaluation.
//
// Immutable after parse; evaluation is reentrant.
class Expr {
 public:
  Expr();  // constant 0
  static Expr parse(const std::string& text);
  static Expr constant(double c);

  Expr with_param(const std::string& name, double value) const;
  std::vector<std::string> params() const;

  double value(const Vec3& p) const;
  Jet2 jet(const Vec3& p) const;
  std::string str() const;

 private:
  explicit Expr(std::shared_ptr<const detail::ExprNode> root);
  std::shared_ptr<const detail::ExprNode> root_;
};

// A scalar field on R^3 with exact second-order jets.  Value-semantic handle;
// implementations are immutable and safe to share across threads.
class ScalarField {
 public:
  ScalarField();  // zero field
  ScalarField(Expr e);  // NOLINT: implicit on purpose, exprs are fields
  static ScalarField constant(double c);
  // amplitude * (1 - (r/radius)^2)^4 inside the ball around center, exactly
  // zero outside; C^3 across the support sphere.
  static ScalarField radial_bump(const Vec3& center, double radius, double amplitude);
  static ScalarField sum(std::vector<ScalarField> terms);

  ScalarField scaled(double a) const;

  double value(const Vec3& p) const;
  Jet2 jet(const Vec3& p) const;
  bool is_zero() const;
  std::string describe() const;

  struct Impl;

 private:
  explicit ScalarField(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

}  // namespace csl

#endif
