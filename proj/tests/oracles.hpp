// Independent oracles used by the tests: finite differences for jets,
// separation of variables for the cube, radial shooting for the ball.
#ifndef CSL_TESTS_ORACLES_HPP
#define CSL_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "csl/fieldexpr.hpp"

namespace oracles {

using csl::Vec3;

// Central finite-difference gradient of a scalar callable.
inline Vec3 fd_gradient(const std::function<double(const Vec3&)>& f, const Vec3& p,
                        double step) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e[i] = step;
    g[i] = (f(p + e) - f(p - e)) / (2 * step);
  }
  return g;
}

inline Eigen::Matrix3d fd_hessian(const std::function<double(const Vec3&)>& f, const Vec3& p,
                                  double step) {
  Eigen::Matrix3d H;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Vec3 ei = Vec3::Zero(), ej = Vec3::Zero();
      ei[i] = step;
      ej[j] = step;
      H(i, j) = (f(p + ei + ej) - f(p + ei - ej) - f(p - ei + ej) + f(p - ei - ej)) /
                (4 * step * step);
    }
  return H;
}

// Dirichlet eigenvalues of the unit cube for the positive Laplacian:
// pi^2 (k^2 + l^2 + m^2), k,l,m >= 1, ascending.
inline std::vector<double> cube_dirichlet_eigenvalues(int count) {
  std::vector<double> vals;
  const double pi = std::acos(-1.0);
  for (int k = 1; k <= 6; ++k)
    for (int l = 1; l <= 6; ++l)
      for (int m = 1; m <= 6; ++m) vals.push_back(pi * pi * (k * k + l * l + m * m));
  std::sort(vals.begin(), vals.end());
  vals.resize(count);
  return vals;
}

// Neumann eigenvalues of the unit cube (k,l,m >= 0).
inline std::vector<double> cube_neumann_eigenvalues(int count) {
  std::vector<double> vals;
  const double pi = std::acos(-1.0);
  for (int k = 0; k <= 6; ++k)
    for (int l = 0; l <= 6; ++l)
      for (int m = 0; m <= 6; ++m) vals.push_back(pi * pi * (k * k + l * l + m * m));
  std::sort(vals.begin(), vals.end());
  vals.resize(count);
  return vals;
}

// Lowest radial eigenvalue of the positive Laplacian on the unit ball with
// the boundary condition u'(1) + beta u(1) = 0, by RK4 shooting on
// u'' + (2/r) u' + lambda u = 0 and bisection on lambda.
inline double ball_radial_eigenvalue(double beta, double lam_lo = 0.05, double lam_hi = 30.0) {
  auto boundary_misfit = [&](double lam) {
    const int n_steps = 4000;
    const double r0 = 1e-6;
    double u = 1.0 - lam * r0 * r0 / 6.0;
    double v = -lam * r0 / 3.0;  // u'
    double h = (1.0 - r0) / n_steps;
    double r = r0;
    auto rhs = [&](double rr, double uu, double vv, double& du, double& dv) {
      du = vv;
      dv = -2.0 / rr * vv - lam * uu;
    };
    for (int i = 0; i < n_steps; ++i) {
      double k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v;
      rhs(r, u, v, k1u, k1v);
      rhs(r + h / 2, u + h / 2 * k1u, v + h / 2 * k1v, k2u, k2v);
      rhs(r + h / 2, u + h / 2 * k2u, v + h / 2 * k2v, k3u, k3v);
      rhs(r + h, u + h * k3u, v + h * k3v, k4u, k4v);
      u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
      v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
      r += h;
    }
    return v + beta * u;
  };
  double flo = boundary_misfit(lam_lo), fhi = boundary_misfit(lam_hi);
  // March lam_hi down until the bracket holds the first root.
  while (!(flo * fhi < 0) && lam_hi - lam_lo > 1e-8) {
    lam_hi = 0.5 * (lam_lo + lam_hi);
    fhi = boundary_misfit(lam_hi);
  }
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lam_lo + lam_hi);
    double fm = boundary_misfit(mid);
    if (flo * fm <= 0) {
      lam_hi = mid;
      fhi = fm;
    } else {
      lam_lo = mid;
      flo = fm;
    }
    if (lam_hi - lam_lo < 1e-12) break;
  }
  return 0.5 * (lam_lo + lam_hi);
}

}  // namespace oracles

#endif
