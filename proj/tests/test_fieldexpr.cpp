#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "csl/fieldexpr.hpp"
#include "oracles.hpp"

using namespace csl;

TEST_CASE("parse: basic values") {
  CHECK(Expr::parse("0").value({1.5, -2.0, 7.0}) == 0.0);
  CHECK(Expr::parse("x^2+y^2+z^2").value({1, 2, 3}) == doctest::Approx(14.0).epsilon(1e-15));
  CHECK(Expr::parse("-2*exp(-50*((x-0.3)^2+y^2+z^2))").value({0.3, 0, 0}) ==
        doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("parse: precedence and associativity") {
  // ^ binds tighter than unary minus
  CHECK(Expr::parse("-x^2").value({3, 0, 0}) == doctest::Approx(-9.0));
  CHECK(Expr::parse("2-3-4").value({0, 0, 0}) == doctest::Approx(-5.0));
  CHECK(Expr::parse("12/2/3").value({0, 0, 0}) == doctest::Approx(2.0));
  CHECK(Expr::parse("2*3+4").value({0, 0, 0}) == doctest::Approx(10.0));
  CHECK(Expr::parse("2+3*4").value({0, 0, 0}) == doctest::Approx(14.0));
  CHECK(Expr::parse("2^3^2").value({0, 0, 0}) == doctest::Approx(512.0));  // right assoc
  CHECK(Expr::parse("2*x^3").value({2, 0, 0}) == doctest::Approx(16.0));
  CHECK(Expr::parse("1e2+1.5e-2").value({0, 0, 0}) == doctest::Approx(100.015));
}

TEST_CASE("parse: errors carry byte offsets") {
  CHECK_THROWS_AS(Expr::parse("x +* y"), ParseError);
  CHECK_THROWS_AS(Expr::parse("foo(x)"), ParseError);           // unknown function
  CHECK_THROWS_AS(Expr::parse("exp(x, y)"), ParseError);        // arity
  CHECK_THROWS_AS(Expr::parse("exp"), ParseError);              // missing args
  CHECK_THROWS_AS(Expr::parse("(x+y"), ParseError);
  CHECK_THROWS_AS(Expr::parse("x+y)"), ParseError);
  try {
    Expr::parse("x + !y");
  } catch (const ParseError& e) {
    CHECK(e.offset == 4);
  }
}

TEST_CASE("parameters bind before evaluation") {
  Expr e = Expr::parse("a*x + b");
  CHECK_THROWS_AS(e.value({1, 0, 0}), DomainEvalError);
  Expr bound = e.with_param("a", 2.0).with_param("b", -1.0);
  CHECK(bound.value({3, 0, 0}) == doctest::Approx(5.0));
  CHECK(e.params().size() == 2);
  CHECK(bound.params().empty());
}

TEST_CASE("domain errors, not NaN") {
  CHECK_THROWS_AS(Expr::parse("log(x)").value({-1, 0, 0}), DomainEvalError);
  CHECK_THROWS_AS(Expr::parse("log(x)").value({0, 0, 0}), DomainEvalError);
  CHECK_THROWS_AS(Expr::parse("sqrt(x)").value({-2, 0, 0}), DomainEvalError);
  CHECK_THROWS_AS(Expr::parse("1/x").value({0, 0, 0}), DomainEvalError);
  CHECK_THROWS_AS(Expr::parse("x^0.5").value({-1, 0, 0}), DomainEvalError);
  // integer exponents are fine on negative bases
  CHECK(Expr::parse("x^3").value({-2, 0, 0}) == doctest::Approx(-8.0));
  CHECK(Expr::parse("x^(-2)").value({2, 0, 0}) == doctest::Approx(0.25));
}

TEST_CASE("jet: linear and quadratic fields") {
  Jet2 j = Expr::parse("x").jet({4.5, 1, 2});
  CHECK(j.v == doctest::Approx(4.5));
  CHECK(j.g[0] == doctest::Approx(1.0));
  CHECK(j.g[1] == 0.0);
  CHECK(j.hessian().norm() == 0.0);

  Jet2 q = Expr::parse("x^2+y^2+z^2").jet({1, 0, 0});
  CHECK(q.v == doctest::Approx(1.0));
  CHECK(q.g[0] == doctest::Approx(2.0));
  CHECK(q.g[1] == doctest::Approx(0.0));
  CHECK((q.hessian() - 2 * Mat3::Identity()).norm() == doctest::Approx(0.0));
}

TEST_CASE("jet: Gaussian bump matches finite differences") {
  Expr e = Expr::parse("-2*exp(-50*((x-0.3)^2+y^2+z^2))");
  auto f = [&](const Vec3& p) { return e.value(p); };
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-0.1, 0.6);
  for (int i = 0; i < 20; ++i) {
    Vec3 p(U(rng), U(rng), U(rng));
    Jet2 j = e.jet(p);
    Vec3 fd = oracles::fd_gradient(f, p, 1e-5);
    CHECK((fd - j.g).norm() <= 1e-6 * (1 + j.g.norm()));
  }
}

namespace {

// Random guarded expression trees: every log/sqrt argument is kept positive
// by construction, so the whole tree is smooth near the sample box.
std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> C(-2.0, 2.0);
  auto leaf = [&]() {
    switch (pick(rng) % 4) {
      case 0:
        return std::string("x");
      case 1:
        return std::string("y");
      case 2:
        return std::string("z");
      default: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", C(rng));
        return std::string(buf);
      }
    }
  };
  if (depth == 0) return leaf();
  std::string a = random_expr(rng, depth - 1);
  std::string b = random_expr(rng, depth - 1);
  switch (pick(rng)) {
    case 0:
      return "(" + a + "+" + b + ")";
    case 1:
      return "(" + a + "-" + b + ")";
    case 2:
      return "(" + a + ")*(" + b + ")";
    case 3:
      return "(" + a + ")/(4.5+sin(" + b + "))";
    case 4:
      return "sin(" + a + ")";
    case 5:
      return "cos(" + a + ")";
    case 6:
      return "tanh(" + a + ")";
    case 7:
      return "exp(0.3*(" + a + "))";
    case 8:
      return "sqrt(1.25+sin(" + a + "))";
    default:
      return "log(2.5+cos(" + a + "))";
  }
}

}  // namespace

TEST_CASE("property: AD jets match finite differences on random expressions") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  int points_checked = 0;
  for (int t = 0; t < 25; ++t) {
    Expr e = Expr::parse(random_expr(rng, 3));
    auto f = [&](const Vec3& p) { return e.value(p); };
    for (int i = 0; i < 4; ++i) {
      Vec3 p(U(rng), U(rng), U(rng));
      Jet2 j = e.jet(p);
      Vec3 fd_g = oracles::fd_gradient(f, p, 1e-5);
      CHECK((fd_g - j.g).norm() <= 1e-6 * (1 + j.g.norm()));
      Mat3 fd_h = oracles::fd_hessian(f, p, 1e-4);
      CHECK((fd_h - j.hessian()).norm() <= 1e-4 * (1 + j.hessian().norm()));
      ++points_checked;
    }
  }
  CHECK(points_checked == 100);
}

TEST_CASE("property: print/parse round trip at value level") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    Expr e = Expr::parse(random_expr(rng, 3));
    Expr back = Expr::parse(e.str());
    for (int i = 0; i < 5; ++i) {
      Vec3 p(U(rng), U(rng), U(rng));
      CHECK(back.value(p) == doctest::Approx(e.value(p)).epsilon(1e-14));
    }
  }
}

TEST_CASE("hessian is exactly symmetric by storage") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Expr e = Expr::parse("exp(0.5*x*y)*sin(z)*(x-2*y+0.25*z^3)");
  for (int i = 0; i < 10; ++i) {
    Vec3 p(U(rng), U(rng), U(rng));
    Mat3 H = e.jet(p).hessian();
    CHECK(H(0, 1) == H(1, 0));
    CHECK(H(0, 2) == H(2, 0));
    CHECK(H(1, 2) == H(2, 1));
  }
}

TEST_CASE("radial bump field: support, smoothness, jets") {
  Vec3 c(0.2, -0.1, 0.0);
  ScalarField b = ScalarField::radial_bump(c, 0.5, -3.0);
  CHECK(b.value(c) == doctest::Approx(-3.0));
  CHECK(b.value(c + Vec3(0.51, 0, 0)) == 0.0);
  CHECK(b.value(c + Vec3(10, 0, 0)) == 0.0);
  CHECK(b.jet(c + Vec3(0.6, 0, 0)).g.norm() == 0.0);

  auto f = [&](const Vec3& p) { return b.value(p); };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-0.45, 0.45);
  for (int i = 0; i < 30; ++i) {
    Vec3 p = c + Vec3(U(rng), U(rng), U(rng));
    Jet2 j = b.jet(p);
    CHECK((oracles::fd_gradient(f, p, 1e-6) - j.g).norm() <= 1e-5 * (1 + j.g.norm()));
    CHECK((oracles::fd_hessian(f, p, 1e-4) - j.hessian()).norm() <=
          2e-4 * (1 + j.hessian().norm()));
  }
}

TEST_CASE("field sums and scaling") {
  ScalarField a = Expr::parse("x*y");
  ScalarField s = ScalarField::sum({a, ScalarField::constant(2.0), a.scaled(-0.5)});
  Vec3 p(3, 4, 0);
  CHECK(s.value(p) == doctest::Approx(12.0 - 6.0 + 2.0));
  CHECK(s.jet(p).g[0] == doctest::Approx(4.0 - 2.0));
}
