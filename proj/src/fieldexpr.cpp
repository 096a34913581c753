#include "csl/fieldexpr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <utility>

namespace csl {

// ---------------------------------------------------------------------------
// Jet2 arithmetic
// ---------------------------------------------------------------------------

Jet2 Jet2::variable(int axis, double value) {
  Jet2 j;
  j.v = value;
  j.g[axis] = 1.0;
  return j;
}

namespace {

inline std::array<double, 6> outer_sym(const Vec3& a, const Vec3& b) {
  // symmetric part a b^T + b a^T stored as (xx,yy,zz,xy,xz,yz)
  return {2 * a[0] * b[0], 2 * a[1] * b[1], 2 * a[2] * b[2],
          a[0] * b[1] + a[1] * b[0], a[0] * b[2] + a[2] * b[0],
          a[1] * b[2] + a[2] * b[1]};
}

// f(u) given f(u.v), f'(u.v), f''(u.v)
inline Jet2 chain(const Jet2& u, double f, double fp, double fpp) {
  Jet2 r;
  r.v = f;
  r.g = fp * u.g;
  auto gg = outer_sym(u.g, u.g);
  for (int i = 0; i < 6; ++i) r.h[i] = fp * u.h[i] + 0.5 * fpp * gg[i];
  return r;
}

}  // namespace

Jet2 operator-(const Jet2& a) {
  Jet2 r;
  r.v = -a.v;
  r.g = -a.g;
  for (int i = 0; i < 6; ++i) r.h[i] = -a.h[i];
  return r;
}

Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  for (int i = 0; i < 6; ++i) r.h[i] = a.h[i] + b.h[i];
  return r;
}

Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v - b.v;
  r.g = a.g - b.g;
  for (int i = 0; i < 6; ++i) r.h[i] = a.h[i] - b.h[i];
  return r;
}

Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  auto cross = outer_sym(a.g, b.g);
  for (int i = 0; i < 6; ++i) r.h[i] = a.v * b.h[i] + b.v * a.h[i] + cross[i];
  return r;
}

Jet2 operator/(const Jet2& a, const Jet2& b) {
  if (b.v == 0.0) throw DomainEvalError("division by zero");
  // a * (1/b)
  double inv = 1.0 / b.v;
  Jet2 rb = chain(b, inv, -inv * inv, 2.0 * inv * inv * inv);
  return a * rb;
}

Jet2 operator*(double s, const Jet2& a) {
  Jet2 r;
  r.v = s * a.v;
  r.g = s * a.g;
  for (int i = 0; i < 6; ++i) r.h[i] = s * a.h[i];
  return r;
}

Jet2 operator+(const Jet2& a, double s) {
  Jet2 r = a;
  r.v += s;
  return r;
}

Jet2 jet_exp(const Jet2& a) {
  double e = std::exp(a.v);
  return chain(a, e, e, e);
}

Jet2 jet_log(const Jet2& a) {
  if (!(a.v > 0.0)) throw DomainEvalError("log of nonpositive argument");
  double inv = 1.0 / a.v;
  return chain(a, std::log(a.v), inv, -inv * inv);
}

Jet2 jet_sin(const Jet2& a) {
  double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, s, c, -s);
}

Jet2 jet_cos(const Jet2& a) {
  double s = std::sin(a.v), c = std::cos(a.v);
  return chain(a, c, -s, -c);
}

Jet2 jet_sqrt(const Jet2& a) {
  if (!(a.v > 0.0)) throw DomainEvalError("sqrt of nonpositive argument");
  double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}

Jet2 jet_tanh(const Jet2& a) {
  double t = std::tanh(a.v);
  double sech2 = 1.0 - t * t;
  return chain(a, t, sech2, -2.0 * t * sech2);
}

Jet2 jet_pow_int(const Jet2& a, long k) {
  if (k == 0) return Jet2::constant(1.0);
  bool inv = k < 0;
  long n = inv ? -k : k;
  Jet2 r = a;
  for (long i = 1; i < n; ++i) r = r * a;
  if (inv) return Jet2::constant(1.0) / r;
  return r;
}

Jet2 jet_pow_real(const Jet2& a, double p) {
  if (!(a.v > 0.0))
    throw DomainEvalError("power with non-integer exponent requires positive base");
  double f = std::pow(a.v, p);
  return chain(a, f, p * f / a.v, p * (p - 1.0) * f / (a.v * a.v));
}

// ---------------------------------------------------------------------------
// Expression tree
// ---------------------------------------------------------------------------

namespace detail {

enum class Op {
  Const,
  Var,   // axis 0,1,2
  Param,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,   // integer_exponent set when rhs folds to an integer
  Exp,
  Log,
  Sin,
  Cos,
  Sqrt,
  Tanh,
};

struct ExprNode {
  Op op = Op::Const;
  double cval = 0.0;
  int axis = 0;
  std::string name;
  bool integer_exponent = false;
  long exponent = 0;
  std::shared_ptr<const ExprNode> a, b;
};

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_const(double c) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Const;
  n->cval = c;
  return n;
}

Jet2 eval_node(const ExprNode& n, const Vec3& p) {
  switch (n.op) {
    case Op::Const:
      return Jet2::constant(n.cval);
    case Op::Var:
      return Jet2::variable(n.axis, p[n.axis]);
    case Op::Param:
      throw DomainEvalError("unbound parameter '" + n.name + "'");
    case Op::Neg:
      return -eval_node(*n.a, p);
    case Op::Add:
      return eval_node(*n.a, p) + eval_node(*n.b, p);
    case Op::Sub:
      return eval_node(*n.a, p) - eval_node(*n.b, p);
    case Op::Mul:
      return eval_node(*n.a, p) * eval_node(*n.b, p);
    case Op::Div:
      return eval_node(*n.a, p) / eval_node(*n.b, p);
    case Op::Pow: {
      Jet2 base = eval_node(*n.a, p);
      if (n.integer_exponent) return jet_pow_int(base, n.exponent);
      Jet2 expo = eval_node(*n.b, p);
      if (expo.g.isZero(0.0) && Mat3(expo.hessian()).isZero(0.0))
        return jet_pow_real(base, expo.v);
      // exponent depends on position: u^w = exp(w log u)
      return jet_exp(expo * jet_log(base));
    }
    case Op::Exp:
      return jet_exp(eval_node(*n.a, p));
    case Op::Log:
      return jet_log(eval_node(*n.a, p));
    case Op::Sin:
      return jet_sin(eval_node(*n.a, p));
    case Op::Cos:
      return jet_cos(eval_node(*n.a, p));
    case Op::Sqrt:
      return jet_sqrt(eval_node(*n.a, p));
    case Op::Tanh:
      return jet_tanh(eval_node(*n.a, p));
  }
  throw Error("unreachable expression op");
}

double eval_value(const ExprNode& n, const Vec3& p) {
  switch (n.op) {
    case Op::Const:
      return n.cval;
    case Op::Var:
      return p[n.axis];
    case Op::Param:
      throw DomainEvalError("unbound parameter '" + n.name + "'");
    case Op::Neg:
      return -eval_value(*n.a, p);
    case Op::Add:
      return eval_value(*n.a, p) + eval_value(*n.b, p);
    case Op::Sub:
      return eval_value(*n.a, p) - eval_value(*n.b, p);
    case Op::Mul:
      return eval_value(*n.a, p) * eval_value(*n.b, p);
    case Op::Div: {
      double d = eval_value(*n.b, p);
      if (d == 0.0) throw DomainEvalError("division by zero");
      return eval_value(*n.a, p) / d;
    }
    case Op::Pow: {
      double base = eval_value(*n.a, p);
      if (n.integer_exponent) {
        long k = n.exponent;
        bool inv = k < 0;
        if (inv) k = -k;
        double r = 1.0;
        for (long i = 0; i < k; ++i) r *= base;
        if (inv) {
          if (r == 0.0) throw DomainEvalError("division by zero");
          return 1.0 / r;
        }
        return r;
      }
      double e = eval_value(*n.b, p);
      if (!(base > 0.0))
        throw DomainEvalError("power with non-integer exponent requires positive base");
      return std::pow(base, e);
    }
    case Op::Exp:
      return std::exp(eval_value(*n.a, p));
    case Op::Log: {
      double v = eval_value(*n.a, p);
      if (!(v > 0.0)) throw DomainEvalError("log of nonpositive argument");
      return std::log(v);
    }
    case Op::Sin:
      return std::sin(eval_value(*n.a, p));
    case Op::Cos:
      return std::cos(eval_value(*n.a, p));
    case Op::Sqrt: {
      double v = eval_value(*n.a, p);
      if (!(v > 0.0)) throw DomainEvalError("sqrt of nonpositive argument");
      return std::sqrt(v);
    }
    case Op::Tanh:
      return std::tanh(eval_value(*n.a, p));
  }
  throw Error("unreachable expression op");
}

NodePtr substitute(const NodePtr& n, const std::string& name, double value) {
  if (n->op == Op::Param && n->name == name) return make_const(value);
  if (!n->a && !n->b) return n;
  auto c = std::make_shared<ExprNode>(*n);
  if (n->a) c->a = substitute(n->a, name, value);
  if (n->b) c->b = substitute(n->b, name, value);
  return c;
}

void collect_params(const ExprNode& n, std::vector<std::string>& out) {
  if (n.op == Op::Param) {
    for (const auto& s : out)
      if (s == n.name) return;
    out.push_back(n.name);
  }
  if (n.a) collect_params(*n.a, out);
  if (n.b) collect_params(*n.b, out);
}

int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    default:
      return 5;
  }
}

void print_node(const ExprNode& n, std::ostream& os, int parent_prec) {
  int prec = precedence(n.op);
  bool parens = prec < parent_prec;
  if (parens) os << '(';
  switch (n.op) {
    case Op::Const: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", n.cval);
      if (n.cval < 0) {
        os << '(' << buf << ')';
      } else {
        os << buf;
      }
      break;
    }
    case Op::Var:
      os << "xyz"[n.axis];
      break;
    case Op::Param:
      os << n.name;
      break;
    case Op::Neg:
      os << '-';
      print_node(*n.a, os, prec + 1);
      break;
    case Op::Add:
      print_node(*n.a, os, prec);
      os << '+';
      print_node(*n.b, os, prec + 1);
      break;
    case Op::Sub:
      print_node(*n.a, os, prec);
      os << '-';
      print_node(*n.b, os, prec + 1);
      break;
    case Op::Mul:
      print_node(*n.a, os, prec);
      os << '*';
      print_node(*n.b, os, prec + 1);
      break;
    case Op::Div:
      print_node(*n.a, os, prec);
      os << '/';
      print_node(*n.b, os, prec + 1);
      break;
    case Op::Pow:
      print_node(*n.a, os, prec + 1);
      os << '^';
      if (n.integer_exponent) {
        if (n.exponent < 0)
          os << '(' << n.exponent << ')';
        else
          os << n.exponent;
      } else {
        print_node(*n.b, os, prec);
      }
      break;
    case Op::Exp:
    case Op::Log:
    case Op::Sin:
    case Op::Cos:
    case Op::Sqrt:
    case Op::Tanh: {
      const char* name = n.op == Op::Exp    ? "exp"
                         : n.op == Op::Log  ? "log"
                         : n.op == Op::Sin  ? "sin"
                         : n.op == Op::Cos  ? "cos"
                         : n.op == Op::Sqrt ? "sqrt"
                                            : "tanh";
      os << name << '(';
      print_node(*n.a, os, 0);
      os << ')';
      break;
    }
  }
  if (parens) os << ')';
}

// --------------------------- parser ---------------------------------------

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (eat('+')) {
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Add;
        n->a = lhs;
        n->b = parse_term();
        lhs = n;
      } else if (eat('-')) {
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Sub;
        n->a = lhs;
        n->b = parse_term();
        lhs = n;
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (eat('*')) {
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Mul;
        n->a = lhs;
        n->b = parse_factor();
        lhs = n;
      } else if (eat('/')) {
        auto n = std::make_shared<ExprNode>();
        n->op = Op::Div;
        n->a = lhs;
        n->b = parse_factor();
        lhs = n;
      } else {
        return lhs;
      }
    }
  }

  // '^' binds tighter than unary minus: -x^2 is -(x^2).
  NodePtr parse_factor() {
    if (eat('-')) {
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Neg;
      n->a = parse_factor();
      return n;
    }
    NodePtr base = parse_base();
    if (eat('^')) {
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Pow;
      n->a = base;
      n->b = parse_factor();  // right associative
      // Fold constant integral exponents so they evaluate by repeated
      // multiplication (exact, and defined for negative bases).
      const ExprNode* e = n->b.get();
      double sign = 1.0;
      while (e->op == Op::Neg) {
        sign = -sign;
        e = e->a.get();
      }
      if (e->op == Op::Const) {
        double val = sign * e->cval;
        double r = std::round(val);
        if (val == r && std::abs(r) <= 64) {
          n->integer_exponent = true;
          n->exponent = static_cast<long>(r);
        }
      }
      return n;
    }
    return base;
  }

  NodePtr parse_base() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.'))
      ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' was an identifier start, not an exponent
      }
    }
    std::string tok = s_.substr(start, pos_ - start);
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw ParseError("malformed number '" + tok + "'", start);
    return make_const(v);
  }

  NodePtr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string name = s_.substr(start, pos_ - start);
    skip_ws();
    bool call = pos_ < s_.size() && s_[pos_] == '(';
    static const std::map<std::string, Op> kFunctions = {
        {"exp", Op::Exp}, {"log", Op::Log},   {"sin", Op::Sin},
        {"cos", Op::Cos}, {"sqrt", Op::Sqrt}, {"tanh", Op::Tanh}};
    auto fit = kFunctions.find(name);
    if (call) {
      if (fit == kFunctions.end()) throw ParseError("unknown function '" + name + "'", start);
      ++pos_;  // '('
      NodePtr arg = parse_expr();
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ',')
        throw ParseError("function '" + name + "' takes exactly one argument", pos_);
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      auto n = std::make_shared<ExprNode>();
      n->op = fit->second;
      n->a = arg;
      return n;
    }
    if (fit != kFunctions.end())
      throw ParseError("function '" + name + "' requires an argument list", start);
    if (name == "x" || name == "y" || name == "z") {
      auto n = std::make_shared<ExprNode>();
      n->op = Op::Var;
      n->axis = name == "x" ? 0 : name == "y" ? 1 : 2;
      return n;
    }
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Param;
    n->name = name;
    return n;
  }
};

}  // namespace detail

Expr::Expr() : root_(detail::make_const(0.0)) {}
Expr::Expr(std::shared_ptr<const detail::ExprNode> root) : root_(std::move(root)) {}

Expr Expr::parse(const std::string& text) { return Expr(detail::Parser(text).run()); }

Expr Expr::constant(double c) { return Expr(detail::make_const(c)); }

Expr Expr::with_param(const std::string& name, double value) const {
  return Expr(detail::substitute(root_, name, value));
}

std::vector<std::string> Expr::params() const {
  std::vector<std::string> out;
  detail::collect_params(*root_, out);
  return out;
}

double Expr::value(const Vec3& p) const { return detail::eval_value(*root_, p); }

Jet2 Expr::jet(const Vec3& p) const { return detail::eval_node(*root_, p); }

std::string Expr::str() const {
  std::ostringstream os;
  detail::print_node(*root_, os, 0);
  return os.str();
}

// ---------------------------------------------------------------------------
// ScalarField
// ---------------------------------------------------------------------------

struct ScalarField::Impl {
  virtual ~Impl() = default;
  virtual double value(const Vec3& p) const = 0;
  virtual Jet2 jet(const Vec3& p) const = 0;
  virtual bool is_zero() const { return false; }
  virtual std::string describe() const = 0;
};

namespace {

struct ZeroField final : ScalarField::Impl {
  double value(const Vec3&) const override { return 0.0; }
  Jet2 jet(const Vec3&) const override { return Jet2{}; }
  bool is_zero() const override { return true; }
  std::string describe() const override { return "0"; }
};

struct ConstField final : ScalarField::Impl {
  double c;
  explicit ConstField(double c) : c(c) {}
  double value(const Vec3&) const override { return c; }
  Jet2 jet(const Vec3&) const override { return Jet2::constant(c); }
  bool is_zero() const override { return c == 0.0; }
  std::string describe() const override { return "const(" + std::to_string(c) + ")"; }
};

struct ExprFieldImpl final : ScalarField::Impl {
  Expr e;
  explicit ExprFieldImpl(Expr e) : e(std::move(e)) {}
  double value(const Vec3& p) const override { return e.value(p); }
  Jet2 jet(const Vec3& p) const override { return e.jet(p); }
  std::string describe() const override { return "expr(" + e.str() + ")"; }
};

// amplitude * (1 - q)^4 with q = |p-c|^2 / radius^2, clamped to zero outside.
struct BumpField final : ScalarField::Impl {
  Vec3 c;
  double radius, amplitude;
  BumpField(const Vec3& c, double radius, double amplitude)
      : c(c), radius(radius), amplitude(amplitude) {
    if (!(radius > 0.0)) throw Error("radial_bump requires positive radius");
  }
  double value(const Vec3& p) const override {
    double q = (p - c).squaredNorm() / (radius * radius);
    if (q >= 1.0) return 0.0;
    double w = 1.0 - q;
    double w2 = w * w;
    return amplitude * w2 * w2;
  }
  Jet2 jet(const Vec3& p) const override {
    Jet2 r;
    Vec3 d = p - c;
    double q = d.squaredNorm() / (radius * radius);
    if (q >= 1.0) return r;
    double w = 1.0 - q;
    double w2 = w * w;
    double f = amplitude * w2 * w2;          // a w^4
    double fq = -4.0 * amplitude * w2 * w;   // d/dq
    double fqq = 12.0 * amplitude * w2;      // d2/dq2
    Vec3 qg = 2.0 * d / (radius * radius);   // grad q
    double qh = 2.0 / (radius * radius);     // hess q = qh * I
    r.v = f;
    r.g = fq * qg;
    auto gg = outer_sym(qg, qg);
    for (int i = 0; i < 6; ++i) r.h[i] = 0.5 * fqq * gg[i];
    r.h[0] += fq * qh;
    r.h[1] += fq * qh;
    r.h[2] += fq * qh;
    return r;
  }
  std::string describe() const override {
    std::ostringstream os;
    os << "bump(c=[" << c[0] << ',' << c[1] << ',' << c[2] << "],r=" << radius
       << ",a=" << amplitude << ")";
    return os.str();
  }
};

struct ScaledField final : ScalarField::Impl {
  std::shared_ptr<const ScalarField::Impl> base;
  double a;
  ScaledField(std::shared_ptr<const ScalarField::Impl> base, double a)
      : base(std::move(base)), a(a) {}
  double value(const Vec3& p) const override { return a * base->value(p); }
  Jet2 jet(const Vec3& p) const override { return a * base->jet(p); }
  bool is_zero() const override { return a == 0.0 || base->is_zero(); }
  std::string describe() const override {
    return std::to_string(a) + "*" + base->describe();
  }
};

struct SumField final : ScalarField::Impl {
  std::vector<ScalarField> terms;
  explicit SumField(std::vector<ScalarField> t) : terms(std::move(t)) {}
  double value(const Vec3& p) const override {
    double s = 0;
    for (const auto& t : terms) s += t.value(p);
    return s;
  }
  Jet2 jet(const Vec3& p) const override {
    Jet2 s;
    for (const auto& t : terms) s = s + t.jet(p);
    return s;
  }
  std::string describe() const override {
    std::string s = "sum(";
    for (std::size_t i = 0; i < terms.size(); ++i) {
      if (i) s += "+";
      s += terms[i].describe();
    }
    return s + ")";
  }
};

}  // namespace

ScalarField::ScalarField() : impl_(std::make_shared<ZeroField>()) {}
ScalarField::ScalarField(Expr e) : impl_(std::make_shared<ExprFieldImpl>(std::move(e))) {}
ScalarField::ScalarField(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

ScalarField ScalarField::constant(double c) {
  return ScalarField(std::make_shared<ConstField>(c));
}

ScalarField ScalarField::radial_bump(const Vec3& center, double radius, double amplitude) {
  return ScalarField(std::make_shared<BumpField>(center, radius, amplitude));
}

ScalarField ScalarField::sum(std::vector<ScalarField> terms) {
  return ScalarField(std::make_shared<SumField>(std::move(terms)));
}

ScalarField ScalarField::scaled(double a) const {
  return ScalarField(std::make_shared<ScaledField>(impl_, a));
}

double ScalarField::value(const Vec3& p) const { return impl_->value(p); }
Jet2 ScalarField::jet(const Vec3& p) const { return impl_->jet(p); }
bool ScalarField::is_zero() const { return impl_->is_zero(); }
std::string ScalarField::describe() const { return impl_->describe(); }

}  // namespace csl
