#include "csl/lab.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>

#include "csl/errors.hpp"

namespace csl {

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::AmbiguousTau:
      return "ambiguous-tau";
  }
  return "?";
}

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

ScalarField random_omega(std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Expr e = Expr::parse("a1*x + a2*y + a3*z + a4*sin(x + 2*y) + a5*cos(3*z) + a6*x*y");
  for (const char* name : {"a1", "a2", "a3", "a4", "a5", "a6"})
    e = e.with_param(name, amp * U(rng));
  return ScalarField(e);
}

Expr random_test_expr(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Expr e = Expr::parse("b0 + b1*x + b2*y + b3*z + b4*x*y + b5*sin(2*z) + b6*x^2");
  e = e.with_param("b0", 1.0 + 0.5 * U(rng));
  for (const char* name : {"b1", "b2", "b3", "b4", "b5", "b6"})
    e = e.with_param(name, U(rng));
  return e;
}

ScalarField random_test_field(std::mt19937_64& rng) {
  return ScalarField(random_test_expr(rng));
}

// Expands a Dirichlet-DOF vector to a full vertex vector (zero trace).
Vector expand_to_vertices(const Mesh& mesh, const OperatorPair& P, const Vector& x) {
  Vector full = Vector::Zero(mesh.num_vertices());
  for (int i = 0; i < static_cast<int>(P.dof_to_vertex.size()); ++i)
    full[P.dof_to_vertex[i]] = x[i];
  return full;
}

}  // namespace

void ExperimentReport::finish() {
  bool all = true;
  for (const auto& a : assertions) all = all && a.pass;
  if (verdict != Verdict::AmbiguousTau) verdict = all ? Verdict::Pass : Verdict::Fail;
  config_hash = [&] {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a(name + config.dump() + std::to_string(seed))));
    return std::string(hex);
  }();
}

Json ExperimentReport::to_json(bool include_runtime) const {
  Json j;
  j["experiment"] = name;
  j["seed"] = seed;
  j["config"] = config;
  j["config_hash"] = config_hash;
  j["measurements"] = measurements;
  Json as = Json::array();
  for (const auto& a : assertions)
    as.push_back({{"name", a.name}, {"pass", a.pass}, {"details", a.details}});
  j["assertions"] = as;
  j["verdict"] = verdict_name(verdict);
  j["runtime_seconds"] = include_runtime ? Json(runtime_seconds) : Json(nullptr);
  return j;
}

void write_reports_csv(const std::vector<ExperimentReport>& reports, std::ostream& out) {
  out << "experiment,seed,assertion,pass,details\n";
  for (const auto& r : reports)
    for (const auto& a : r.assertions) {
      std::string d = a.details;
      for (auto& c : d)
        if (c == ',' || c == '\n') c = ';';
      out << r.name << ',' << r.seed << ',' << a.name << ',' << (a.pass ? 1 : 0) << ',' << d
          << "\n";
    }
}

Geometry well_geometry(double K, const Vec3& center, double radius) {
  BaseMetric bm;
  bm.R = ScalarField::radial_bump(center, radius, -K);
  return Geometry(3, bm, BoundaryShape::ball());
}

std::pair<double, double> find_bracket(const Mesh& mesh,
                                       const std::function<Geometry(double)>& family,
                                       int k, BC bc, double hi_start, double hi_cap) {
  auto lambda_k = [&](double t) {
    OperatorPair P = assemble(mesh, family(t), bc);
    return eigs(P, k).eigenvalues[k - 1];
  };
  double lo = 0.0;
  double f_lo = lambda_k(lo);
  double hi = hi_start;
  for (;;) {
    double f_hi = lambda_k(hi);
    if ((f_lo > 0) != (f_hi > 0)) return {lo, hi};
    lo = hi;
    f_lo = f_hi;
    hi *= 2;
    if (hi > hi_cap)
      throw Error("find_bracket: no sign change up to t = " + std::to_string(hi_cap));
  }
}

namespace {

std::mutex g_tuned_mutex;
std::map<std::tuple<int, int, int>, TunedInstance> g_tuned_cache;

}  // namespace

TunedInstance make_tuned_instance(int level, int k, BC bc,
                                  std::optional<std::pair<double, double>> bracket) {
  {
    std::lock_guard<std::mutex> lock(g_tuned_mutex);
    auto it = g_tuned_cache.find({level, k, static_cast<int>(bc)});
    if (it != g_tuned_cache.end()) return it->second;
  }
  TunedInstance inst;
  inst.level = level;
  inst.k = k;
  inst.mesh = make_ball(level);
  auto family = [](double K) { return well_geometry(K); };
  auto br = bracket ? *bracket : find_bracket(inst.mesh, family, k, bc);
  TuneResult t = bc == BC::Robin
                     ? tune_to_kernel(inst.mesh, family, k, br.first, br.second)
                     : tune_to_dirichlet_kernel(inst.mesh, family, k, br.first, br.second);
  inst.K_star = t.t_star;
  inst.G = family(t.t_star);
  if (bc == BC::Robin) {
    inst.u = t.kernel_vec;
  } else {
    OperatorPair PD = assemble(inst.mesh, inst.G, BC::Dirichlet);
    inst.u = expand_to_vertices(inst.mesh, PD, t.kernel_vec);
  }
  {
    std::lock_guard<std::mutex> lock(g_tuned_mutex);
    g_tuned_cache.insert({{level, k, static_cast<int>(bc)}, inst});
  }
  return inst;
}

// ---------------------------------------------------------------------------
// experiment: multibump
// ---------------------------------------------------------------------------

ExperimentReport experiment_multibump(int m, double depth, int level, unsigned seed) {
  Stopwatch clock;
  if (m < 1) throw Error("experiment_multibump: m >= 1 required");
  const double rho = 0.3 / std::cbrt(static_cast<double>(m));
  if (depth <= 0) depth = 600.0 / (rho * rho);

  std::vector<Vec3> centers;
  switch (m) {
    case 1:
      centers = {{0, 0, 0}};
      break;
    case 2:
      centers = {{0.45, 0, 0}, {-0.45, 0, 0}};
      break;
    case 3:
      for (int i = 0; i < 3; ++i) {
        double a = 2 * std::acos(-1.0) * i / 3;
        centers.push_back({0.5 * std::cos(a), 0.5 * std::sin(a), 0});
      }
      break;
    case 4: {
      double s = 0.45 / std::sqrt(3.0);
      centers = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
      break;
    }
    default:
      throw Error("experiment_multibump: m up to 4 supported");
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (centers[i].norm() + rho > 0.95)
      throw Error("experiment_multibump: bump support leaves the interior");
    for (std::size_t j = i + 1; j < centers.size(); ++j)
      if ((centers[i] - centers[j]).norm() < 2 * rho)
        throw Error("experiment_multibump: bump supports overlap");
  }

  Mesh mesh = make_ball(level);
  std::vector<ScalarField> bumps;
  for (const auto& c : centers) bumps.push_back(ScalarField::radial_bump(c, rho, -depth));
  BaseMetric bm;
  bm.R = ScalarField::sum(bumps);
  Geometry G(3, bm, BoundaryShape::ball());
  OperatorPair P = assemble(mesh, G, BC::Robin, 0.0);

  ExperimentReport rep;
  rep.name = "multibump";
  rep.seed = seed;
  rep.config = {{"m", m}, {"depth", depth}, {"rho", rho}, {"level", level}};

  Json quotients = Json::array();
  bool all_negative = true;
  for (const auto& c : centers) {
    Vector up(mesh.num_vertices());
    ScalarField bump = ScalarField::radial_bump(c, rho, 1.0);
    for (int v = 0; v < mesh.num_vertices(); ++v) up[v] = bump.value(mesh.vertices[v]);
    if (up.cwiseAbs().maxCoeff() == 0.0)
      throw Error("experiment_multibump: bump unresolved at this level");
    double rq = rayleigh_quotient(P, up);
    quotients.push_back(rq);
    all_negative = all_negative && rq < 0;
  }
  rep.measurements["per_bump_rayleigh"] = quotients;
  rep.assertions.push_back(
      {"per_bump_rayleigh_negative", all_negative, quotients.dump()});

  Inertia in = negative_inertia(P);
  rep.measurements["negative_count"] = in.n_neg_strict;
  rep.assertions.push_back({"negative_count_at_least_m", in.n_neg_strict >= m,
                            "N = " + std::to_string(in.n_neg_strict)});

  if (!all_negative) rep.verdict = Verdict::AmbiguousTau;  // depth too small
  rep.runtime_seconds = clock.seconds();
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// experiment: generic kernel breaking
// ---------------------------------------------------------------------------

ExperimentReport experiment_generic_perturbation(int trials, double t_amp, int level,
                                                 unsigned seed) {
  Stopwatch clock;
  TunedInstance inst = make_tuned_instance(level, 1, BC::Robin);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> Urho(0.2, 0.35);

  ExperimentReport rep;
  rep.name = "generic-perturbation";
  rep.seed = seed;
  rep.config = {{"trials", trials}, {"t", t_amp}, {"level", level}, {"K_star", inst.K_star}};

  auto kernel_dim = [&](const ScalarField& extra) -> int {
    BaseMetric bm;
    bm.R = ScalarField::sum(
        {ScalarField::radial_bump({0.15, 0.07, 0.03}, 0.7, -inst.K_star), extra});
    Geometry G(3, bm, BoundaryShape::ball());
    OperatorPair P = assemble(inst.mesh, G, BC::Robin, 0.0);
    return static_cast<int>(kernel_of(P).cols());
  };

  int base_dim = kernel_dim(ScalarField());
  rep.measurements["unperturbed_kernel_dim"] = base_dim;
  rep.assertions.push_back({"t_zero_keeps_kernel", base_dim == 1,
                            "dim = " + std::to_string(base_dim)});

  int broken = 0, ambiguous = 0;
  Json trials_json = Json::array();
  for (int trial = 0; trial < trials; ++trial) {
    Vec3 c;
    do {
      c = Vec3(0.45 * U(rng), 0.45 * U(rng), 0.45 * U(rng));
    } while (c.norm() > 0.45);
    double rho = Urho(rng);
    bool both_break = true;
    bool this_ambiguous = false;
    for (double s : {+1.0, -1.0}) {
      try {
        int dim = kernel_dim(ScalarField::radial_bump(c, rho, s * t_amp));
        both_break = both_break && dim == 0;
      } catch (const TauAmbiguityError&) {
        this_ambiguous = true;
        both_break = false;
      }
    }
    broken += both_break ? 1 : 0;
    ambiguous += this_ambiguous ? 1 : 0;
    trials_json.push_back({{"center", {c[0], c[1], c[2]}},
                           {"rho", rho},
                           {"distance_from_well", (c - Vec3(0.15, 0.07, 0.03)).norm()},
                           {"broken_both_signs", both_break}});
  }
  rep.measurements["trials"] = trials_json;
  rep.measurements["broken_fraction"] = static_cast<double>(broken) / trials;
  rep.measurements["ambiguous_trials"] = ambiguous;
  rep.assertions.push_back({"at_least_90_percent_break",
                            broken * 10 >= trials * 9,
                            std::to_string(broken) + "/" + std::to_string(trials)});
  rep.runtime_seconds = clock.seconds();
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// experiment: Friedlander counting identity
// ---------------------------------------------------------------------------

ExperimentReport experiment_friedlander(int level, unsigned seed) {
  Stopwatch clock;
  ExperimentReport rep;
  rep.name = "friedlander";
  rep.seed = seed;
  rep.config = {{"level", level}};

  Mesh ball = make_ball(level);
  Mesh cube = make_box(2 << level);
  Mesh shell = make_shell(level, 0.5);

  TunedInstance robin_tuned = make_tuned_instance(level, 1, BC::Robin);
  TunedInstance dirichlet_tuned = make_tuned_instance(level, 1, BC::Dirichlet);
  const double K1 = robin_tuned.K_star;

  const double rho1 = 0.3, rho4 = 0.3 / std::cbrt(4.0);
  BaseMetric bump1;
  bump1.R = ScalarField::radial_bump({0, 0, 0}, rho1, -600.0 / (rho1 * rho1));
  double s4 = 0.45 / std::sqrt(3.0);
  BaseMetric bump4;
  bump4.R = ScalarField::sum({
      ScalarField::radial_bump({s4, s4, s4}, rho4, -600.0 / (rho4 * rho4)),
      ScalarField::radial_bump({s4, -s4, -s4}, rho4, -600.0 / (rho4 * rho4)),
      ScalarField::radial_bump({-s4, s4, -s4}, rho4, -600.0 / (rho4 * rho4)),
      ScalarField::radial_bump({-s4, -s4, s4}, rho4, -600.0 / (rho4 * rho4)),
  });

  struct Case {
    std::string name;
    const Mesh* mesh;
    Geometry G;
    int min_NR = -1;
    int expect_ker = -1;
  };
  std::vector<Case> cases;
  cases.push_back({"flat-ball", &ball, Geometry::euclidean_ball(), 0, 0});
  cases.push_back({"flat-cube", &cube, Geometry::euclidean_box(), 0, 0});
  cases.push_back({"flat-shell", &shell, Geometry::euclidean_shell(0.5), 0, 0});
  cases.push_back({"ball-const-push", &ball,
                   Geometry::euclidean_ball().pushed(ScalarField::constant(0.3)), 0, 0});
  cases.push_back({"ball-expr-push", &ball,
                   Geometry::euclidean_ball().pushed(Expr::parse("0.2*x + 0.1*y^2")), 0, 0});
  cases.push_back({"well-subcritical", &ball, well_geometry(0.8 * K1), 0, 0});
  cases.push_back({"well-one-negative", &ball, well_geometry(1.5 * K1), 1, 0});
  cases.push_back({"well-deep", &ball, well_geometry(3.0 * K1), 1, -1});
  cases.push_back({"well-pushed", &ball,
                   well_geometry(1.5 * K1).pushed(ScalarField::constant(0.25)), 1, 0});
  cases.push_back({"multibump-1", &ball, Geometry(3, bump1, BoundaryShape::ball()), 1, 0});
  cases.push_back({"multibump-4", &ball, Geometry(3, bump4, BoundaryShape::ball()), 4, 0});
  cases.push_back({"dirichlet-degenerate", &ball, well_geometry(dirichlet_tuned.K_star),
                   -1, 1});

  Json table = Json::array();
  bool all_hold = true;
  bool expectations = true;
  bool saw_degenerate = false;
  for (const auto& c : cases) {
    FriedlanderCounts fc = friedlander_counts(*c.mesh, c.G);
    all_hold = all_hold && fc.identity_holds;
    if (c.min_NR >= 0 && fc.N_R < c.min_NR) expectations = false;
    if (c.expect_ker >= 0 && fc.dim_ker_D != c.expect_ker) expectations = false;
    saw_degenerate = saw_degenerate || fc.degenerate_branch;
    table.push_back({{"case", c.name},
                     {"N_R", fc.N_R},
                     {"N_D", fc.N_D},
                     {"dim_ker_D", fc.dim_ker_D},
                     {"N_neg_steklov", fc.N_neg_steklov},
                     {"identity_holds", fc.identity_holds},
                     {"degenerate_branch", fc.degenerate_branch},
                     {"tau", fc.tau}});
  }
  rep.measurements["cases"] = table;
  rep.assertions.push_back({"identity_exact_on_all_cases", all_hold, ""});
  rep.assertions.push_back({"expected_counts", expectations, ""});
  rep.assertions.push_back({"degenerate_branch_exercised", saw_degenerate, ""});

  // Robin-curve monotonicity on a 10-point grid.
  std::vector<double> sgrid;
  for (int i = 0; i < 10; ++i) sgrid.push_back(0.35 * i);
  RobinFamily fam = robin_family(ball, Geometry::euclidean_ball(), sgrid, 2);
  bool monotone = true;
  for (int curve = 0; curve < 2; ++curve)
    for (int j = 1; j < 10; ++j)
      if (!(fam.curves(curve, j) > fam.curves(curve, j - 1))) monotone = false;
  rep.measurements["robin_curves"] = Json::array();
  for (int j = 0; j < 10; ++j)
    rep.measurements["robin_curves"].push_back(fam.curves(0, j));
  rep.assertions.push_back({"robin_curves_strictly_increasing", monotone, ""});

  rep.runtime_seconds = clock.seconds();
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// experiment: curvature prescription identity
// ---------------------------------------------------------------------------

ExperimentReport experiment_prescription(const std::vector<int>& levels, unsigned seed) {
  Stopwatch clock;
  ExperimentReport rep;
  rep.name = "prescription";
  rep.seed = seed;
  rep.config = {{"levels", levels}};
  std::mt19937_64 rng(seed);

  std::vector<double> residuals;
  Json per_level = Json::array();
  for (int level : levels) {
    TunedInstance inst = make_tuned_instance(level, 1, BC::Robin);
    OperatorPair P = assemble(inst.mesh, inst.G, BC::Robin, 0.0);
    double r = std::abs(prescription_residual(inst.mesh, inst.G, inst.u, P));
    residuals.push_back(r);
    per_level.push_back({{"level", level}, {"K_star", inst.K_star}, {"residual", r}});
  }
  rep.measurements["per_level"] = per_level;
  bool shrinking = true;
  for (std::size_t i = 1; i < residuals.size(); ++i)
    if (!(residuals[i - 1] / residuals[i] >= 1.5)) shrinking = false;
  rep.assertions.push_back({"residual_shrinks_1p5x_per_level", shrinking, ""});

  // Corollary mechanism: for the pair (u, u|_bnd), the weighted integral is
  // strictly positive for every positive weight, so the pair cannot be the
  // curvature data of any metric in the class.
  TunedInstance inst = make_tuned_instance(levels.front(), 1, BC::Robin);
  const double cn = conformal_coupling(3).value();
  int positive = 0;
  const int n_weights = 10;
  Json signs = Json::array();
  for (int i = 0; i < n_weights; ++i) {
    ScalarField w = random_omega(rng, 0.4);
    double val = cn * integrate_interior(inst.mesh, inst.G,
                                         [&](int t, const Vec3& p) {
                                           double uu = p1_value(inst.mesh, inst.u, t, p);
                                           return uu * uu * std::exp(2.5 * w.value(p));
                                         }) +
                 2 * cn * integrate_boundary(
                              inst.mesh, inst.G, [&](int b, const Vec3& p) {
                                double uu = p1_value(inst.mesh, inst.u,
                                                     inst.mesh.boundary[b].owner_tet, p);
                                return uu * uu * std::exp(1.5 * w.value(p));
                              });
    signs.push_back(val);
    if (val > 0) ++positive;
  }
  rep.measurements["corollary_integrals"] = signs;
  rep.assertions.push_back({"corollary_sign_test_10_of_10", positive == n_weights,
                            std::to_string(positive) + "/10"});

  // Flat-cube exact-kernel case: constants are an exact discrete kernel and
  // every integrand vanishes pointwise.
  Mesh cube = make_box(4);
  Geometry Gc = Geometry::euclidean_box();
  OperatorPair Pc = assemble(cube, Gc, BC::Robin, 0.0);
  Vector ones = Vector::Ones(cube.num_vertices());
  double exact = std::abs(prescription_residual(cube, Gc, ones, Pc));
  rep.measurements["flat_cube_residual"] = exact;
  rep.assertions.push_back({"flat_cube_exact_zero", exact <= 1e-12, std::to_string(exact)});

  rep.runtime_seconds = clock.seconds();
  rep.finish();
  return rep;
}

// ---------------------------------------------------------------------------
// verification harnesses
// ---------------------------------------------------------------------------

ExperimentReport verify_covariance(const std::vector<int>& levels, unsigned seed) {
  Stopwatch clock;
  ExperimentReport rep;
  rep.name = "covariance";
  rep.seed = seed;
  rep.config = {{"levels", levels}};
  std::mt19937_64 rng(seed);

  Json meas = Json::array();
  bool ok = true;
  for (int pair_idx = 0; pair_idx < 2; ++pair_idx) {
    ScalarField omega = random_omega(rng, 0.3);
    Expr fe = random_test_expr(rng);
    std::vector<double> res;
    for (int level : levels) {
      Mesh mesh = make_ball(level);
      res.push_back(covariance_residual(mesh, Geometry::euclidean_ball(), omega, fe));
    }
    Json rj = Json::array();
    for (double r : res) rj.push_back(r);
    meas.push_back({{"residuals", rj}});
    for (std::size_t i = 1; i < res.size(); ++i)
      if (!(res[i - 1] / res[i] >= 1.3)) ok = false;
  }
  rep.measurements["pairs"] = meas;
  rep.assertions.push_back({"residual_decreases_under_refinement", ok, meas.dump()});
  rep.runtime_seconds = clock.seconds();
  rep.finish();
  return rep;
}

ExperimentReport verify_prescription(const std::vector<int>& levels, unsigned seed) {
  return experiment_prescription(levels, seed);
}

ExperimentReport verify_nodal_identity(const std::vector<int>& levels, int n_fields,
                                       unsigned seed) {
  Stopwatch clock;
  ExperimentReport rep;
  rep.name = "nodal-identity";
  rep.seed = seed;
  rep.config = {{"levels", levels}, {"n_fields", n_fields}};
  std::mt19937_64 rng(seed);

  std::vector<ScalarField> fields;
  fields.emplace_back(Expr::parse("1"));
  for (int i = 1; i < n_fields; ++i) fields.push_back(random_test_field(rng));

  // residuals[field][level], summed over the domains of the tuned kernel
  std::vector<std::vector<double>> residuals(fields.size());
  Json meas = Json::array();
  for (int level : levels) {
    TunedInstance inst = make_tuned_instance(level, 2, BC::Robin);
    NodalDecomposition d = decompose(inst.mesh, inst.u);
    Json lvl = {{"level", level},
                {"K_star", inst.K_star},
                {"domains", d.domain_count()},
                {"residuals", Json::array()}};
    for (std::size_t fi = 0; fi < fields.size(); ++fi) {
      double total = 0;
      for (int dom = 0; dom < d.domain_count(); ++dom)
        total += std::abs(nodal_identity_residual(inst.mesh, inst.G, d, dom, fields[fi]));
      residuals[fi].push_back(total);
      lvl["residuals"].push_back(total);
    }
    meas.push_back(lvl);
  }
  rep.measurements["per_level"] = meas;
  bool ok = true;
  for (auto& series : residuals)
    for (std::size_t i = 1; i < series.size(); ++i)
      if (!(series[i - 1] / series[i] >= 1.5)) ok = false;
  rep.assertions.push_back({"residual_shrinks_1p5x_per_level", ok, meas.dump()});
  rep.runtime_seconds = clock.seconds();
  rep.finish();
  return rep;
}

ExperimentReport verify_obstruction(int level, int n_omegas, unsigned seed) {
  Stopwatch clock;
  ExperimentReport rep;
  rep.name = "obstruction";
  rep.seed = seed;
  rep.config = {{"level", level}, {"n_omegas", n_omegas}};
  std::mt19937_64 rng(seed);

  TunedInstance inst = make_tuned_instance(level, 2, BC::Robin);
  NodalDecomposition d = decompose(inst.mesh, inst.u);
  Json meas = Json::array();
  bool all_negative = true;
  bool sign_flip_ok = true;
  NodalDecomposition dflip = decompose(inst.mesh, Vector(-inst.u));
  for (int i = 0; i < n_omegas; ++i) {
    ScalarField omega = random_omega(rng, 0.2);
    for (int dom = 0; dom < d.domain_count(); ++dom) {
      ObstructionResult r = obstruction_check(inst.mesh, inst.G, omega, d, dom);
      all_negative = all_negative && r.strictly_negative;
      meas.push_back({{"omega_index", i},
                      {"domain", dom},
                      {"lhs", r.lhs},
                      {"lhs_alt_exponent", r.lhs_alt},
                      {"margin", r.margin},
                      {"strictly_negative", r.strictly_negative}});
      if (i == 0) {
        ObstructionResult rf = obstruction_check(inst.mesh, inst.G, omega, dflip, dom);
        if (std::abs(rf.lhs - r.lhs) > 1e-10 * (1 + std::abs(r.lhs))) sign_flip_ok = false;
      }
    }
  }
  rep.measurements["checks"] = meas;
  rep.assertions.push_back({"lhs_strictly_negative_on_every_domain", all_negative, ""});
  rep.assertions.push_back({"sign_flip_leaves_lhs_unchanged", sign_flip_ok, ""});
  rep.runtime_seconds = clock.seconds();
  rep.finish();
  return rep;
}

ExperimentReport verify_flux(const std::vector<int>& levels, int n_omegas, unsigned seed) {
  Stopwatch clock;
  ExperimentReport rep;
  rep.name = "flux";
  rep.seed = seed;
  rep.config = {{"levels", levels}, {"n_omegas", n_omegas}};
  std::mt19937_64 rng(seed);

  std::vector<ScalarField> omegas;
  omegas.emplace_back();  // omega = 0: lhs reduces to the nodal identity with v = 1
  omegas.push_back(ScalarField::constant(0.3));
  for (int i = 2; i < n_omegas; ++i) omegas.push_back(random_omega(rng, 0.25));

  std::vector<std::vector<double>> gaps(omegas.size());
  Json meas = Json::array();
  for (int level : levels) {
    TunedInstance inst = make_tuned_instance(level, 2, BC::Robin);
    NodalDecomposition d = decompose(inst.mesh, inst.u);
    Json lvl = {{"level", level}, {"gaps", Json::array()}};
    for (std::size_t wi = 0; wi < omegas.size(); ++wi) {
      double gap = 0;
      for (int dom = 0; dom < d.domain_count(); ++dom) {
        FluxInvariant f = boundary_flux_invariant(inst.mesh, inst.G, omegas[wi], d, dom);
        gap += std::abs(f.lhs - f.rhs);
      }
      gaps[wi].push_back(gap);
      lvl["gaps"].push_back(gap);
    }
    meas.push_back(lvl);
  }
  rep.measurements["per_level"] = meas;
  bool ok = true;
  for (auto& series : gaps)
    for (std::size_t i = 1; i < series.size(); ++i)
      if (!(series[i - 1] / series[i] >= 1.5)) ok = false;
  rep.assertions.push_back({"gap_shrinks_1p5x_per_level", ok, meas.dump()});
  rep.runtime_seconds = clock.seconds();
  rep.finish();
  return rep;
}

ExperimentReport verify_friedlander(int level, unsigned seed) {
  return experiment_friedlander(level, seed);
}

ExperimentReport verify_monotonicity(int level, unsigned seed) {
  Stopwatch clock;
  ExperimentReport rep;
  rep.name = "monotonicity";
  rep.seed = seed;
  rep.config = {{"level", level}};

  Mesh mesh = make_ball(level);
  Geometry G = Geometry::euclidean_ball();
  std::vector<double> sgrid;
  for (int i = 0; i < 10; ++i) sgrid.push_back(0.3 * i);
  RobinFamily fam = robin_family(mesh, G, sgrid, 1);
  bool monotone = true;
  Json curve = Json::array();
  for (int j = 0; j < 10; ++j) {
    curve.push_back(fam.curves(0, j));
    if (j > 0 && !(fam.curves(0, j) > fam.curves(0, j - 1))) monotone = false;
  }
  rep.measurements["lambda1_of_s"] = curve;
  rep.assertions.push_back({"lambda1_strictly_increasing", monotone, curve.dump()});

  const double s0 = 1.0, delta = 1e-3;
  RobinFamily tri = robin_family(mesh, G, {s0 - delta, s0, s0 + delta}, 1);
  double fd = (tri.curves(0, 2) - tri.curves(0, 0)) / (2 * delta);
  OperatorPair P0 = assemble(mesh, G, BC::Robin, s0);
  SpectralResult r0 = eigs(P0, 1);
  double assembled = robin_eigenvalue_slope(P0, Vector(r0.eigenvectors.col(0)));
  double rel = std::abs(fd - assembled) / std::abs(assembled);
  rep.measurements["slope_fd"] = fd;
  rep.measurements["slope_assembled"] = assembled;
  rep.assertions.push_back({"derivative_matches_boundary_mass_1pct", rel <= 0.01,
                            "rel = " + std::to_string(rel)});
  rep.runtime_seconds = clock.seconds();
  rep.finish();
  return rep;
}

ExperimentReport verify_kernel_covariance(const std::vector<int>& levels, unsigned seed) {
  Stopwatch clock;
  ExperimentReport rep;
  rep.name = "kernel-covariance";
  rep.seed = seed;
  rep.config = {{"levels", levels}};
  std::mt19937_64 rng(seed);
  ScalarField omega = random_omega(rng, 0.25);

  std::vector<double> rqs, lp_gaps;
  bool partition_invariant = true;
  Json meas = Json::array();
  for (int level : levels) {
    TunedInstance inst = make_tuned_instance(level, 2, BC::Robin);
    Geometry Ghat = inst.G.pushed(omega);
    Vector uhat(inst.u.size());
    for (int v = 0; v < inst.u.size(); ++v)
      uhat[v] = std::exp(-0.5 * omega.value(inst.mesh.vertices[v])) * inst.u[v];

    OperatorPair Phat = assemble(inst.mesh, Ghat, BC::Robin, 0.0);
    double rq = std::abs(rayleigh_quotient(Phat, uhat));
    rqs.push_back(rq);

    NodalDecomposition d = decompose(inst.mesh, inst.u);
    NodalDecomposition dh = decompose(inst.mesh, uhat);
    bool same = d.domain_count() == dh.domain_count() && d.domain_of == dh.domain_of &&
                d.vertex_sign == dh.vertex_sign;
    partition_invariant = partition_invariant && same;

    double lp0 = lp_density(inst.mesh, inst.G, d);
    NodalDecomposition dhat_for_lp = dh;
    double lp1 = lp_density(inst.mesh, Ghat, dhat_for_lp);
    double gap = std::abs(lp0 - lp1) / std::abs(lp0);
    lp_gaps.push_back(gap);

    meas.push_back({{"level", level},
                    {"transported_rayleigh", rq},
                    {"partition_invariant", same},
                    {"lp_relative_gap", gap}});
  }
  rep.measurements["per_level"] = meas;
  bool rq_ok = true, lp_ok = true;
  for (std::size_t i = 1; i < rqs.size(); ++i)
    if (!(rqs[i - 1] / rqs[i] >= 1.5)) rq_ok = false;
  for (std::size_t i = 1; i < lp_gaps.size(); ++i)
    if (!(lp_gaps[i - 1] / lp_gaps[i] >= 1.5)) lp_ok = false;
  rep.assertions.push_back({"transported_kernel_rayleigh_order_h2", rq_ok, ""});
  rep.assertions.push_back({"partition_exactly_invariant", partition_invariant, ""});
  rep.assertions.push_back({"lp_density_invariant_order_h2", lp_ok, ""});
  rep.runtime_seconds = clock.seconds();
  rep.finish();
  return rep;
}

}  // namespace csl
