#include "csl/config.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>

#include "csl/errors.hpp"

namespace csl {

namespace {

using Json = nlohmann::json;

void require_keys(const Json& j, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": object expected");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

double number_at(const Json& j, const std::string& key, const std::string& where,
                 std::optional<double> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(where + ": missing '" + key + "'");
  }
  if (!j[key].is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return j[key].get<double>();
}

Expr expr_at(const Json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ": expression string expected");
  try {
    return Expr::parse(v.get<std::string>());
  } catch (const ParseError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

std::atomic<int> g_default_threads{1};

}  // namespace

void set_default_assembly_threads(int threads) { g_default_threads = threads; }
int default_assembly_threads() { return g_default_threads; }

Geometry geometry_from_json(const Json& j) {
  require_keys(j, "geometry", {"n", "base", "boundary", "conformal"});
  int n = static_cast<int>(number_at(j, "n", "geometry", 3.0));

  BaseMetric base;
  if (j.contains("base") && !j["base"].is_null()) {
    const Json& b = j["base"];
    if (b.is_string()) {
      if (b.get<std::string>() != "euclidean")
        throw ConfigError("geometry.base: unknown base '" + b.get<std::string>() + "'");
    } else {
      require_keys(b, "geometry.base", {"g", "R", "h"});
      if (b.contains("g")) {
        if (!b["g"].is_array() || b["g"].size() != 6)
          throw ConfigError(
              "geometry.base.g: six entries expected (xx, yy, zz, xy, xz, yz)");
        base.euclidean = false;
        for (int i = 0; i < 6; ++i) base.g[i] = expr_at(b["g"][i], "geometry.base.g");
      }
      if (b.contains("R")) base.R = ScalarField(expr_at(b["R"], "geometry.base.R"));
      if (b.contains("h")) base.h = ScalarField(expr_at(b["h"], "geometry.base.h"));
    }
  }

  BoundaryShape shape;
  if (j.contains("boundary")) {
    const Json& bd = j["boundary"];
    require_keys(bd, "geometry.boundary", {"kind", "radius", "r_inner"});
    std::string kind = bd.value("kind", "");
    if (kind == "ball")
      shape = BoundaryShape::ball(number_at(bd, "radius", "geometry.boundary", 1.0));
    else if (kind == "box")
      shape = BoundaryShape::box();
    else if (kind == "shell")
      shape = BoundaryShape::shell(number_at(bd, "r_inner", "geometry.boundary", 0.5),
                                   number_at(bd, "radius", "geometry.boundary", 1.0));
    else if (kind == "none" || kind.empty())
      shape = BoundaryShape::none();
    else
      throw ConfigError("geometry.boundary.kind: unknown kind '" + kind + "'");
  }

  Geometry G(n, base, shape);
  if (j.contains("conformal")) {
    if (!j["conformal"].is_array()) throw ConfigError("geometry.conformal: array expected");
    for (const auto& entry : j["conformal"]) {
      require_keys(entry, "geometry.conformal[]", {"expr", "bump"});
      if (entry.contains("expr")) {
        G = G.pushed(ScalarField(expr_at(entry["expr"], "geometry.conformal[].expr")));
      } else if (entry.contains("bump")) {
        const Json& bj = entry["bump"];
        require_keys(bj, "geometry.conformal[].bump", {"center", "radius", "amplitude"});
        if (!bj.contains("center") || !bj["center"].is_array() || bj["center"].size() != 3)
          throw ConfigError("geometry.conformal[].bump.center: [x,y,z] expected");
        Vec3 c(bj["center"][0].get<double>(), bj["center"][1].get<double>(),
               bj["center"][2].get<double>());
        G = G.pushed(ScalarField::radial_bump(
            c, number_at(bj, "radius", "bump"), number_at(bj, "amplitude", "bump")));
      } else {
        throw ConfigError("geometry.conformal[]: 'expr' or 'bump' required");
      }
    }
  }
  return G;
}

Mesh mesh_from_json(const Json& j, BoundaryShape* shape_hint) {
  require_keys(j, "mesh", {"kind", "level", "divisions", "r_inner", "path"});
  std::string kind = j.value("kind", "");
  if (kind == "ball") {
    int level = static_cast<int>(number_at(j, "level", "mesh", 2.0));
    if (shape_hint) *shape_hint = BoundaryShape::ball();
    return make_ball(level);
  }
  if (kind == "box") {
    int d = static_cast<int>(number_at(j, "divisions", "mesh", 8.0));
    if (shape_hint) *shape_hint = BoundaryShape::box();
    return make_box(d);
  }
  if (kind == "shell") {
    int level = static_cast<int>(number_at(j, "level", "mesh", 2.0));
    double r_inner = number_at(j, "r_inner", "mesh", 0.5);
    if (shape_hint) *shape_hint = BoundaryShape::shell(r_inner);
    return make_shell(level, r_inner);
  }
  if (kind == "gmsh") {
    if (!j.contains("path")) throw ConfigError("mesh: gmsh kind requires 'path'");
    if (shape_hint) *shape_hint = BoundaryShape::none();
    return load_gmsh_file(j["path"].get<std::string>());
  }
  throw ConfigError("mesh.kind: expected ball|box|shell|gmsh, got '" + kind + "'");
}

RunConfig RunConfig::from_json(const Json& j) {
  require_keys(j, "config", {"geometry", "mesh", "problem", "output", "seed"});
  RunConfig cfg;
  cfg.raw = j;
  if (!j.contains("geometry")) throw ConfigError("config: missing 'geometry'");
  if (!j.contains("mesh")) throw ConfigError("config: missing 'mesh'");

  BoundaryShape hint;
  cfg.mesh = mesh_from_json(j["mesh"], &hint);
  Geometry G = geometry_from_json(j["geometry"]);
  // The mesh kind fixes the boundary shape; reject a mismatching declaration
  // rather than integrating against the wrong normal field.
  if (j["geometry"].contains("boundary")) {
    if (G.boundary().kind != hint.kind && hint.kind != BoundaryShape::Kind::None)
      throw ConfigError("config: geometry.boundary does not match the mesh kind");
  } else if (hint.kind != BoundaryShape::Kind::None) {
    Geometry with_hint(G.dim(), G.base(), hint);
    for (const auto& w : G.stack()) with_hint = with_hint.pushed(w);
    G = with_hint;
  }
  cfg.geometry = G;

  if (j.contains("problem")) {
    const Json& p = j["problem"];
    require_keys(p, "problem", {"bc", "s", "n_eigs", "tau"});
    std::string bc = p.value("bc", "robin");
    if (bc == "dirichlet")
      cfg.bc = BC::Dirichlet;
    else if (bc == "neumann")
      cfg.bc = BC::Neumann;
    else if (bc == "robin")
      cfg.bc = BC::Robin;
    else
      throw ConfigError("problem.bc: expected dirichlet|neumann|robin");
    cfg.s = number_at(p, "s", "problem", 0.0);
    cfg.n_eigs = static_cast<int>(number_at(p, "n_eigs", "problem", 6.0));
    cfg.tau = number_at(p, "tau", "problem", 1e-7);
    if (cfg.n_eigs < 1) throw ConfigError("problem.n_eigs: must be >= 1");
    if (!(cfg.tau > 0)) throw ConfigError("problem.tau: must be > 0");
  }
  if (j.contains("output")) {
    const Json& o = j["output"];
    require_keys(o, "output", {"csv", "json", "vtk"});
    if (o.contains("csv")) cfg.out_csv = o["csv"].get<std::string>();
    if (o.contains("json")) cfg.out_json = o["json"].get<std::string>();
    if (o.contains("vtk")) cfg.out_vtk = o["vtk"].get<std::string>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed: unsigned integer expected");
    cfg.seed = j["seed"].get<unsigned>();
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config JSON parse error: ") + e.what());
  }
  return from_json(j);
}

void write_matrix_market(const SparseMat& A, std::ostream& out) {
  // lower triangle, 1-based, symmetric
  long nnz = 0;
  for (int c = 0; c < A.outerSize(); ++c)
    for (SparseMat::InnerIterator it(A, c); it; ++it)
      if (it.row() >= it.col()) ++nnz;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << A.rows() << ' ' << A.cols() << ' ' << nnz << "\n";
  char buf[64];
  for (int c = 0; c < A.outerSize(); ++c)
    for (SparseMat::InnerIterator it(A, c); it; ++it)
      if (it.row() >= it.col()) {
        std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", it.row() + 1l, it.col() + 1l,
                      it.value());
        out << buf;
      }
}

void write_spectrum_csv(const SpectralResult& r, std::ostream& out) {
  out << "index,eigenvalue,residual\n";
  char buf[96];
  for (int i = 0; i < r.eigenvalues.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", i, r.eigenvalues[i], r.residuals[i]);
    out << buf;
  }
}

void write_steklov_csv(const SpectralResult& r, std::ostream& out) {
  out << "index,eigenvalue,residual,multiplicity_group\n";
  char buf[112];
  int group = 0;
  for (int i = 0; i < r.eigenvalues.size(); ++i) {
    if (i > 0 && std::abs(r.eigenvalues[i] - r.eigenvalues[i - 1]) >
                     0.02 * (1.0 + std::abs(r.eigenvalues[i])))
      ++group;
    double res = r.residuals.size() > static_cast<long>(i) ? r.residuals[i] : 0.0;
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%d\n", i, r.eigenvalues[i], res, group);
    out << buf;
  }
}

}  // namespace csl
