// Subprocess tests of the cslab binary: exit codes, file outputs, and
// byte-identical reports under identical (config, seed).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csl/mesh.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "csl_cli_test";

int run(const std::string& args) {
  std::string cmd = std::string(CSLAB_PATH) + " " + args + " 2> " +
                    (kWork / "stderr.txt").string();
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_ball_config(const fs::path& p, int level = 1) {
  std::ofstream out(p);
  out << R"({
  "geometry": {"n": 3, "base": "euclidean",
               "boundary": {"kind": "ball", "radius": 1.0}, "conformal": []},
  "mesh": {"kind": "ball", "level": )"
      << level << R"(},
  "problem": {"bc": "robin", "s": 0.0, "n_eigs": 4, "tau": 1e-7},
  "seed": 0
})";
}

struct Setup {
  Setup() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};
Setup setup_once;

}  // namespace

TEST_CASE("mesh make: gmsh file reloads identically") {
  auto msh = kWork / "ball.msh";
  CHECK(run("mesh make ball --level 1 --out " + msh.string()) == 0);
  csl::Mesh m = csl::load_gmsh_file(msh.string());
  CHECK(m.num_vertices() == 125);
  CHECK(m.num_tets() == 384);
}

TEST_CASE("spectrum: CSV output and exit 0") {
  auto cfg = kWork / "ball.json";
  write_ball_config(cfg);
  auto csv = kWork / "spec.csv";
  CHECK(run("spectrum --config " + cfg.string() + " --out " + csv.string()) == 0);
  std::string s = slurp(csv);
  CHECK(s.rfind("index,eigenvalue,residual\n", 0) == 0);
  double lam1 = std::stod(s.substr(s.find("\n0,") + 3));
  CHECK(lam1 == doctest::Approx(1.455).epsilon(0.01));
}

TEST_CASE("config errors exit with code 2") {
  auto bad = kWork / "bad.json";
  {
    std::ofstream out(bad);
    out << R"({"geometry": {"n": 3}, "mesh": {"kind": "ball", "level": 1}, "unknown": 1})";
  }
  CHECK(run("spectrum --config " + bad.string() + " --out /dev/null") == 2);
  CHECK(run("spectrum --config " + (kWork / "missing.json").string() +
            " --out /dev/null") == 2);
  CHECK(run("bogus-subcommand") == 2);
  // malformed expression in the geometry block
  auto bad2 = kWork / "bad2.json";
  {
    std::ofstream out(bad2);
    out << R"({"geometry": {"n": 3, "conformal": [{"expr": "x +* y"}]},
               "mesh": {"kind": "ball", "level": 1}})";
  }
  CHECK(run("spectrum --config " + bad2.string() + " --out /dev/null") == 2);
}

TEST_CASE("steklov: multiplicity groups in CSV") {
  auto cfg = kWork / "ball.json";
  write_ball_config(cfg);
  auto csv = kWork / "stek.csv";
  CHECK(run("steklov --config " + cfg.string() + " --out " + csv.string()) == 0);
  std::string s = slurp(csv);
  CHECK(s.rfind("index,eigenvalue,residual,multiplicity_group\n", 0) == 0);
  // sigma_0 = 1/2 alone in group 0; the next three together in group 1
  CHECK(s.find(",0\n") != std::string::npos);
  CHECK(s.find(",1\n") != std::string::npos);
}

TEST_CASE("nodal: VTK and JSON report") {
  auto cfg = kWork / "ball.json";
  write_ball_config(cfg);
  auto vtk = kWork / "nodal.vtk";
  auto rep = kWork / "nodal.json";
  CHECK(run("nodal --config " + cfg.string() + " --index 1 --vtk " + vtk.string() +
            " --report " + rep.string()) == 0);
  CHECK(slurp(vtk).find("SCALARS domain double 1") != std::string::npos);
  CHECK(slurp(rep).find("\"domain_count\": 2") != std::string::npos);
}

TEST_CASE("verify monotonicity passes; reports are byte-identical across runs") {
  auto r1 = kWork / "verify1.json";
  auto r2 = kWork / "verify2.json";
  CHECK(run("verify monotonicity --level 1 --seed 3 --report " + r1.string()) == 0);
  CHECK(run("verify monotonicity --level 1 --seed 3 --report " + r2.string()) == 0);
  std::string a = slurp(r1), b = slurp(r2);
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("experiment generic: deterministic reports and CSV summary") {
  auto r1 = kWork / "gen1.json";
  auto r2 = kWork / "gen2.json";
  auto csv = kWork / "gen.csv";
  std::string args = "experiment generic --trials 2 --level 1 --seed 5 ";
  CHECK(run(args + "--report " + r1.string() + " --csv " + csv.string()) == 0);
  CHECK(run(args + "--report " + r2.string()) == 0);
  CHECK(slurp(r1) == slurp(r2));
  CHECK(slurp(csv).rfind("experiment,seed,assertion,pass,details\n", 0) == 0);
}

TEST_CASE("export matrix: MatrixMarket coordinate format") {
  auto cfg = kWork / "ball.json";
  write_ball_config(cfg);
  auto mtx = kWork / "A.mtx";
  CHECK(run("export matrix --config " + cfg.string() + " --which A --out " +
            mtx.string()) == 0);
  std::string s = slurp(mtx);
  CHECK(s.rfind("%%MatrixMarket matrix coordinate real symmetric\n", 0) == 0);
}
