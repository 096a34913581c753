// Command-line front end: meshes, spectra, Steklov operators, nodal
// decompositions, verification runs and experiments.
//
// Exit codes: 0 success/pass, 1 verdict fail, 2 usage or config error,
// 3 tau-ambiguity.
#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "csl/config.hpp"
#include "csl/conformal.hpp"
#include "csl/lab.hpp"
#include "csl/nodal.hpp"

using namespace csl;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTau = 3;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write to " + path);
  return out;
}

void emit_report(const ExperimentReport& rep, const std::string& path, bool timings) {
  if (path.empty()) return;
  auto out = open_out(path);
  out << rep.to_json(timings).dump(2) << "\n";
}

int run_verify(const std::string& what, int level, unsigned seed,
               const std::string& report_path, bool timings) {
  ExperimentReport rep;
  std::vector<int> three, two;
  for (int l = std::max(1, level - 2); l <= level; ++l) three.push_back(l);
  for (int l = std::max(1, level - 1); l <= level; ++l) two.push_back(l);
  if (what == "covariance")
    rep = verify_covariance(three, seed);
  else if (what == "prescription")
    rep = verify_prescription(three, seed);
  else if (what == "nodal-identity")
    rep = verify_nodal_identity(two, 3, seed);
  else if (what == "obstruction")
    rep = verify_obstruction(std::min(level, 2), 5, seed);
  else if (what == "flux")
    rep = verify_flux(two, 3, seed);
  else if (what == "friedlander")
    rep = verify_friedlander(std::min(level, 2), seed);
  else if (what == "monotonicity")
    rep = verify_monotonicity(std::min(level, 2), seed);
  else if (what == "kernel-covariance")
    rep = verify_kernel_covariance(two, seed);
  else
    throw ConfigError("unknown verify target: " + what);
  emit_report(rep, report_path, timings);
  for (const auto& a : rep.assertions)
    std::cerr << (a.pass ? "[ ok ] " : "[FAIL] ") << rep.name << ": " << a.name << "\n";
  if (rep.verdict == Verdict::AmbiguousTau) return kExitTau;
  return rep.verdict == Verdict::Pass ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conformal boundary-value spectral laboratory"};
  app.require_subcommand(1);

  int threads = 0;
  bool timings = false;
  app.add_option("--threads", threads,
                 "assembly worker threads (0 = auto; default from CSL_THREADS or 1)");
  app.add_flag("--timings", timings, "include runtimes in JSON reports");

  // ---- mesh make ----
  auto* mesh_cmd = app.add_subcommand("mesh", "mesh utilities");
  auto* make_cmd = mesh_cmd->add_subcommand("make", "generate a mesh");
  std::string make_kind, make_out, make_vtk;
  int make_level = 2, make_div = 8;
  double make_rinner = 0.5;
  make_cmd->add_option("kind", make_kind, "ball|box|shell")->required();
  make_cmd->add_option("--level", make_level, "refinement level (ball/shell)");
  make_cmd->add_option("--divisions", make_div, "divisions per axis (box)");
  make_cmd->add_option("--r-inner", make_rinner, "inner radius (shell)");
  make_cmd->add_option("--out", make_out, "output .msh path")->required();
  make_cmd->add_option("--vtk", make_vtk, "also write a VTK file");

  // ---- spectrum ----
  auto* spec_cmd = app.add_subcommand("spectrum", "solve for the smallest eigenpairs");
  std::string spec_config, spec_out, spec_report;
  spec_cmd->add_option("--config", spec_config)->required();
  spec_cmd->add_option("--out", spec_out, "CSV path (overrides config)");
  spec_cmd->add_option("--report", spec_report, "JSON report path");

  // ---- steklov ----
  auto* stek_cmd = app.add_subcommand("steklov", "boundary Dirichlet-to-Robin spectrum");
  std::string stek_config, stek_out, stek_report;
  stek_cmd->add_option("--config", stek_config)->required();
  stek_cmd->add_option("--out", stek_out, "CSV path");
  stek_cmd->add_option("--report", stek_report, "JSON report path");

  // ---- nodal ----
  auto* nodal_cmd = app.add_subcommand("nodal", "nodal decomposition of an eigenfunction");
  std::string nodal_config, nodal_vtk, nodal_report;
  int nodal_index = 0;
  nodal_cmd->add_option("--config", nodal_config)->required();
  nodal_cmd->add_option("--index", nodal_index, "eigenfunction index (0-based)");
  nodal_cmd->add_option("--vtk", nodal_vtk, "VTK output path");
  nodal_cmd->add_option("--report", nodal_report, "JSON report path");

  // ---- verify ----
  auto* verify_cmd = app.add_subcommand("verify", "run one verification harness");
  std::string verify_what, verify_report;
  int verify_level = 3;
  unsigned verify_seed = 0;
  verify_cmd
      ->add_option("what", verify_what,
                   "covariance|prescription|nodal-identity|obstruction|flux|"
                   "friedlander|monotonicity|kernel-covariance")
      ->required();
  verify_cmd->add_option("--level", verify_level, "finest refinement level");
  verify_cmd->add_option("--seed", verify_seed);
  verify_cmd->add_option("--report", verify_report, "JSON report path");

  // ---- experiment ----
  auto* exp_cmd = app.add_subcommand("experiment", "run one scripted experiment");
  std::string exp_what, exp_report, exp_csv;
  int exp_m = 1, exp_level = -1, exp_trials = 20;
  double exp_depth = 0.0, exp_t = 4.0;
  unsigned exp_seed = 0;
  exp_cmd->add_option("what", exp_what, "multibump|generic|friedlander|prescription")
      ->required();
  exp_cmd->add_option("--m", exp_m, "number of bumps (multibump)");
  exp_cmd->add_option("--depth", exp_depth, "well depth (multibump; 0 = auto)");
  exp_cmd->add_option("--trials", exp_trials, "trials (generic)");
  exp_cmd->add_option("--t", exp_t, "perturbation amplitude (generic)");
  exp_cmd->add_option("--level", exp_level, "mesh level (-1 = per-experiment default)");
  exp_cmd->add_option("--seed", exp_seed);
  exp_cmd->add_option("--report", exp_report, "JSON report path");
  exp_cmd->add_option("--csv", exp_csv, "CSV summary path");

  // ---- export ----
  auto* export_cmd = app.add_subcommand("export", "export assembled data");
  auto* matrix_cmd = export_cmd->add_subcommand("matrix", "MatrixMarket export");
  std::string mx_config, mx_out, mx_which = "A";
  matrix_cmd->add_option("--config", mx_config)->required();
  matrix_cmd->add_option("--which", mx_which, "A|M|Mb");
  matrix_cmd->add_option("--out", mx_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (threads == 0) {
      if (const char* env = std::getenv("CSL_THREADS")) threads = std::atoi(env);
    }
    set_default_assembly_threads(threads > 0 ? threads : 1);

    if (*make_cmd) {
      Mesh m;
      if (make_kind == "ball")
        m = make_ball(make_level);
      else if (make_kind == "box")
        m = make_box(make_div);
      else if (make_kind == "shell")
        m = make_shell(make_level, make_rinner);
      else
        throw ConfigError("mesh make: unknown kind '" + make_kind + "'");
      write_gmsh_file(m, make_out);
      if (!make_vtk.empty()) write_vtk_file(m, make_vtk);
      std::cerr << "wrote " << make_out << " (" << m.num_vertices() << " vertices, "
                << m.num_tets() << " tets)\n";
      return kExitPass;
    }

    if (*spec_cmd) {
      RunConfig cfg = RunConfig::load(spec_config);
      AssemblyOptions opts;
      opts.threads = default_assembly_threads();
      OperatorPair P = assemble(cfg.mesh, cfg.geometry, cfg.bc, cfg.s, opts);
      EigsOptions eopts;
      eopts.tau_rel = cfg.tau;
      SpectralResult r = eigs(P, std::min(cfg.n_eigs, P.size()), eopts);
      std::string csv = !spec_out.empty() ? spec_out : cfg.out_csv.value_or("");
      if (csv.empty()) throw ConfigError("spectrum: no CSV output path given");
      auto out = open_out(csv);
      write_spectrum_csv(r, out);
      std::string jpath = !spec_report.empty() ? spec_report : cfg.out_json.value_or("");
      if (!jpath.empty()) {
        nlohmann::json j;
        j["config"] = cfg.raw;
        j["solver"] = r.solver;
        j["tau"] = r.tau;
        j["eigenvalues"] = std::vector<double>(
            r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
        auto jo = open_out(jpath);
        jo << j.dump(2) << "\n";
      }
      return kExitPass;
    }

    if (*stek_cmd) {
      RunConfig cfg = RunConfig::load(stek_config);
      SteklovOperator S = steklov(cfg.mesh, cfg.geometry, cfg.tau);
      SpectralResult r = S.eigs(std::min(cfg.n_eigs, S.boundary_size));
      std::string csv = !stek_out.empty() ? stek_out : cfg.out_csv.value_or("");
      if (csv.empty()) throw ConfigError("steklov: no CSV output path given");
      auto out = open_out(csv);
      write_steklov_csv(r, out);
      if (!stek_report.empty()) {
        nlohmann::json j;
        j["config"] = cfg.raw;
        j["degenerate_branch"] = S.degenerate;
        j["tau"] = S.tau;
        j["negative_count"] = S.negative_count();
        j["eigenvalues"] = std::vector<double>(
            r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
        auto jo = open_out(stek_report);
        jo << j.dump(2) << "\n";
      }
      return kExitPass;
    }

    if (*nodal_cmd) {
      RunConfig cfg = RunConfig::load(nodal_config);
      AssemblyOptions opts;
      opts.threads = default_assembly_threads();
      OperatorPair P = assemble(cfg.mesh, cfg.geometry, cfg.bc, cfg.s, opts);
      if (nodal_index < 0 || nodal_index >= P.size())
        throw ConfigError("nodal: --index out of range");
      SpectralResult r = eigs(P, nodal_index + 1);
      Vector u = Vector::Zero(cfg.mesh.num_vertices());
      for (int i = 0; i < P.size(); ++i)
        u[P.dof_to_vertex[i]] = r.eigenvectors(i, nodal_index);
      NodalDecomposition d = decompose(cfg.mesh, u);
      std::string vtk = !nodal_vtk.empty() ? nodal_vtk : cfg.out_vtk.value_or("");
      if (!vtk.empty()) {
        auto out = open_out(vtk);
        write_nodal_vtk(cfg.mesh, d, out);
      }
      std::string jpath = !nodal_report.empty() ? nodal_report : cfg.out_json.value_or("");
      if (!jpath.empty()) {
        nlohmann::json j;
        j["config"] = cfg.raw;
        j["eigenvalue"] = r.eigenvalues[nodal_index];
        j["domain_count"] = d.domain_count();
        nlohmann::json doms = nlohmann::json::array();
        for (int dom = 0; dom < d.domain_count(); ++dom) {
          double vol = integrate_domain(cfg.mesh, cfg.geometry, d, dom,
                                        [](const Vec3&, double) { return 1.0; });
          doms.push_back({{"sign", d.domains[dom].sign},
                          {"vertices", d.domains[dom].vertices.size()},
                          {"volume", vol}});
        }
        j["domains"] = doms;
        j["interface_pieces"] = d.interface.size();
        j["boundary_zeros_near_interface"] = boundary_nodal_limit_check(cfg.mesh, d);
        auto jo = open_out(jpath);
        jo << j.dump(2) << "\n";
      }
      std::cerr << "domains: " << d.domain_count() << "\n";
      return kExitPass;
    }

    if (*verify_cmd) return run_verify(verify_what, verify_level, verify_seed, verify_report, timings);

    if (*exp_cmd) {
      ExperimentReport rep;
      if (exp_what == "multibump")
        rep = experiment_multibump(exp_m, exp_depth, exp_level < 0 ? 3 : exp_level, exp_seed);
      else if (exp_what == "generic")
        rep = experiment_generic_perturbation(exp_trials, exp_t,
                                              exp_level < 0 ? 2 : exp_level, exp_seed);
      else if (exp_what == "friedlander")
        rep = experiment_friedlander(exp_level < 0 ? 1 : exp_level, exp_seed);
      else if (exp_what == "prescription") {
        int top = exp_level < 0 ? 3 : exp_level;
        std::vector<int> levels;
        for (int l = std::max(1, top - 2); l <= top; ++l) levels.push_back(l);
        rep = experiment_prescription(levels, exp_seed);
      } else {
        throw ConfigError("unknown experiment: " + exp_what);
      }
      emit_report(rep, exp_report, timings);
      if (!exp_csv.empty()) {
        auto out = open_out(exp_csv);
        write_reports_csv({rep}, out);
      }
      for (const auto& a : rep.assertions)
        std::cerr << (a.pass ? "[ ok ] " : "[FAIL] ") << rep.name << ": " << a.name << "\n";
      if (rep.verdict == Verdict::AmbiguousTau) return kExitTau;
      return rep.verdict == Verdict::Pass ? kExitPass : kExitFail;
    }

    if (*matrix_cmd) {
      RunConfig cfg = RunConfig::load(mx_config);
      AssemblyOptions opts;
      opts.threads = default_assembly_threads();
      OperatorPair P = assemble(cfg.mesh, cfg.geometry, cfg.bc, cfg.s, opts);
      const SparseMat* M = nullptr;
      if (mx_which == "A")
        M = &P.A;
      else if (mx_which == "M")
        M = &P.M;
      else if (mx_which == "Mb")
        M = &P.Mb;
      else
        throw ConfigError("export matrix: --which must be A, M or Mb");
      auto out = open_out(mx_out);
      write_matrix_market(*M, out);
      return kExitPass;
    }

    throw ConfigError("no subcommand given");
  } catch (const TauAmbiguityError& e) {
    std::cerr << "tau-ambiguity: " << e.what() << "\n";
    return kExitTau;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}
