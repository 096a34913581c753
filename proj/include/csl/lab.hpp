#ifndef CSL_LAB_HPP
#define CSL_LAB_HPP

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "csl/conformal.hpp"
#include "csl/nodal.hpp"

namespace csl {

using Json = nlohmann::json;

enum class Verdict { Pass, Fail, AmbiguousTau };
std::string verdict_name(Verdict v);

// Machine-readable outcome of one scripted experiment.  Runtimes are kept
// out of the serialized form unless explicitly requested, so reports from
// identical (config, seed) runs are byte-identical.
struct ExperimentReport {
  std::string name;
  unsigned seed = 0;
  Json config;        // resolved parameters
  Json measurements;  // per-level quantities
  struct Assertion {
    std::string name;
    bool pass = false;
    std::string details;
  };
  std::vector<Assertion> assertions;
  Verdict verdict = Verdict::Fail;
  double runtime_seconds = 0.0;
  std::string config_hash;

  void finish();  // computes hash and verdict from the assertions
  Json to_json(bool include_runtime = false) const;
};

void write_reports_csv(const std::vector<ExperimentReport>& reports, std::ostream& out);

// Trusted-curvature well: flat metric with R = -K * bump(center, radius) on
// the unit ball.  Conformal factors cannot move an eigenvalue of the flat
// ball form across zero (the form is congruent across the conformal class),
// so the kernel-bearing instances deform the curvature datum instead, as in
// the constant-R setting of the genericity argument.
Geometry well_geometry(double K, const Vec3& center = {0.15, 0.07, 0.03},
                       double radius = 0.7);

// Ball instance bisected so the k-th eigenvalue (Robin or Dirichlet problem)
// of the well family vanishes; u is the kernel vector on all mesh vertices.
struct TunedInstance {
  Mesh mesh;
  Geometry G = Geometry::euclidean_ball();
  Vector u;
  double K_star = 0.0;
  int level = 0;
  int k = 1;
};
TunedInstance make_tuned_instance(int level, int k, BC bc = BC::Robin,
                                  std::optional<std::pair<double, double>> bracket = {});

// Doubles the upper bracket end until the k-th eigenvalue changes sign.
std::pair<double, double> find_bracket(const Mesh& mesh,
                                       const std::function<Geometry(double)>& family,
                                       int k, BC bc, double hi_start = 256.0,
                                       double hi_cap = 1e6);

// ---- experiments -----------------------------------------------------------

// m disjoint curvature wells of the pinned radius 0.3/m^(1/3); verifies the
// negative-direction mechanism (per-well Rayleigh quotient < 0) and the
// resulting count of negative eigenvalues >= m.  depth <= 0 selects a default
// safely above the continuum threshold.
ExperimentReport experiment_multibump(int m, double depth, int level, unsigned seed);

// Random interior perturbations of the curvature field of a tuned kernel
// instance; reports the fraction of trials that kill the kernel for both
// signs of t.
ExperimentReport experiment_generic_perturbation(int trials, double t_amp, int level,
                                                 unsigned seed);

// Counting identity over a matrix of geometries (>= 10, including the
// forced-degenerate Dirichlet instance) plus Robin-curve monotonicity.
ExperimentReport experiment_friedlander(int level, unsigned seed);

// Per-level prescription residuals on tuned kernels plus the corollary's
// positivity test for the pair (u, u|_bnd).
ExperimentReport experiment_prescription(const std::vector<int>& levels, unsigned seed);

// ---- verification harnesses (used by the CLI and the acceptance suite) ----

ExperimentReport verify_covariance(const std::vector<int>& levels, unsigned seed);
ExperimentReport verify_prescription(const std::vector<int>& levels, unsigned seed);
ExperimentReport verify_nodal_identity(const std::vector<int>& levels, int n_fields,
                                       unsigned seed);
ExperimentReport verify_obstruction(int level, int n_omegas, unsigned seed);
ExperimentReport verify_flux(const std::vector<int>& levels, int n_omegas, unsigned seed);
ExperimentReport verify_friedlander(int level, unsigned seed);
ExperimentReport verify_monotonicity(int level, unsigned seed);
ExperimentReport verify_kernel_covariance(const std::vector<int>& levels, unsigned seed);

}  // namespace csl

#endif
