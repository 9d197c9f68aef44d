#pragma once

#include <optional>
#include <string>
#include <vector>

#include "synclab/combo.hpp"
#include "synclab/digraph.hpp"
#include "synclab/dynamics.hpp"

namespace synclab {

struct FrameworkParams {
  int N = 0;        // oscillator count
  int d = 0;        // decomposition depth
  double D0 = 0;    // initial phase diameter
  double zeta = 0;  // half-circle persistence threshold, D0 < zeta < gamma < pi
  double gamma = 0;
  double eta = 0;   // coefficient growth base, > max{1/sin gamma, 2/(1 - zeta/gamma)}
  double beta = 0;  // 1 - 2/eta
  double c = 0;     // (sum_{j=1}^{N-1} eta^j A(2N,j) + 1) * gamma / sin(gamma)
  double Dinf = 0;  // target terminal diameter
  double DOmega = 0;

  void validate() const;  // InvalidConfig on any broken invariant
};

// Defaults when zeta/gamma/eta are omitted:
//   zeta = D0 + 0.9*(pi - D0)/2, gamma = D0 + 0.95*(pi - D0),
//   eta  = 1.05 * max{1/sin(gamma), 2/(1 - zeta/gamma)},
// and Dinf = 0.5*min(pi/2, zeta). Deterministic so derived couplings are
// reproducible; every constraint is re-verified on the way out.
FrameworkParams derive_params(double D0, int N, int d, double DOmega,
                              std::optional<double> zeta = std::nullopt,
                              std::optional<double> gamma = std::nullopt,
                              std::optional<double> eta = std::nullopt,
                              std::optional<double> Dinf = std::nullopt);

struct AdmissibleRegion {
  FrameworkParams fp;
  // X = (1 + (d+1)zeta/(zeta - D0)) * c*(4(2N+1)c)^d / (beta^{d+1} Dinf).
  double X = 0;
  double alpha_max = 0;  // sup of frustrations passing every constraint line

  // 0 when DOmega == 0 and the tan-alpha line holds; +inf is never returned
  // (alpha >= alpha_max throws Infeasible instead).
  double K_min(double alpha) const;
  // Direct re-substitution of (K, alpha) into both constraint lines.
  bool admissible(double K, double alpha) const;

  double tbar(double K, double alpha) const;  // (zeta-D0)/(DOmega+2NK sin a); may be +inf
  double layer_target(int k) const;           // beta^{d-k} Dinf / (4(2N+1)c)^{d-k}
  double tk_bound(int k, double K, double alpha) const;
  std::vector<double> tk_bounds(double K, double alpha) const;
};

AdmissibleRegion admissible_region(const FrameworkParams& fp);

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0;
  double bound = 0;
};

struct TheoremReport {
  bool pass = false;
  double t_star = 0;  // first sampled entry into [0, Dinf] that never exits
  std::vector<double> layer_entry_times;
  std::vector<CheckResult> checks;

  const CheckResult* find(const std::string& name) const;
};

// pre: trajectory annotated (Dk present), produced with admissible (K, alpha),
// decomposition has a spanning tree. Checks: t_* exists and t_* <= tbar; each
// D_k is inside its layer target from its t_k bound onward; D < zeta on
// [0, tbar); and the linear growth bound D(t) <= D0 + (DOmega + 2NK sin a)t
// while D <= zeta, all with the finite-difference tolerance.
TheoremReport verify_theorem(const FrameworkParams& fp, const AdmissibleRegion& region,
                             const Trajectory& tr, const NodeDecomposition& decomp);

struct MonitorResult {
  double max_residual = 0;
  double tol = 0;  // 10*(K*N + DOmega)*dt_sample
  bool pass = false;
  // Sharper strongly-connected form (N0, c0 in place of N, c); present only
  // when the graph has a single layer.
  bool has_sc_form = false;
  double max_residual_sc = 0;
  bool pass_sc = false;
};

// Residual of the damped growth inequality for Q^k between consecutive samples:
//   dQ^k/dt - [DOmega + 2NK sin a + (2N+1)K cos a * D_{k-1} - (K cos a / c) Q^k]
// with D_{-1} = 0. Forward differences at the sampling cadence.
MonitorResult monitor_q_inequality(const Trajectory& tr, const NodeDecomposition& decomp,
                                   const FrameworkParams& fp, int k);

struct DecayFit {
  double C1 = 0;
  double C2 = 0;  // -slope of the log-linear fit
  double r2 = 0;
  int points = 0;
  double t_begin = 0;
  double t_end = 0;
  bool pass = false;  // C2 > 0 and r2 >= 0.95
};

// Least squares on (t, log D(omega)) over [t_star + 0.1*(t_end - t_star),
// last sample with D(omega) > 1e-12]. Throws DegenerateData when the window
// holds no positive frequency diameter at all (already synchronized; callers
// treat that as success) and InsufficientSamples when fewer than 2 usable
// points remain.
DecayFit fit_frequency_decay(const Trajectory& tr, double t_star);

}  // namespace synclab
