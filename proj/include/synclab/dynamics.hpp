#pragma once

#include <iosfwd>
#include <vector>

#include "synclab/digraph.hpp"

namespace synclab {

struct SystemParams {
  std::vector<double> omega;  // natural frequencies, rad/time
  double K = 0;               // coupling strength, >= 0
  double alpha = 0;           // frustration, in [0, pi/2)

  void validate(int n) const;  // DimensionMismatch / InvalidConfig / NonFinite
};

// d(theta_i)/dt = Omega_i + K sum_{j in N_i} sin(theta_j - theta_i + alpha)
std::vector<double> rhs(const Digraph& g, const SystemParams& p, const std::vector<double>& theta);

// Instantaneous frequency, identical to rhs by definition.
inline std::vector<double> frequency(const Digraph& g, const SystemParams& p,
                                     const std::vector<double>& theta) {
  return rhs(g, p, theta);
}

// d(omega_i)/dt = K sum_{j in N_i} cos(theta_j - theta_i + alpha)(omega_j - omega_i)
std::vector<double> rhs_second_order(const Digraph& g, const SystemParams& p,
                                     const std::vector<double>& theta,
                                     const std::vector<double>& omega);

struct SolverConfig {
  enum class Method { rk4, dp45 };
  Method method = Method::rk4;
  double dt = 0;           // fixed step; 0 = use dt_max_rule. Must be <= dt_max.
  double abs_tol = 1e-10;  // dp45 error control
  int samples = 256;       // output cadence, decoupled from the step size
};

// 0.1 / (K*N + max|Omega| + 1): the vector field's Lipschitz scale.
double dt_max_rule(const SystemParams& p, int n);

struct TrajectorySample {
  double t = 0;
  // Phases are integrated in an anchored gauge: psi = theta - m where m is the
  // mean phase over the source components, carried separately in `mean`. The
  // dynamics only sees differences, so the split is exact, and it keeps the
  // source components' spreads at relative precision long after absolute
  // phases have drifted and while downstream layers are still converging.
  std::vector<double> psi;
  double mean = 0;
  std::vector<double> omega_inst;
  double D = 0;                // phase diameter
  double Domega = 0;           // frequency diameter
  std::vector<double> Dk;      // per-layer diameters; filled by annotate_trajectory
  std::vector<double> Qk;      // barycentric gap per layer; filled by annotate_trajectory
  std::vector<int> case_label; // position labels for consecutive layer pairs

  double theta(int i) const { return psi[i] + mean; }
  std::vector<double> theta() const;
};

struct Trajectory {
  SystemParams params;
  SolverConfig config;
  double dt_used = 0;
  long steps = 0;
  long rejected_steps = 0;
  std::vector<TrajectorySample> samples;

  int n() const { return samples.empty() ? 0 : static_cast<int>(samples.front().psi.size()); }
};

// pre: t_end > 0, finite inputs. Samples are uniform on [0, t_end] including
// both endpoints. Step halving must alter the final state by less than the
// integration tolerance (order-4 scheme); verified in the test suite.
Trajectory integrate(const Digraph& g, const SystemParams& p, const std::vector<double>& theta0,
                     double t_end, const SolverConfig& cfg = {});

double diameter(const std::vector<double>& v);  // max - min

struct Diameters {
  double D = 0;
  std::vector<double> Dk;  // D_k = diameter over layers 0..k, non-decreasing
};
Diameters diameters(const NodeDecomposition& decomp, const std::vector<double>& theta);

// CSV with header t,theta_1..theta_N,omega_1..omega_N,D,D_0..D_d,Q_0..Q_d and
// 17 significant digits, so a reload reproduces every double bit-exactly.
void trajectory_to_csv(const Trajectory& tr, std::ostream& out);
std::string trajectory_to_csv(const Trajectory& tr);
Trajectory trajectory_from_csv(std::istream& in);

}  // namespace synclab
