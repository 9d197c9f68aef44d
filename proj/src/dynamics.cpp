#include "synclab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace synclab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw NonFinite(std::string(what) + " contains a non-finite value");
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double mean_over(const std::vector<double>& v, const std::vector<int>& idx) {
  double s = 0;
  for (int i : idx) s += v[i];
  return s / static_cast<double>(idx.size());
}

}  // namespace

void SystemParams::validate(int n) const {
  if (static_cast<int>(omega.size()) != n)
    throw DimensionMismatch("omega length does not match vertex count");
  require_finite(omega, "omega");
  if (!std::isfinite(K) || K < 0) throw InvalidConfig("coupling K must be finite and >= 0");
  if (!std::isfinite(alpha) || alpha < 0 || alpha >= kPi / 2)
    throw InvalidConfig("frustration alpha must lie in [0, pi/2)");
}

std::vector<double> rhs(const Digraph& g, const SystemParams& p, const std::vector<double>& theta) {
  p.validate(g.n);
  if (static_cast<int>(theta.size()) != g.n)
    throw DimensionMismatch("theta length does not match vertex count");
  require_finite(theta, "theta");
  std::vector<double> v = p.omega;
  for (auto [j, i] : g.arcs) v[i] += p.K * std::sin(theta[j] - theta[i] + p.alpha);
  return v;
}

std::vector<double> rhs_second_order(const Digraph& g, const SystemParams& p,
                                     const std::vector<double>& theta,
                                     const std::vector<double>& omega) {
  p.validate(g.n);
  if (theta.size() != omega.size() || static_cast<int>(theta.size()) != g.n)
    throw DimensionMismatch("theta/omega lengths do not match vertex count");
  require_finite(theta, "theta");
  require_finite(omega, "omega");
  std::vector<double> a(g.n, 0.0);
  for (auto [j, i] : g.arcs)
    a[i] += p.K * std::cos(theta[j] - theta[i] + p.alpha) * (omega[j] - omega[i]);
  return a;
}

double dt_max_rule(const SystemParams& p, int n) {
  double om = 0;
  for (double w : p.omega) om = std::max(om, std::abs(w));
  return 0.1 / (p.K * static_cast<double>(n) + om + 1.0);
}

double diameter(const std::vector<double>& v) {
  if (v.empty()) return 0;
  auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  return *mx - *mn;
}

Diameters diameters(const NodeDecomposition& decomp, const std::vector<double>& theta) {
  if (theta.size() != decomp.layer_of.size())
    throw DimensionMismatch("phase vector does not match decomposition");
  Diameters d;
  d.Dk.resize(decomp.layers.size());
  double mn = 0, mx = 0;
  bool first = true;
  for (size_t k = 0; k < decomp.layers.size(); ++k) {
    for (int v : decomp.layers[k]) {
      if (first) {
        mn = mx = theta[v];
        first = false;
      }
      mn = std::min(mn, theta[v]);
      mx = std::max(mx, theta[v]);
    }
    d.Dk[k] = mx - mn;
  }
  d.D = d.Dk.empty() ? diameter(theta) : d.Dk.back();
  return d;
}

std::vector<double> TrajectorySample::theta() const {
  std::vector<double> th(psi.size());
  for (size_t i = 0; i < psi.size(); ++i) th[i] = psi[i] + mean;
  return th;
}

namespace {

// The integration state is the anchored phase vector psi plus the scalar mean;
// the coupling only reads differences, so the split is exact and keeps the
// diameters at relative precision however large the phases drift. The anchor is
// the mean over the source components rather than over all vertices: a source
// component's internal spread is the one observable with no additive slack in
// the per-layer rate checks, and it collapses long before the downstream layers
// do. Anchoring there keeps that spread representable at its own scale instead
// of drowning in the rounding of large not-yet-converged offsets.
struct GaugeField {
  const std::vector<std::pair<int, int>>& arcs;
  const SystemParams& p;
  const std::vector<int>& ref;  // anchor vertices (union of source components)

  // velocity of psi into dpsi (anchored), returns the anchor's mean velocity
  double eval(const std::vector<double>& psi, std::vector<double>& dpsi) const {
    dpsi = p.omega;
    for (auto [j, i] : arcs) dpsi[i] += p.K * std::sin(psi[j] - psi[i] + p.alpha);
    double m = mean_over(dpsi, ref);
    for (auto& x : dpsi) x -= m;
    return m;
  }
};

struct StepperState {
  std::vector<double> psi;
  double mu = 0;  // accumulated mean phase
};

void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// One classic RK4 step of size h; also advances mu.
void rk4_step(const GaugeField& f, StepperState& s, double h) {
  const size_t n = s.psi.size();
  std::vector<double> k1, k2, k3, k4, tmp(n);
  double m1 = f.eval(s.psi, k1);
  tmp = s.psi;
  axpy(tmp, h / 2, k1);
  double m2 = f.eval(tmp, k2);
  tmp = s.psi;
  axpy(tmp, h / 2, k2);
  double m3 = f.eval(tmp, k3);
  tmp = s.psi;
  axpy(tmp, h, k3);
  double m4 = f.eval(tmp, k4);
  for (size_t i = 0; i < n; ++i)
    s.psi[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  s.mu += h / 6 * (m1 + 2 * m2 + 2 * m3 + m4);
}

// Dormand-Prince 5(4) coefficients.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200,
                 E6 = 22.0 / 525, E7 = -1.0 / 40;

// One dp45 attempt; returns the max-norm error estimate and the candidate state.
double dp45_attempt(const GaugeField& f, const StepperState& s, double h, StepperState& out) {
  const size_t n = s.psi.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n);
  double m[8] = {0};
  m[1] = f.eval(s.psi, k1);
  tmp = s.psi;
  axpy(tmp, h * A21, k1);
  m[2] = f.eval(tmp, k2);
  tmp = s.psi;
  axpy(tmp, h * A31, k1);
  axpy(tmp, h * A32, k2);
  m[3] = f.eval(tmp, k3);
  tmp = s.psi;
  axpy(tmp, h * A41, k1);
  axpy(tmp, h * A42, k2);
  axpy(tmp, h * A43, k3);
  m[4] = f.eval(tmp, k4);
  tmp = s.psi;
  axpy(tmp, h * A51, k1);
  axpy(tmp, h * A52, k2);
  axpy(tmp, h * A53, k3);
  axpy(tmp, h * A54, k4);
  m[5] = f.eval(tmp, k5);
  tmp = s.psi;
  axpy(tmp, h * A61, k1);
  axpy(tmp, h * A62, k2);
  axpy(tmp, h * A63, k3);
  axpy(tmp, h * A64, k4);
  axpy(tmp, h * A65, k5);
  m[6] = f.eval(tmp, k6);
  out.psi = s.psi;
  axpy(out.psi, h * B1, k1);
  axpy(out.psi, h * B3, k3);
  axpy(out.psi, h * B4, k4);
  axpy(out.psi, h * B5, k5);
  axpy(out.psi, h * B6, k6);
  out.mu = s.mu + h * (B1 * m[1] + B3 * m[3] + B4 * m[4] + B5 * m[5] + B6 * m[6]);
  m[7] = f.eval(out.psi, k7);
  double err = 0;
  for (size_t i = 0; i < n; ++i) {
    double e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    err = std::max(err, std::abs(e));
  }
  return err;
}

}  // namespace

Trajectory integrate(const Digraph& g, const SystemParams& p, const std::vector<double>& theta0,
                     double t_end, const SolverConfig& cfg) {
  g.validate();
  p.validate(g.n);
  if (static_cast<int>(theta0.size()) != g.n)
    throw DimensionMismatch("theta0 length does not match vertex count");
  require_finite(theta0, "theta0");
  if (!std::isfinite(t_end) || t_end <= 0) throw InvalidConfig("t_end must be positive");
  if (cfg.samples < 2) throw InvalidConfig("need at least two samples");
  const double dt_cap = dt_max_rule(p, g.n);
  if (cfg.dt < 0 || !std::isfinite(cfg.dt)) throw InvalidConfig("dt must be finite and >= 0");
  if (cfg.dt > dt_cap) throw InvalidConfig("dt exceeds the stability cap 0.1/(K*N + max|Omega| + 1)");
  const double dt_target = cfg.dt > 0 ? cfg.dt : dt_cap;

  std::vector<int> ref;
  for (const auto& comp : maximum_nodes(g)) ref.insert(ref.end(), comp.begin(), comp.end());
  std::sort(ref.begin(), ref.end());

  GaugeField field{g.arcs, p, ref};
  StepperState s;
  s.mu = mean_over(theta0, ref);
  s.psi.resize(g.n);
  for (int i = 0; i < g.n; ++i) s.psi[i] = theta0[i] - s.mu;

  Trajectory tr;
  tr.params = p;
  tr.config = cfg;
  tr.samples.reserve(cfg.samples);

  auto record = [&](double t) {
    // Fold any rounding drift of the anchor mean back into mu.
    double drift = mean_over(s.psi, ref);
    if (drift != 0) {
      for (auto& x : s.psi) x -= drift;
      s.mu += drift;
    }
    TrajectorySample smp;
    smp.t = t;
    smp.psi = s.psi;
    smp.mean = s.mu;
    smp.omega_inst = p.omega;
    for (auto [j, i] : g.arcs)
      smp.omega_inst[i] += p.K * std::sin(s.psi[j] - s.psi[i] + p.alpha);
    require_finite(smp.psi, "integrated state");
    smp.D = diameter(smp.psi);
    smp.Domega = diameter(smp.omega_inst);
    tr.samples.push_back(std::move(smp));
  };

  record(0.0);
  const double sample_dt = t_end / (cfg.samples - 1);

  if (cfg.method == SolverConfig::Method::rk4) {
    long m = std::max(1L, static_cast<long>(std::ceil(sample_dt / dt_target - 1e-12)));
    double h = sample_dt / static_cast<double>(m);
    tr.dt_used = h;
    for (int sidx = 1; sidx < cfg.samples; ++sidx) {
      for (long step = 0; step < m; ++step) rk4_step(field, s, h);
      tr.steps += m;
      record(sample_dt * sidx);
    }
  } else {
    if (!(cfg.abs_tol > 0)) throw InvalidConfig("dp45 needs a positive abs_tol");
    double h = dt_target;
    for (int sidx = 1; sidx < cfg.samples; ++sidx) {
      double t = tr.samples.back().t;
      const double t_next = sample_dt * sidx;
      while (t < t_next) {
        double h_try = std::min({h, dt_target, t_next - t});
        StepperState cand;
        double err = dp45_attempt(field, s, h_try, cand);
        if (!std::isfinite(err)) throw NonFinite("integration produced a non-finite state");
        if (err <= cfg.abs_tol) {
          s = std::move(cand);
          t += h_try;
          tr.steps += 1;
          tr.dt_used = h_try;
        } else {
          tr.rejected_steps += 1;
        }
        double scale = err > 0 ? 0.9 * std::pow(cfg.abs_tol / err, 0.2) : 5.0;
        h = h_try * std::clamp(scale, 0.2, 5.0);
        if (!(h > 0)) throw NonFinite("step size collapsed");
      }
      record(t_next);
    }
  }
  return tr;
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void trajectory_to_csv(const Trajectory& tr, std::ostream& out) {
  const int n = tr.n();
  const size_t layers = tr.samples.empty() ? 0 : tr.samples.front().Dk.size();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",theta_" << i;
  for (int i = 1; i <= n; ++i) out << ",omega_" << i;
  out << ",D";
  for (size_t k = 0; k < layers; ++k) out << ",D_" << k;
  for (size_t k = 0; k < layers; ++k) out << ",Q_" << k;
  out << "\n";
  for (const auto& s : tr.samples) {
    if (s.Dk.size() != layers || s.Qk.size() != s.Dk.size())
      throw InvalidConfig("trajectory samples carry inconsistent layer annotations");
    out << fmt17(s.t);
    for (int i = 0; i < n; ++i) out << ',' << fmt17(s.psi[i] + s.mean);
    for (int i = 0; i < n; ++i) out << ',' << fmt17(s.omega_inst[i]);
    out << ',' << fmt17(s.D);
    for (double d : s.Dk) out << ',' << fmt17(d);
    for (double q : s.Qk) out << ',' << fmt17(q);
    out << "\n";
  }
}

std::string trajectory_to_csv(const Trajectory& tr) {
  std::ostringstream os;
  trajectory_to_csv(tr, os);
  return os.str();
}

Trajectory trajectory_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidConfig("empty trajectory CSV");
  auto header = split_csv_line(line);
  int n = 0;
  size_t layers = 0;
  for (const auto& name : header) {
    if (name.rfind("theta_", 0) == 0) ++n;
    if (name.rfind("D_", 0) == 0) ++layers;
  }
  const size_t expected = 1 + 2 * static_cast<size_t>(n) + 1 + 2 * layers;
  if (header.size() != expected || header[0] != "t")
    throw InvalidConfig("unrecognized trajectory CSV header");

  Trajectory tr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != expected) throw InvalidConfig("trajectory CSV row has wrong arity");
    std::vector<double> vals(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
      char* end = nullptr;
      vals[i] = std::strtod(cells[i].c_str(), &end);
      if (end == cells[i].c_str() || *end != '\0')
        throw InvalidConfig("trajectory CSV cell is not a number");
    }
    TrajectorySample s;
    size_t at = 0;
    s.t = vals[at++];
    s.psi.assign(vals.begin() + at, vals.begin() + at + n);
    at += n;
    s.mean = 0;  // reloaded phases live in psi; the gauge split is not persisted
    s.omega_inst.assign(vals.begin() + at, vals.begin() + at + n);
    at += n;
    s.D = vals[at++];
    s.Dk.assign(vals.begin() + at, vals.begin() + at + layers);
    at += layers;
    s.Qk.assign(vals.begin() + at, vals.begin() + at + layers);
    s.Domega = diameter(s.omega_inst);
    if (!tr.samples.empty() && !(s.t > tr.samples.back().t))
      throw InvalidConfig("trajectory CSV times must increase strictly");
    tr.samples.push_back(std::move(s));
  }
  return tr;
}

}  // namespace synclab
