#include "synclab/framework.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace synclab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

long double falling_factorial_ld(int n, int j) {
  long double r = 1;
  for (int t = 0; t < j; ++t) r *= static_cast<long double>(n - t);
  return r;
}

// (sum_{j=1}^{M-1} eta^j A(2M, j) + 1) * gamma / sin(gamma)
double growth_constant(int M, double eta, double gamma) {
  long double sum = 1, epow = 1;
  for (int j = 1; j <= M - 1; ++j) {
    epow *= static_cast<long double>(eta);
    sum += epow * falling_factorial_ld(2 * M, j);
  }
  double c = static_cast<double>(sum * gamma / std::sin(gamma));
  if (!std::isfinite(c)) throw Overflow("growth constant exceeds double range");
  return c;
}

double finite_or(double x, double fallback) { return std::isfinite(x) ? x : fallback; }

}  // namespace

void FrameworkParams::validate() const {
  if (N < 1 || d < 0) throw InvalidConfig("framework needs N >= 1 and d >= 0");
  if (!std::isfinite(D0) || D0 < 0) throw InvalidConfig("initial diameter must be finite and >= 0");
  if (!(D0 < zeta && zeta < gamma && gamma < kPi))
    throw InvalidConfig("parameters must satisfy D0 < zeta < gamma < pi");
  double eta_floor = std::max(1.0 / std::sin(gamma), 2.0 / (1.0 - zeta / gamma));
  if (!(eta > eta_floor))
    throw InvalidConfig("eta must exceed max{1/sin(gamma), 2/(1 - zeta/gamma)}");
  if (!(beta > 0 && beta < 1) || std::abs(beta - (1.0 - 2.0 / eta)) > 1e-12)
    throw InvalidConfig("beta must equal 1 - 2/eta");
  if (!(zeta / beta < gamma)) throw InvalidConfig("zeta/beta must stay below gamma");
  double c_ref = growth_constant(N, eta, gamma);
  if (!(c > 0) || std::abs(c - c_ref) > 1e-9 * c_ref)
    throw InvalidConfig("growth constant c is inconsistent with (N, eta, gamma)");
  if (!(Dinf > 0 && Dinf < kPi)) throw InvalidConfig("target diameter must lie in (0, pi)");
  if (!std::isfinite(DOmega) || DOmega < 0)
    throw InvalidConfig("frequency diameter must be finite and >= 0");
}

FrameworkParams derive_params(double D0, int N, int d, double DOmega, std::optional<double> zeta,
                              std::optional<double> gamma, std::optional<double> eta,
                              std::optional<double> Dinf) {
  if (!std::isfinite(D0) || D0 < 0) throw InvalidConfig("D0 must be finite and >= 0");
  if (D0 >= kPi) throw InvalidInitialDiameter("initial phases must fit in an open half circle");
  if (N < 1 || d < 0) throw InvalidConfig("framework needs N >= 1 and d >= 0");
  if (!std::isfinite(DOmega) || DOmega < 0) throw InvalidConfig("D(Omega) must be finite and >= 0");

  FrameworkParams fp;
  fp.N = N;
  fp.d = d;
  fp.D0 = D0;
  fp.DOmega = DOmega;
  fp.zeta = zeta.value_or(D0 + 0.9 * (kPi - D0) / 2.0);
  fp.gamma = gamma.value_or(D0 + 0.95 * (kPi - D0));
  double eta_floor = std::max(1.0 / std::sin(fp.gamma), 2.0 / (1.0 - fp.zeta / fp.gamma));
  fp.eta = eta.value_or(1.05 * eta_floor);
  fp.beta = 1.0 - 2.0 / fp.eta;
  fp.c = growth_constant(N, fp.eta, fp.gamma);
  fp.Dinf = Dinf.value_or(0.5 * std::min(kPi / 2.0, fp.zeta));
  fp.validate();
  return fp;
}

double AdmissibleRegion::K_min(double alpha) const {
  if (!(alpha >= 0 && alpha < alpha_max))
    throw Infeasible("no finite coupling is admissible at this frustration");
  if (fp.DOmega == 0) return 0.0;
  double denom = std::cos(alpha) * (1.0 - 2.0 * fp.N * X * std::tan(alpha));
  return X * fp.DOmega / denom;
}

bool AdmissibleRegion::admissible(double K, double alpha) const {
  if (!(K > 0) || !(alpha >= 0) || !(alpha < kPi / 2)) return false;
  if (!(fp.Dinf + alpha < kPi / 2)) return false;
  // Direct re-substitution of the coupling condition line.
  double line = X * (fp.DOmega / (K * std::cos(alpha)) + 2.0 * fp.N * std::tan(alpha));
  return line < 1.0;
}

double AdmissibleRegion::tbar(double K, double alpha) const {
  double rate = fp.DOmega + 2.0 * fp.N * K * std::sin(alpha);
  if (rate == 0) return std::numeric_limits<double>::infinity();
  return (fp.zeta - fp.D0) / rate;
}

double AdmissibleRegion::layer_target(int k) const {
  if (k < 0 || k > fp.d) throw InvalidConfig("layer index outside 0..d");
  double t = fp.Dinf;
  for (int i = k; i < fp.d; ++i) t *= fp.beta / (4.0 * (2.0 * fp.N + 1.0) * fp.c);
  return t;
}

double AdmissibleRegion::tk_bound(int k, double K, double alpha) const {
  if (k < 0 || k > fp.d) throw InvalidConfig("layer index outside 0..d");
  // layer_target(0) = beta^d Dinf / [4(2N+1)c]^d, so one extra beta yields the
  // beta^{d+1} contraction scale of the slowest certified mode.
  double contraction = K * std::cos(alpha) / fp.c * fp.beta * layer_target(0);
  double denom = contraction - (fp.DOmega + 2.0 * fp.N * K * std::sin(alpha));
  if (!(denom > 0)) return std::numeric_limits<double>::infinity();
  return (k + 1) * fp.zeta / denom;
}

std::vector<double> AdmissibleRegion::tk_bounds(double K, double alpha) const {
  std::vector<double> out(fp.d + 1);
  for (int k = 0; k <= fp.d; ++k) out[k] = tk_bound(k, K, alpha);
  return out;
}

AdmissibleRegion admissible_region(const FrameworkParams& fp) {
  fp.validate();
  AdmissibleRegion r;
  r.fp = fp;
  long double geom = 1;
  for (int i = 0; i < fp.d; ++i) geom *= 4.0L * (2.0L * fp.N + 1.0L) * fp.c;
  long double betap = 1;
  for (int i = 0; i <= fp.d; ++i) betap *= fp.beta;
  long double g = 1.0L + (fp.d + 1) * fp.zeta / (fp.zeta - fp.D0);
  r.X = static_cast<double>(g * fp.c * geom / (betap * fp.Dinf));
  if (!std::isfinite(r.X)) throw Overflow("admissibility constant exceeds double range");

  double a_tan = std::atan(1.0 / (2.0 * fp.N * r.X));
  double a_half = kPi / 2.0 - fp.Dinf;
  r.alpha_max = std::min(a_tan, a_half);
  if (!(r.alpha_max > 0)) throw Infeasible("no positive frustration satisfies the constraints");
  return r;
}

const CheckResult* TheoremReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

TheoremReport verify_theorem(const FrameworkParams& fp, const AdmissibleRegion& region,
                             const Trajectory& tr, const NodeDecomposition& decomp) {
  if (tr.samples.size() < 2) throw PreconditionViolated("trajectory has too few samples");
  if (static_cast<int>(decomp.layers.size()) != fp.d + 1 ||
      static_cast<int>(decomp.layer_of.size()) != fp.N)
    throw PreconditionViolated("decomposition does not match framework parameters");
  for (const auto& s : tr.samples)
    if (s.Dk.size() != decomp.layers.size())
      throw PreconditionViolated("trajectory lacks per-layer diameter annotations");
  const double K = tr.params.K, alpha = tr.params.alpha;
  if (!region.admissible(K, alpha))
    throw PreconditionViolated("(K, alpha) lies outside the admissible region");
  const double D_start = tr.samples.front().D;
  if (!(D_start < kPi)) throw PreconditionViolated("initial phases must fit in a half circle");
  if (std::abs(D_start - fp.D0) > 1e-9 * std::max(1.0, fp.D0))
    throw PreconditionViolated("framework parameters were derived from a different initial state");

  TheoremReport rep;
  const double t_end = tr.samples.back().t;
  const double dt_sample = tr.samples[1].t - tr.samples[0].t;
  const double tol_fd = 10.0 * (K * fp.N + fp.DOmega) * dt_sample;
  const double tb = region.tbar(K, alpha);

  // Entry time into [0, bound] never leaving again, per the sampled trace;
  // -1 when the trace never locks in.
  auto entry_time = [&](auto&& value_at, double bound) {
    int last_out = -1;
    for (int s = 0; s < static_cast<int>(tr.samples.size()); ++s)
      if (value_at(s) > bound) last_out = s;
    if (last_out + 1 >= static_cast<int>(tr.samples.size())) return -1.0;
    return tr.samples[last_out + 1].t;
  };

  double t_star = entry_time([&](int s) { return tr.samples[s].D; }, fp.Dinf);
  rep.t_star = t_star;
  rep.checks.push_back({"enters_target_diameter", t_star >= 0,
                        t_star >= 0 ? t_star : tr.samples.back().D, fp.Dinf});
  rep.checks.push_back({"t_star_before_tbar", t_star >= 0 && t_star <= tb,
                        finite_or(t_star, -1), finite_or(tb, -1)});

  for (int k = 0; k <= fp.d; ++k) {
    double target = region.layer_target(k);
    double bound = region.tk_bound(k, K, alpha);
    double tk = entry_time([&](int s) { return tr.samples[s].Dk[k]; }, target);
    rep.layer_entry_times.push_back(tk);
    rep.checks.push_back({"layer_" + std::to_string(k) + "_meets_target",
                          tk >= 0 && tk <= std::min(bound, t_end), finite_or(tk, -1),
                          finite_or(std::min(bound, t_end), -1)});
  }

  double worst_half = -std::numeric_limits<double>::infinity();
  for (const auto& s : tr.samples)
    if (s.t < tb) worst_half = std::max(worst_half, s.D);
  rep.checks.push_back({"half_circle_before_tbar", worst_half < fp.zeta, worst_half, fp.zeta});

  const double growth_rate = fp.DOmega + 2.0 * fp.N * K * std::sin(alpha);
  double worst_growth = -std::numeric_limits<double>::infinity();
  for (const auto& s : tr.samples) {
    if (s.D > fp.zeta) break;  // the linear bound is only claimed while D <= zeta
    worst_growth = std::max(worst_growth, s.D - (D_start + growth_rate * s.t));
  }
  rep.checks.push_back({"diameter_growth_bound", worst_growth <= tol_fd, worst_growth, tol_fd});

  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                         [](const CheckResult& c) { return c.pass; });
  return rep;
}

MonitorResult monitor_q_inequality(const Trajectory& tr, const NodeDecomposition& decomp,
                                   const FrameworkParams& fp, int k) {
  if (tr.samples.size() < 2) throw InsufficientSamples("monitor needs at least two samples");
  if (k < 0 || k > fp.d) throw InvalidConfig("layer index outside 0..d");
  for (const auto& s : tr.samples)
    if (static_cast<int>(s.Qk.size()) <= k || static_cast<int>(s.Dk.size()) <= k)
      throw PreconditionViolated("trajectory lacks Q/diameter annotations for this layer");

  const double K = tr.params.K, alpha = tr.params.alpha;
  const double dt_sample = tr.samples[1].t - tr.samples[0].t;

  MonitorResult res;
  res.tol = 10.0 * (K * fp.N + fp.DOmega) * dt_sample;

  auto max_residual = [&](double n_eff, double c_eff) {
    double worst = -std::numeric_limits<double>::infinity();
    for (size_t s = 0; s + 1 < tr.samples.size(); ++s) {
      const auto& a = tr.samples[s];
      const auto& b = tr.samples[s + 1];
      double dq = (b.Qk[k] - a.Qk[k]) / (b.t - a.t);
      double dprev = k > 0 ? a.Dk[k - 1] : 0.0;
      double bound = fp.DOmega + 2.0 * n_eff * K * std::sin(alpha) +
                     (2.0 * n_eff + 1.0) * K * std::cos(alpha) * dprev -
                     K * std::cos(alpha) / c_eff * a.Qk[k];
      worst = std::max(worst, dq - bound);
    }
    return worst;
  };

  res.max_residual = max_residual(fp.N, fp.c);
  res.pass = res.max_residual <= res.tol;

  if (k == 0 && decomp.layers.size() == 1) {
    int n0 = static_cast<int>(decomp.layers[0].size());
    double c0 = growth_constant(n0, fp.eta, fp.gamma);
    res.has_sc_form = true;
    res.max_residual_sc = max_residual(n0, c0);
    res.pass_sc = res.max_residual_sc <= res.tol;
  }
  return res;
}

DecayFit fit_frequency_decay(const Trajectory& tr, double t_star) {
  if (tr.samples.size() < 2) throw InsufficientSamples("decay fit needs at least two samples");
  const double t_end = tr.samples.back().t;
  const double t_begin = t_star + 0.1 * (t_end - t_star);

  int last_good = -1;
  bool any_positive = false;
  for (int s = 0; s < static_cast<int>(tr.samples.size()); ++s) {
    if (tr.samples[s].t < t_begin) continue;
    if (tr.samples[s].Domega > 0) any_positive = true;
    if (tr.samples[s].Domega > 1e-12) last_good = s;
  }
  if (!any_positive)
    throw DegenerateData("frequency diameter is identically zero past t_star");

  std::vector<double> ts, ys;
  for (int s = 0; s <= last_good; ++s) {
    const auto& smp = tr.samples[s];
    if (smp.t < t_begin || !(smp.Domega > 0)) continue;
    ts.push_back(smp.t);
    ys.push_back(std::log(smp.Domega));
  }
  if (ts.size() < 2) throw InsufficientSamples("decay window keeps fewer than two samples");

  const double n = static_cast<double>(ts.size());
  double st = 0, sy = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sy += ys[i];
  }
  const double mt = st / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    sxx += (ts[i] - mt) * (ts[i] - mt);
    sxy += (ts[i] - mt) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0) throw InsufficientSamples("decay window has no time spread");

  DecayFit fit;
  const double slope = sxy / sxx;
  fit.C2 = -slope;
  fit.C1 = std::exp(my + slope * (t_star - mt));
  fit.points = static_cast<int>(ts.size());
  fit.t_begin = ts.front();
  fit.t_end = ts.back();
  double ss_res = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    double pred = my + slope * (ts[i] - mt);
    ss_res += (ys[i] - pred) * (ys[i] - pred);
  }
  fit.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  fit.pass = fit.C2 > 0 && fit.r2 >= 0.95;
  return fit;
}

}  // namespace synclab
