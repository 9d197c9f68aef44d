// Acceptance gate: nine independently scored criteria, one line each, exit 0
// only when every criterion holds. Each check re-derives its expected values
// from scratch (brute force, integer recursions, bisection) rather than
// trusting the library path it is scoring.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "synclab/combo.hpp"
#include "synclab/digraph.hpp"
#include "synclab/dynamics.hpp"
#include "synclab/errors.hpp"
#include "synclab/framework.hpp"
#include "synclab/harness.hpp"
#include "synclab/rng.hpp"

using namespace synclab;

namespace {

constexpr double kPi = 3.14159265358979323846;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// criterion 1: brute-force graph oracles

std::vector<std::vector<bool>> reach_closure(const Digraph& g) {
  int n = g.n;
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i) r[i][i] = true;
  for (const auto& a : g.arcs) r[a.first][a.second] = true;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (r[i][k])
        for (int j = 0; j < n; ++j)
          if (r[k][j]) r[i][j] = true;
  return r;
}

std::vector<std::vector<int>> scc_by_mutual_reach(const Digraph& g) {
  auto r = reach_closure(g);
  std::vector<int> comp(g.n, -1);
  std::vector<std::vector<int>> out;
  for (int i = 0; i < g.n; ++i) {
    if (comp[i] >= 0) continue;
    int id = static_cast<int>(out.size());
    out.emplace_back();
    for (int j = i; j < g.n; ++j)
      if (comp[j] < 0 && r[i][j] && r[j][i]) {
        comp[j] = id;
        out.back().push_back(j);
      }
  }
  return out;
}

std::vector<std::vector<int>> maximum_nodes_oracle(const Digraph& g) {
  auto comps = scc_by_mutual_reach(g);
  auto r = reach_closure(g);
  std::vector<int> comp_of(g.n);
  for (size_t c = 0; c < comps.size(); ++c)
    for (int v : comps[c]) comp_of[v] = static_cast<int>(c);
  std::vector<std::vector<int>> sources;
  for (size_t c = 0; c < comps.size(); ++c) {
    bool incoming = false;
    for (const auto& a : g.arcs)
      if (comp_of[a.first] != static_cast<int>(c) && comp_of[a.second] == static_cast<int>(c))
        incoming = true;
    if (!incoming) sources.push_back(comps[c]);
  }
  std::sort(sources.begin(), sources.end());
  return sources;
}

bool spanning_tree_oracle(const Digraph& g) {
  auto r = reach_closure(g);
  for (int i = 0; i < g.n; ++i)
    if (std::all_of(r[i].begin(), r[i].end(), [](bool b) { return b; })) return true;
  return false;
}

Digraph digraph_from_mask(int n, std::uint64_t mask) {
  Digraph g;
  g.n = n;
  int bit = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      if (mask >> bit & 1u) g.arcs.push_back({j, i});
      ++bit;
    }
  return g;
}

bool criterion_graph_oracles(std::string& detail) {
  auto t0 = std::chrono::steady_clock::now();
  long checked = 0, mismatches = 0;

  auto check_one = [&](const Digraph& g) {
    ++checked;
    auto expect_max = maximum_nodes_oracle(g);
    bool expect_span = spanning_tree_oracle(g);
    if (maximum_nodes(g) != expect_max) ++mismatches;
    if (has_spanning_tree(g) != expect_span) ++mismatches;
    if (has_spanning_tree(g) != (expect_max.size() == 1)) ++mismatches;
  };

  long exhaustive = 0;
  for (int n = 1; n <= 3; ++n) {
    int slots = n * (n - 1);
    for (std::uint64_t mask = 0; mask < (1ull << slots); ++mask) {
      check_one(digraph_from_mask(n, mask));
      ++exhaustive;
    }
  }

  Rng rng(20240901);
  const double probs[] = {0.15, 0.35, 0.6};
  for (int rep = 0; rep < 10000; ++rep) {
    int n = 2 + static_cast<int>(rng.below(5));
    double p = probs[rep % 3];
    Digraph g;
    g.n = n;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (i != j && rng.bernoulli(p)) g.arcs.push_back({j, i});
    check_one(g);
  }

  double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%ld exhaustive + 10000 random graphs, %ld mismatches, %.1fs",
                exhaustive, mismatches, dt);
  detail = buf;
  return mismatches == 0 && dt < 30.0;
}

// ---------------------------------------------------------------------------
// criterion 2: coefficient recursion vs closed form vs symmetry

struct CoeffRef {
  std::vector<long double> abar, aunder;
};

CoeffRef coeff_reference(int N, int Nk, long double eta) {
  CoeffRef r;
  r.abar.assign(Nk, 0.0L);
  for (int l = Nk; l >= 2; --l) r.abar[l - 2] = eta * (2 * N - l + 2) * (r.abar[l - 1] + 1);
  r.aunder.assign(Nk, 0.0L);
  for (int l = 1; l <= Nk - 1; ++l)
    r.aunder[l] = eta * (l + 1 + 2 * N - Nk) * (r.aunder[l - 1] + 1);
  return r;
}

bool within_one_ulp(double got, double want) {
  return got == want || got == std::nextafter(want, got);
}

bool criterion_coefficients(std::string& detail) {
  long combos = 0, mismatches = 0;
  for (double eta : {2.5, 3.0, 10.0}) {
    bool integral = eta == std::floor(eta);
    for (int N = 1; N <= 8; ++N)
      for (int Nk = 1; Nk <= N; ++Nk) {
        CoeffMode mode = Nk == N ? CoeffMode::strongly_connected : CoeffMode::layered;
        ComboCoefficients c = coefficients(N, Nk, eta, mode);
        CoeffRef ref = coeff_reference(N, Nk, eta);
        ++combos;
        for (int i = 0; i < Nk; ++i) {
          double wa = static_cast<double>(ref.abar[i]);
          double wu = static_cast<double>(ref.aunder[i]);
          bool ok_a = integral ? c.abar[i] == wa : within_one_ulp(c.abar[i], wa);
          bool ok_u = integral ? c.aunder[i] == wu : within_one_ulp(c.aunder[i], wu);
          // mirror symmetry must be bitwise regardless of eta
          bool ok_sym = c.abar[Nk - 1 - i] == c.aunder[i];
          if (!ok_a || !ok_u || !ok_sym) ++mismatches;
        }
      }
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "%ld (N, N_k, eta) combinations, %ld mismatches", combos,
                mismatches);
  detail = buf;
  return mismatches == 0;
}

// ---------------------------------------------------------------------------
// criteria 3 and 5: sandwich and growth bound along one trajectory suite

struct SuiteOutcome {
  long trajectories = 0;
  long samples = 0;
  long sandwich_violations = 0;
  long growth_violations = 0;
};

SuiteOutcome run_trajectory_suite() {
  SuiteOutcome out;
  const double kvals[] = {0.0, 0.5, 2.0, 10.0};
  const double avals[] = {0.0, 0.3, 0.7};
  for (int rep = 0; rep < 100; ++rep) {
    std::uint64_t seed = 1000 + rep;
    int n = 2 + rep % 5;
    Digraph g = random_spanning_tree_digraph(n, 0.3, seed);
    NodeDecomposition nd = node_decomposition(g);

    VectorSpec omega_spec;
    omega_spec.kind = VectorSpec::Kind::uniform;
    omega_spec.lo = -1.0;
    omega_spec.hi = 1.0;
    VectorSpec theta_spec;
    theta_spec.kind = VectorSpec::Kind::uniform_arc;
    theta_spec.width = 0.9 * kPi;

    SystemParams p;
    p.omega = omega_spec.realize(n, seed, 1);
    p.K = kvals[rep % 4];
    p.alpha = avals[rep % 3];
    std::vector<double> theta0 = theta_spec.realize(n, seed, 2);

    SolverConfig cfg;
    cfg.samples = 128;
    Trajectory tr = integrate(g, p, theta0, 5.0, cfg);
    double eta = rep % 2 ? 10.0 : 3.0;
    annotate_trajectory(tr, nd, layer_coefficients(nd, eta));
    const double beta = 1.0 - 2.0 / eta;

    ++out.trajectories;
    for (const auto& s : tr.samples) {
      ++out.samples;
      for (size_t k = 0; k < s.Dk.size(); ++k)
        if (!(beta * s.Dk[k] - 1e-10 <= s.Qk[k] && s.Qk[k] <= s.Dk[k] + 1e-10))
          ++out.sandwich_violations;
    }

    const double D0 = tr.samples.front().D;
    const double DOmega = diameter(p.omega);
    const double rate = DOmega + 2.0 * n * p.K * std::sin(p.alpha);
    const double zeta = D0 + 0.45 * (kPi - D0);
    const double dt_sample = tr.samples[1].t - tr.samples[0].t;
    const double tol_fd = 10.0 * (p.K * n + DOmega) * dt_sample;
    for (const auto& s : tr.samples) {
      if (s.D > zeta) break;
      if (s.D - (D0 + rate * s.t) > tol_fd) ++out.growth_violations;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// criterion 4: randomized falsification of the sorted sine chains

Digraph strongly_connected_random(int n, Rng& rng, double extra_p) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::set<std::pair<int, int>> arcs;
  for (int i = 0; i < n; ++i) arcs.insert({perm[i], perm[(i + 1) % n]});
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j && rng.bernoulli(extra_p)) arcs.insert({j, i});
  Digraph g;
  g.n = n;
  g.arcs.assign(arcs.begin(), arcs.end());
  return g;
}

bool criterion_sine_chains(std::string& detail) {
  auto t0 = std::chrono::steady_clock::now();
  struct Cell {
    double gamma, eta;
  };
  const Cell cells[] = {{2.0, 3.0}, {0.95 * kPi, 10.0}, {kPi / 2.0, 2.5}};
  long configs = 0, violations = 0;
  Rng rng(555001);
  for (const Cell& cell : cells)
    for (int n0 = 2; n0 <= 5; ++n0)
      for (int rep = 0; rep < 100000; ++rep) {
        Digraph g = strongly_connected_random(n0, rng, 0.3);
        std::vector<double> th(n0);
        for (double& x : th) x = rng.uniform(0.0, cell.gamma * 0.9999);
        std::vector<int> all(n0);
        std::iota(all.begin(), all.end(), 0);
        std::vector<int> order = order_layer(th, all);
        std::vector<double> sorted(n0);
        for (int i = 0; i < n0; ++i) sorted[i] = th[order[i]];
        auto nb = sorted_layer_neighbors(g, order);
        ++configs;
        if (!sine_chain_check(sorted, nb, cell.eta, cell.gamma, 1e-12)) ++violations;
      }
  double dt = seconds_since(t0);
  char buf[140];
  std::snprintf(buf, sizeof buf, "%ld configs over 12 cells, %ld violations, %.1fs", configs,
                violations, dt);
  detail = buf;
  return violations == 0;
}

// ---------------------------------------------------------------------------
// criteria 6-8: certified scenario grid through the full pipeline

struct GridOutcome {
  long scenarios = 0;
  long monitor_failures = 0;
  long theorem_failures = 0;
  long decay_failures = 0;
  double worst_seconds = 0;
  std::string first_failure;
};

GridOutcome run_certified_grid() {
  struct Shape {
    const char* name;
    Digraph g;
  };
  const std::vector<Shape> shapes = {
      {"pair", {2, {{0, 1}, {1, 0}}}},
      {"chain2", {2, {{0, 1}}}},
      {"ring3", {3, {{0, 1}, {1, 2}, {2, 0}}}},
      {"ring3+chord", {3, {{0, 1}, {1, 2}, {2, 0}, {0, 2}}}},
      {"pair+sink", {3, {{0, 1}, {1, 0}, {0, 2}, {1, 2}}}},
      {"pair+tail", {3, {{0, 1}, {1, 0}, {1, 2}}}},
      {"chain3", {3, {{0, 1}, {1, 2}}}},
      {"ring4", {4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}}},
      {"full4",
       {4, {{0, 1}, {0, 2}, {0, 3}, {1, 0}, {1, 2}, {1, 3}, {2, 0}, {2, 1}, {2, 3}, {3, 0},
            {3, 1}, {3, 2}}}},
      {"ring3+sink", {4, {{0, 1}, {1, 2}, {2, 0}, {2, 3}}}},
      {"pair+two-sinks", {4, {{0, 1}, {1, 0}, {0, 2}, {1, 3}}}},
      {"pair+chain2", {4, {{0, 1}, {1, 0}, {1, 2}, {2, 3}}}},
      {"pair+fork-chain", {4, {{0, 1}, {1, 0}, {0, 2}, {2, 3}}}},
  };

  GridOutcome out;
  int idx = 0;
  for (const auto& shape : shapes)
    for (int amode = 0; amode < 2; ++amode) {
      Scenario s;
      s.graph = shape.g;
      s.omega.kind = VectorSpec::Kind::uniform;
      s.omega.lo = -0.5;
      s.omega.hi = 0.5;
      s.theta0.kind = VectorSpec::Kind::uniform_arc;
      s.theta0.width = 0.9 * kPi;
      if (amode == 0) s.alpha = 0.0;  // otherwise auto: alpha_max / 2
      s.safety = 1.1;
      s.seed = 7000 + idx;
      ++idx;

      auto t0 = std::chrono::steady_clock::now();
      RunResult r = run_scenario(s);
      out.worst_seconds = std::max(out.worst_seconds, seconds_since(t0));
      ++out.scenarios;

      auto note = [&](const char* what) {
        if (out.first_failure.empty())
          out.first_failure = std::string(shape.name) + (amode ? "/auto-alpha" : "/alpha=0") +
                              ": " + what;
      };

      bool monitors_ok = r.report.contains("monitor") && r.report["monitor"].is_array();
      if (monitors_ok)
        for (const auto& m : r.report["monitor"]) {
          if (m.value("pass", false) == false) monitors_ok = false;
          if (m.contains("pass_sc") && m["pass_sc"] == false) monitors_ok = false;
        }
      if (!monitors_ok) {
        ++out.monitor_failures;
        note("monitor");
      }

      bool theorem_ok = r.report.contains("theorem") && r.report["theorem"].value("pass", false);
      if (!theorem_ok) {
        ++out.theorem_failures;
        note("certification");
      }

      bool decay_ok = r.report.contains("decay") && r.report["decay"].value("pass", false) &&
                      r.report["decay"].value("C2", 0.0) > 0.0 &&
                      r.report["decay"].value("r2", 0.0) >= 0.95;
      if (!decay_ok) {
        ++out.decay_failures;
        note("decay fit");
      }
    }
  return out;
}

// Independent linearized rate for the symmetric pair: the locked difference
// delta* solves 2w = 2K cos(a) sin(delta*), found by bisection; perturbations
// relax at 2K cos(a) cos(delta*).
bool pair_decay_rate_matches() {
  const double K = 5.0, alpha = 0.25, w = 0.3;
  const double lam = 2.0 * K * std::cos(alpha);
  double lo = 0.0, hi = kPi / 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (2.0 * w - lam * std::sin(mid) > 0 ? lo : hi) = mid;
  }
  const double rate = lam * std::cos(0.5 * (lo + hi));

  Digraph g{2, {{0, 1}, {1, 0}}};
  SystemParams p;
  p.omega = {-w, w};
  p.K = K;
  p.alpha = alpha;
  Trajectory tr = integrate(g, p, {-0.5, 0.5}, 3.5);
  DecayFit fit = fit_frequency_decay(tr, 0.5);
  return fit.pass && std::abs(fit.C2 - rate) / rate < 0.10;
}

// ---------------------------------------------------------------------------
// criterion 9: determinism and exact CSV round-trip

bool criterion_determinism(std::string& detail) {
  nlohmann::json base = {{"graph", {{"n", 3}, {"arcs", {{1, 2}, {2, 3}, {3, 1}, {1, 3}}}}},
                         {"omega", {{"uniform", {-0.4, 0.4}}}},
                         {"theta0", {{"uniform_arc", 2.0}}},
                         {"alpha", 0.1},
                         {"K", 2.0},
                         {"t_end", 4.0},
                         {"seed", 424242}};
  Scenario s = scenario_from_json(base);
  RunResult a = run_scenario(s);
  RunResult b = run_scenario(s);
  std::string csv_a = trajectory_to_csv(a.trajectory);
  bool identical = csv_a == trajectory_to_csv(b.trajectory);

  std::istringstream in(csv_a);
  Trajectory back = trajectory_from_csv(in);
  bool roundtrip = trajectory_to_csv(back) == csv_a &&
                   back.samples.size() == a.trajectory.samples.size();
  if (roundtrip)
    for (size_t i = 0; i < back.samples.size(); ++i) {
      const auto& x = a.trajectory.samples[i];
      const auto& y = back.samples[i];
      if (y.t != x.t || y.D != x.D || y.Domega != x.Domega || y.Dk != x.Dk || y.Qk != x.Qk)
        roundtrip = false;
      for (size_t v = 0; v < y.psi.size(); ++v)
        if (y.theta(static_cast<int>(v)) != x.theta(static_cast<int>(v))) roundtrip = false;
    }

  SweepSpec spec;
  spec.base = base;
  spec.axes = {{"seed", {nlohmann::json(1), nlohmann::json(2), nlohmann::json(3),
                         nlohmann::json(4)}}};
  spec.parallelism = 1;
  std::string serial = sweep_summary_csv(run_sweep(spec));
  spec.parallelism = 4;
  bool sweep_stable = serial == sweep_summary_csv(run_sweep(spec));

  detail = std::string("rerun bytes ") + (identical ? "identical" : "DIFFER") +
           ", reload " + (roundtrip ? "exact" : "INEXACT") + ", sweep " +
           (sweep_stable ? "order-independent" : "ORDER-DEPENDENT");
  return identical && roundtrip && sweep_stable;
}

int g_failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
  std::printf("[%d/9] %-46s %s  %s\n", idx, name, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

}  // namespace

int main() {
  std::printf("acceptance gate: 9 criteria\n");

  std::string detail;
  report(1, "digraph oracles (exhaustive + randomized)", criterion_graph_oracles(detail), detail);
  report(2, "coefficient recursion / closed form / mirror", criterion_coefficients(detail),
         detail);

  SuiteOutcome suite = run_trajectory_suite();
  {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%ld trajectories, %ld samples, %ld violations (slack 1e-10)",
                  suite.trajectories, suite.samples, suite.sandwich_violations);
    report(3, "barycenter sandwich on random trajectories",
           suite.trajectories >= 100 && suite.sandwich_violations == 0, buf);
  }

  report(4, "sorted sine chain inequalities", criterion_sine_chains(detail), detail);

  {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%ld trajectories, %ld violations of the linear bound",
                  suite.trajectories, suite.growth_violations);
    report(5, "linear diameter growth bound", suite.growth_violations == 0, buf);
  }

  GridOutcome grid = run_certified_grid();
  {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%ld scenarios, %ld failures, worst %.1fs/run%s%s",
                  grid.scenarios, grid.monitor_failures, grid.worst_seconds,
                  grid.first_failure.empty() ? "" : "; first: ",
                  grid.first_failure.c_str());
    report(6, "per-layer spread monitor on certified grid",
           grid.scenarios >= 20 && grid.monitor_failures == 0 && grid.worst_seconds < 60.0, buf);

    std::snprintf(buf, sizeof buf, "%ld scenarios, %ld failures%s%s", grid.scenarios,
                  grid.theorem_failures, grid.first_failure.empty() ? "" : "; first: ",
                  grid.first_failure.c_str());
    report(7, "lock-in certification end-to-end", grid.theorem_failures == 0, buf);

    bool pair_rate = pair_decay_rate_matches();
    std::snprintf(buf, sizeof buf,
                  "%ld scenarios, %ld fit failures; symmetric pair rate %s (10%% tol)",
                  grid.scenarios, grid.decay_failures, pair_rate ? "matches" : "DIVERGES");
    report(8, "exponential frequency decay", grid.decay_failures == 0 && pair_rate, buf);
  }

  report(9, "determinism and CSV round-trip", criterion_determinism(detail), detail);

  std::printf("%s\n", g_failures == 0 ? "acceptance: ALL PASS" : "acceptance: FAILURES");
  return g_failures == 0 ? 0 : 1;
}
