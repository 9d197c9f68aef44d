#include "synclab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "synclab/combo.hpp"
#include "synclab/rng.hpp"

namespace synclab {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no inf/nan literals; keep them readable instead of null.
nlohmann::json json_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                  const char* what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return it.key() == k; });
    if (!known) throw InvalidConfig(std::string("unknown ") + what + " field: " + it.key());
  }
}

VectorSpec vector_spec_from_json(const nlohmann::json& j, const char* what) {
  VectorSpec v;
  if (j.is_array()) {
    v.kind = VectorSpec::Kind::values;
    v.values = j.get<std::vector<double>>();
    return v;
  }
  if (j.is_object()) {
    require_keys(j, {"uniform", "identical", "uniform_arc"}, what);
    if (j.size() != 1) throw InvalidConfig(std::string(what) + " spec needs exactly one generator");
    if (j.contains("uniform")) {
      const auto& r = j.at("uniform");
      if (!r.is_array() || r.size() != 2)
        throw InvalidConfig(std::string(what) + ".uniform must be [lo, hi]");
      v.kind = VectorSpec::Kind::uniform;
      v.lo = r[0].get<double>();
      v.hi = r[1].get<double>();
    } else if (j.contains("identical")) {
      v.kind = VectorSpec::Kind::identical;
      v.value = j.at("identical").get<double>();
    } else {
      v.kind = VectorSpec::Kind::uniform_arc;
      v.width = j.at("uniform_arc").get<double>();
    }
    return v;
  }
  throw InvalidConfig(std::string(what) + " must be an array or a generator object");
}

nlohmann::json vector_spec_to_json(const VectorSpec& v) {
  switch (v.kind) {
    case VectorSpec::Kind::values:
      return v.values;
    case VectorSpec::Kind::uniform:
      return {{"uniform", {v.lo, v.hi}}};
    case VectorSpec::Kind::identical:
      return {{"identical", v.value}};
    case VectorSpec::Kind::uniform_arc:
      return {{"uniform_arc", v.width}};
  }
  throw InvalidConfig("corrupt vector spec");
}

std::optional<double> optional_real(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const auto& v = j.at(key);
  if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
  if (!v.is_number()) throw InvalidConfig(std::string(key) + " must be a number or \"auto\"");
  return v.get<double>();
}

nlohmann::json optional_to_json(const std::optional<double>& v) {
  if (v) return *v;
  return "auto";
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputUnwritable("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw OutputUnwritable("failed while writing " + path);
}

}  // namespace

Digraph random_spanning_tree_digraph(int n, double extra_arc_prob, std::uint64_t seed) {
  if (n < 1) throw InvalidConfig("generator needs n >= 1");
  if (!(extra_arc_prob >= 0.0 && extra_arc_prob <= 1.0))
    throw InvalidConfig("extra arc probability must lie in [0, 1]");

  Rng rng(seed);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(static_cast<std::uint64_t>(i) + 1)]);

  // Arborescence rooted at order[0], arcs pointing along influence direction,
  // so the root reaches everyone and a spanning tree is guaranteed.
  std::set<std::pair<int, int>> arcs;
  for (int i = 1; i < n; ++i) {
    int parent = order[rng.below(static_cast<std::uint64_t>(i))];
    arcs.insert({parent, order[i]});
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (a == b || arcs.count({a, b})) continue;
      if (rng.bernoulli(extra_arc_prob)) arcs.insert({a, b});
    }

  Digraph g;
  g.n = n;
  g.arcs.assign(arcs.begin(), arcs.end());
  g.validate();
  return g;
}

std::vector<double> VectorSpec::realize(int n, std::uint64_t seed, std::uint64_t stream) const {
  if (n < 1) throw InvalidConfig("vector spec needs n >= 1");
  std::vector<double> out;
  switch (kind) {
    case Kind::values:
      if (static_cast<int>(values.size()) != n)
        throw DimensionMismatch("vector literal length does not match the graph size");
      out = values;
      break;
    case Kind::uniform: {
      if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw InvalidConfig("uniform range needs finite lo <= hi");
      Rng rng(seed, stream);
      out.resize(n);
      for (double& v : out) v = rng.uniform(lo, hi);
      break;
    }
    case Kind::identical:
      out.assign(n, value);
      break;
    case Kind::uniform_arc: {
      if (!(width >= 0.0 && width < kPi))
        throw InvalidInitialDiameter("initial arc width must lie in [0, pi)");
      Rng rng(seed, stream);
      out.resize(n);
      for (double& v : out) v = rng.uniform(0.0, width);
      break;
    }
  }
  for (double v : out)
    if (!std::isfinite(v)) throw NonFinite("vector spec produced a non-finite entry");
  return out;
}

Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_object()) throw InvalidConfig("scenario must be a JSON object");
  require_keys(j,
               {"graph", "omega", "theta0", "alpha", "K", "t_end", "dinf", "safety", "solver",
                "seed"},
               "scenario");
  if (!j.contains("graph")) throw InvalidConfig("scenario needs a graph");

  Scenario s;
  const auto& gj = j.at("graph");
  if (gj.is_object() && gj.contains("path")) {
    std::string path = gj.at("path").get<std::string>();
    std::filesystem::path full = std::filesystem::path(base_dir) / path;
    std::ifstream in(full);
    if (!in) throw InvalidConfig("cannot read graph file " + full.string());
    nlohmann::json parsed;
    try {
      in >> parsed;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidConfig("graph file " + full.string() + " is not valid JSON: " + e.what());
    }
    s.graph = digraph_from_json(parsed);
  } else {
    s.graph = digraph_from_json(gj);
  }

  if (j.contains("omega")) s.omega = vector_spec_from_json(j.at("omega"), "omega");
  else {
    s.omega.kind = VectorSpec::Kind::identical;
    s.omega.value = 0.0;
  }
  if (j.contains("theta0")) s.theta0 = vector_spec_from_json(j.at("theta0"), "theta0");
  else {
    s.theta0.kind = VectorSpec::Kind::uniform_arc;
    s.theta0.width = 0.9 * kPi;
  }

  s.alpha = optional_real(j, "alpha");
  s.K = optional_real(j, "K");
  s.t_end = optional_real(j, "t_end");
  s.dinf = optional_real(j, "dinf");
  s.safety = j.value("safety", 1.1);
  if (!(s.safety > 0) || !std::isfinite(s.safety))
    throw InvalidConfig("safety factor must be finite and positive");
  s.seed = j.value("seed", std::uint64_t{0});

  if (j.contains("solver")) {
    const auto& sj = j.at("solver");
    require_keys(sj, {"method", "dt", "abs_tol", "samples"}, "solver");
    std::string method = sj.value("method", "rk4");
    if (method == "rk4") s.solver.method = SolverConfig::Method::rk4;
    else if (method == "dp45") s.solver.method = SolverConfig::Method::dp45;
    else throw InvalidConfig("solver.method must be rk4 or dp45");
    s.solver.dt = sj.value("dt", 0.0);
    s.solver.abs_tol = sj.value("abs_tol", 1e-10);
    s.solver.samples = sj.value("samples", 256);
  }
  return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["graph"] = digraph_to_json(s.graph);
  j["omega"] = vector_spec_to_json(s.omega);
  j["theta0"] = vector_spec_to_json(s.theta0);
  j["alpha"] = optional_to_json(s.alpha);
  j["K"] = optional_to_json(s.K);
  j["t_end"] = optional_to_json(s.t_end);
  j["dinf"] = optional_to_json(s.dinf);
  j["safety"] = s.safety;
  j["solver"] = {{"method", s.solver.method == SolverConfig::Method::rk4 ? "rk4" : "dp45"},
                 {"dt", s.solver.dt},
                 {"abs_tol", s.solver.abs_tol},
                 {"samples", s.solver.samples}};
  j["seed"] = s.seed;
  return j;
}

namespace {

nlohmann::json fp_to_json(const FrameworkParams& fp) {
  return {{"N", fp.N},       {"d", fp.d},         {"D0", fp.D0},   {"zeta", fp.zeta},
          {"gamma", fp.gamma}, {"eta", fp.eta},   {"beta", fp.beta}, {"c", json_real(fp.c)},
          {"Dinf", fp.Dinf}, {"DOmega", fp.DOmega}};
}

nlohmann::json theorem_to_json(const TheoremReport& rep) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : rep.checks)
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"value", json_real(c.value)},
                      {"bound", json_real(c.bound)}});
  nlohmann::json entries = nlohmann::json::array();
  for (double t : rep.layer_entry_times) entries.push_back(json_real(t));
  return {{"pass", rep.pass},
          {"t_star", json_real(rep.t_star)},
          {"layer_entry_times", entries},
          {"checks", checks}};
}

// Doubling probe: find a horizon where every cumulative layer diameter sits
// well inside its certified target, then pad by 25%. Integration cost scales
// with t/dt, so cap both the doubling count and the total step budget.
double probe_t_end(const Digraph& g, const SystemParams& p, const std::vector<double>& theta0,
                   const NodeDecomposition& decomp, const AdmissibleRegion& region,
                   const SolverConfig& cfg) {
  const double dt_eff = cfg.dt > 0 ? cfg.dt : dt_max_rule(p, g.n);
  double t_p = 1000.0 * dt_eff;
  for (int round = 0; round < 20; ++round) {
    Trajectory probe = integrate(g, p, theta0, t_p, cfg);
    Diameters dk = diameters(decomp, probe.samples.back().psi);
    bool settled = true;
    for (int k = 0; k <= region.fp.d && settled; ++k)
      settled = dk.Dk[k] <= 0.2 * region.layer_target(k);
    if (settled) return 1.25 * t_p;
    if (t_p / dt_eff > 5e6) break;  // step budget; return the cap and let checks speak
    t_p *= 2.0;
  }
  return t_p;
}

}  // namespace

RunResult run_scenario(const Scenario& s) {
  s.graph.validate();
  const int n = s.graph.n;

  RunResult r;
  r.decomp = node_decomposition(s.graph);
  const int d = r.decomp.depth();

  SystemParams p;
  p.omega = s.omega.realize(n, s.seed, 1);
  p.alpha = 0.0;
  p.K = 1.0;
  std::vector<double> theta0 = s.theta0.realize(n, s.seed, 2);

  const double D0 = diameter(theta0);
  const double DOmega = diameter(p.omega);

  nlohmann::json report;
  report["n"] = n;
  report["d"] = d;
  report["seed"] = s.seed;
  report["D0"] = D0;
  report["DOmega"] = DOmega;

  AdmissibleRegion region;
  try {
    r.fp = derive_params(D0, n, d, DOmega, std::nullopt, std::nullopt, std::nullopt, s.dinf);
    region = admissible_region(r.fp);
    r.fp_valid = true;
    report["derived"] = fp_to_json(r.fp);
    report["region"] = {{"X", json_real(region.X)}, {"alpha_max", region.alpha_max}};
  } catch (const Error& e) {
    r.fp_valid = false;
    report["derived"] = {{"error", e.what()}};
  }

  r.alpha = s.alpha ? *s.alpha : (r.fp_valid ? 0.5 * region.alpha_max : 0.0);
  if (s.K) {
    r.K = *s.K;
  } else if (r.fp_valid) {
    double kmin = region.K_min(r.alpha);  // Infeasible propagates for alpha >= alpha_max
    report["K_min"] = kmin;
    r.K = kmin > 0 ? s.safety * kmin : s.safety;
  } else {
    r.K = 1.0;
  }
  p.alpha = r.alpha;
  p.K = r.K;
  p.validate(n);
  report["alpha"] = r.alpha;
  report["K"] = r.K;

  const bool certifiable = r.fp_valid && region.admissible(r.K, r.alpha);
  report["admissible"] = certifiable;

  if (s.t_end) {
    r.t_end = *s.t_end;
  } else if (certifiable) {
    r.t_end = probe_t_end(s.graph, p, theta0, r.decomp, region, s.solver);
  } else {
    // No certified horizon to aim for: a flat multiple of the sampling window.
    const double dt_eff = s.solver.dt > 0 ? s.solver.dt : dt_max_rule(p, n);
    r.t_end = 20.0 * s.solver.samples * dt_eff;
  }
  report["t_end"] = r.t_end;

  r.trajectory = integrate(s.graph, p, theta0, r.t_end, s.solver);
  if (r.fp_valid)
    annotate_trajectory(r.trajectory, r.decomp, layer_coefficients(r.decomp, r.fp.eta));

  std::vector<std::string> failing;
  if (!certifiable) {
    r.status = "PRECONDITION_UNMET";
  } else {
    bool ok = true;

    TheoremReport rep = verify_theorem(r.fp, region, r.trajectory, r.decomp);
    r.t_star = rep.t_star;
    report["theorem"] = theorem_to_json(rep);
    ok = ok && rep.pass;
    for (const auto& c : rep.checks)
      if (!c.pass) failing.push_back(c.name);

    nlohmann::json monitors = nlohmann::json::array();
    for (int k = 0; k <= d; ++k) {
      MonitorResult m = monitor_q_inequality(r.trajectory, r.decomp, r.fp, k);
      nlohmann::json mj = {{"k", k},
                           {"max_residual", json_real(m.max_residual)},
                           {"tol", m.tol},
                           {"pass", m.pass}};
      if (m.has_sc_form) {
        mj["max_residual_sc"] = json_real(m.max_residual_sc);
        mj["pass_sc"] = m.pass_sc;
      }
      monitors.push_back(mj);
      bool mok = m.pass && (!m.has_sc_form || m.pass_sc);
      ok = ok && mok;
      if (!mok) failing.push_back("monitor_layer_" + std::to_string(k));
    }
    report["monitor"] = monitors;

    if (rep.t_star >= 0) {
      try {
        DecayFit fit = fit_frequency_decay(r.trajectory, rep.t_star);
        report["decay"] = {{"C1", json_real(fit.C1)}, {"C2", json_real(fit.C2)},
                           {"r2", json_real(fit.r2)}, {"points", fit.points},
                           {"t_begin", fit.t_begin},  {"t_end", fit.t_end},
                           {"pass", fit.pass}};
        ok = ok && fit.pass;
        if (!fit.pass) failing.push_back("decay_fit");
      } catch (const DegenerateData&) {
        // Frequencies already identical: nothing to fit, nothing to fail.
        report["decay"] = {{"skipped", "frequency spread is identically zero"}};
      } catch (const InsufficientSamples& e) {
        report["decay"] = {{"error", e.what()}};
        ok = false;
        failing.push_back("decay_fit");
      }
    }

    r.status = ok ? "PASS" : "FAIL";
  }

  report["failing"] = failing;
  report["status"] = r.status;
  r.report = std::move(report);
  return r;
}

void persist_run(const RunResult& r, const Scenario& s, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputUnwritable("cannot create directory " + dir + ": " + ec.message());
  std::filesystem::path base(dir);
  write_file((base / "scenario.json").string(), scenario_to_json(s).dump(2) + "\n");
  write_file((base / "trajectory.csv").string(), trajectory_to_csv(r.trajectory));
  write_file((base / "report.json").string(), r.report.dump(2) + "\n");
}

int thread_cap(int requested) {
  int cap = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("SYNC_LAB_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) cap = std::min<long>(cap, v);
  }
  return cap;
}

SweepSummary run_sweep(const SweepSpec& spec) {
  std::size_t cells = 1;
  for (const auto& axis : spec.axes) {
    if (axis.second.empty()) throw InvalidConfig("sweep axis " + axis.first + " has no values");
    cells *= axis.second.size();
    if (cells > 100000) throw InvalidConfig("sweep exceeds the 1e5 cell guard");
  }

  SweepSummary summary;
  for (const auto& axis : spec.axes) summary.axis_names.push_back(axis.first);
  summary.rows.resize(cells);

  // Cell i takes value index (i / stride) % size on each axis, last axis
  // fastest; rows keep that order, so output is independent of scheduling.
  std::vector<std::size_t> strides(spec.axes.size(), 1);
  for (std::size_t a = spec.axes.size(); a-- > 1;)
    strides[a - 1] = strides[a] * spec.axes[a].second.size();

  if (!spec.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(std::filesystem::path(spec.out_dir) / "runs", ec);
    if (ec)
      throw OutputUnwritable("cannot create directory " + spec.out_dir + ": " + ec.message());
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells) return;
      SweepRow& row = summary.rows[i];
      nlohmann::json cell = spec.base;
      for (std::size_t a = 0; a < spec.axes.size(); ++a) {
        const nlohmann::json& value =
            spec.axes[a].second[(i / strides[a]) % spec.axes[a].second.size()];
        std::string pointer = "/" + spec.axes[a].first;
        std::replace(pointer.begin(), pointer.end(), '.', '/');
        cell[nlohmann::json::json_pointer(pointer)] = value;
        row.axis_values.push_back(value.is_string() ? value.get<std::string>() : value.dump());
      }
      try {
        Scenario sc = scenario_from_json(cell);
        RunResult r = run_scenario(sc);
        row.status = r.status;
        row.t_star = r.t_star;
        if (r.report.contains("decay") && r.report["decay"].contains("C2") &&
            r.report["decay"]["C2"].is_number())
          row.C2 = r.report["decay"]["C2"].get<double>();
        const auto& failing = r.report["failing"];
        std::string joined;
        for (const auto& f : failing) joined += (joined.empty() ? "" : ";") + f.get<std::string>();
        row.detail = joined;
        if (!spec.out_dir.empty()) {
          char hex[24];
          std::snprintf(hex, sizeof hex, "%016llx",
                        static_cast<unsigned long long>(fnv1a(cell.dump())));
          std::string tag = std::string("cell-") + hex;
          persist_run(r, sc, (std::filesystem::path(spec.out_dir) / "runs" / tag).string());
        }
      } catch (const NonFinite& e) {
        row.status = "FAIL";
        row.detail = e.what();
      } catch (const std::exception& e) {
        row.status = "ERROR";
        row.detail = e.what();
      }
    }
  };

  int threads = std::min<std::size_t>(thread_cap(spec.parallelism), cells);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  if (!spec.out_dir.empty())
    write_file((std::filesystem::path(spec.out_dir) / "summary.csv").string(),
               sweep_summary_csv(summary));
  return summary;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string sweep_summary_csv(const SweepSummary& s) {
  std::ostringstream out;
  for (const auto& name : s.axis_names) out << csv_escape(name) << ',';
  out << "status,t_star,C2,detail\n";
  for (const auto& row : s.rows) {
    for (const auto& v : row.axis_values) out << csv_escape(v) << ',';
    out << row.status << ',' << fmt17(row.t_star) << ',' << fmt17(row.C2) << ','
        << csv_escape(row.detail) << '\n';
  }
  return out.str();
}

}  // namespace synclab
