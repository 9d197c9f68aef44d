// Command line front end: simulate single scenarios, decompose influence
// graphs, evaluate coupling/frustration conditions, stress the sorted sine
// chain inequalities, run parameter sweeps, and pretty-print saved reports.
// Exit code 0 iff every check the invocation requested passed; 1 when a
// requested check failed; 2 on configuration or I/O errors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "synclab/combo.hpp"
#include "synclab/digraph.hpp"
#include "synclab/dynamics.hpp"
#include "synclab/errors.hpp"
#include "synclab/framework.hpp"
#include "synclab/harness.hpp"

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr int kExitCheckFailed = 1;
constexpr int kExitError = 2;

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw synclab::InvalidConfig("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

// Numbers that JSON cannot carry come back as strings, matching the report
// files written by the harness.
nlohmann::json json_real(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

nlohmann::json params_json(const synclab::FrameworkParams& fp) {
  return {{"N", fp.N},           {"d", fp.d},     {"D0", fp.D0},
          {"zeta", fp.zeta},     {"gamma", fp.gamma}, {"eta", fp.eta},
          {"beta", fp.beta},     {"c", json_real(fp.c)}, {"Dinf", fp.Dinf},
          {"DOmega", fp.DOmega}};
}

nlohmann::json ids_1based(const std::vector<int>& vs) {
  nlohmann::json a = nlohmann::json::array();
  for (int v : vs) a.push_back(v + 1);
  return a;
}

void emit(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

// --- simulate ---------------------------------------------------------------

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir) {
  std::string base = std::filesystem::path(scenario_path).parent_path().string();
  if (base.empty()) base = ".";
  synclab::Scenario sc = synclab::scenario_from_json(load_json(scenario_path), base);
  synclab::RunResult r = synclab::run_scenario(sc);
  if (!out_dir.empty()) synclab::persist_run(r, sc, out_dir);
  emit(r.report);
  return r.status == "PASS" ? 0 : kExitCheckFailed;
}

// --- decompose ---------------------------------------------------------------

int cmd_decompose(const std::string& graph_path) {
  synclab::Digraph g = synclab::digraph_from_json(load_json(graph_path));
  g.validate();
  bool spanning = synclab::has_spanning_tree(g);
  synclab::NodeDecomposition nd = synclab::node_decomposition(g, false);
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : nd.layers) layers.push_back(ids_1based(layer));
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& group : nd.sublayers) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& part : group) parts.push_back(ids_1based(part));
    subs.push_back(parts);
  }
  nlohmann::json max_nodes = nlohmann::json::array();
  for (const auto& comp : synclab::maximum_nodes(g)) max_nodes.push_back(ids_1based(comp));
  emit({{"n", g.n},
        {"has_spanning_tree", spanning},
        {"maximum_nodes", max_nodes},
        {"d", nd.depth()},
        {"layers", layers},
        {"sublayers", subs}});
  // Without a spanning tree the peeling is still printed but is not the
  // canonical decomposition, so flag it on the exit code.
  return spanning ? 0 : kExitCheckFailed;
}

// --- check-conditions ---------------------------------------------------------

int cmd_check_conditions(const std::string& graph_path, const std::string& omega_path,
                         double alpha, std::optional<double> K_flag,
                         std::optional<double> dinf, double D0) {
  synclab::Digraph g = synclab::digraph_from_json(load_json(graph_path));
  g.validate();
  nlohmann::json wj = load_json(omega_path);
  if (!wj.is_array())
    throw synclab::InvalidConfig("omega file must hold a JSON array of reals");
  std::vector<double> omega = wj.get<std::vector<double>>();
  if (static_cast<int>(omega.size()) != g.n)
    throw synclab::DimensionMismatch("omega length does not match vertex count");

  synclab::NodeDecomposition nd = synclab::node_decomposition(g);
  double DOmega = omega.empty() ? 0.0
                                : *std::max_element(omega.begin(), omega.end()) -
                                      *std::min_element(omega.begin(), omega.end());
  synclab::FrameworkParams fp = synclab::derive_params(
      D0, g.n, nd.depth(), DOmega, std::nullopt, std::nullopt, std::nullopt, dinf);
  synclab::AdmissibleRegion region = synclab::admissible_region(fp);

  nlohmann::json checks = nlohmann::json::array();
  bool all = true;
  auto add = [&](const std::string& name, bool pass, double value, double bound) {
    checks.push_back({{"name", name},
                      {"pass", pass},
                      {"value", json_real(value)},
                      {"bound", json_real(bound)}});
    all = all && pass;
  };

  add("alpha_below_alpha_max", alpha >= 0 && alpha < region.alpha_max, alpha, region.alpha_max);

  double K = 0;
  std::string K_source;
  if (K_flag) {
    K = *K_flag;
    K_source = "flag";
  } else if (alpha >= 0 && alpha < region.alpha_max) {
    double kmin = region.K_min(alpha);
    K = kmin > 0 ? 1.1 * kmin : 1.1;  // same auto rule as the scenario runner
    K_source = "auto";
  }

  if (!K_source.empty()) {
    add("K_positive", K > 0, K, 0.0);
    add("target_plus_alpha_below_quarter_circle", fp.Dinf + alpha < kPi / 2, fp.Dinf + alpha,
        kPi / 2);
    double line = std::numeric_limits<double>::infinity();
    if (K > 0 && alpha >= 0 && alpha < kPi / 2)
      line = region.X * (fp.DOmega / (K * std::cos(alpha)) + 2.0 * fp.N * std::tan(alpha));
    add("coupling_constraint_line", region.admissible(K, alpha), line, 1.0);
  } else {
    all = false;  // no feasible K exists at this frustration
  }

  nlohmann::json out = {{"params", params_json(fp)},
                        {"region", {{"X", json_real(region.X)}, {"alpha_max", region.alpha_max}}},
                        {"alpha", alpha},
                        {"checks", checks},
                        {"pass", all}};
  if (!K_source.empty()) {
    out["K"] = json_real(K);
    out["K_source"] = K_source;
    if (alpha >= 0 && alpha < region.alpha_max) out["K_min"] = json_real(region.K_min(alpha));
  }
  emit(out);
  return all ? 0 : kExitCheckFailed;
}

// --- check-lemma31 -------------------------------------------------------------

// Random strongly connected digraph: a cycle through a shuffled vertex order
// plus Bernoulli extra arcs.
synclab::Digraph random_layer_graph(int n, double extra_p, std::mt19937_64& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::set<std::pair<int, int>> arcs;
  for (int i = 0; i < n; ++i) arcs.insert({perm[i], perm[(i + 1) % n]});
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (i != j && coin(rng) < extra_p) arcs.insert({j, i});
  synclab::Digraph g;
  g.n = n;
  g.arcs.assign(arcs.begin(), arcs.end());
  return g;
}

int cmd_check_lemma31(long samples, int n0, double eta, double gamma, std::uint64_t seed,
                      double slack, double extra_p) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, gamma * 0.9999);
  long violations = 0;
  nlohmann::json first = nullptr;
  std::vector<int> all(n0);
  std::iota(all.begin(), all.end(), 0);
  for (long rep = 0; rep < samples; ++rep) {
    synclab::Digraph g = random_layer_graph(n0, extra_p, rng);
    std::vector<double> th(n0);
    for (double& x : th) x = phase(rng);
    std::vector<int> order = synclab::order_layer(th, all);
    std::vector<double> sorted(n0);
    for (int i = 0; i < n0; ++i) sorted[i] = th[order[i]];
    auto nb = synclab::sorted_layer_neighbors(g, order);
    synclab::SineChainWitness w;
    if (!synclab::sine_chain_check(sorted, nb, eta, gamma, slack, &w)) {
      ++violations;
      if (first.is_null())
        first = {{"sample", rep},
                 {"chain_start", w.n},
                 {"mirrored", w.mirrored},
                 {"lhs", json_real(w.lhs)},
                 {"rhs", json_real(w.rhs)},
                 {"phases_sorted", sorted}};
    }
  }
  emit({{"samples", samples},
        {"n", n0},
        {"eta", eta},
        {"gamma", gamma},
        {"slack", slack},
        {"violations", violations},
        {"first_witness", first}});
  return violations == 0 ? 0 : kExitCheckFailed;
}

// --- sweep ---------------------------------------------------------------------

int cmd_sweep(const std::string& spec_path, const std::string& out_flag) {
  nlohmann::json j = load_json(spec_path);
  if (!j.is_object() || !j.contains("base"))
    throw synclab::InvalidConfig("sweep spec must be an object with a \"base\" scenario");

  synclab::SweepSpec spec;
  spec.base = j.at("base");

  // Graph paths inside the base scenario are relative to the spec file, but
  // sweep cells are parsed with no base directory; resolve here.
  if (spec.base.contains("graph") && spec.base["graph"].is_object() &&
      spec.base["graph"].contains("path")) {
    std::filesystem::path p = spec.base["graph"]["path"].get<std::string>();
    if (p.is_relative())
      spec.base["graph"]["path"] =
          (std::filesystem::path(spec_path).parent_path() / p).string();
  }

  if (j.contains("axes")) {
    const nlohmann::json& axes = j.at("axes");
    if (axes.is_array()) {
      for (const auto& ax : axes) {
        if (!ax.is_array() || ax.size() != 2 || !ax.at(0).is_string() || !ax.at(1).is_array())
          throw synclab::InvalidConfig("array-form axis must be [\"field\", [values...]]");
        spec.axes.emplace_back(ax.at(0).get<std::string>(),
                               std::vector<nlohmann::json>(ax.at(1).begin(), ax.at(1).end()));
      }
    } else if (axes.is_object()) {
      // nlohmann objects iterate in sorted key order, so this is deterministic.
      for (const auto& [name, values] : axes.items()) {
        if (!values.is_array())
          throw synclab::InvalidConfig("axis " + name + " must list its values in an array");
        spec.axes.emplace_back(name, std::vector<nlohmann::json>(values.begin(), values.end()));
      }
    } else {
      throw synclab::InvalidConfig("\"axes\" must be an object or an array of pairs");
    }
  }

  if (j.contains("parallelism")) spec.parallelism = j.at("parallelism").get<int>();
  if (j.contains("out")) spec.out_dir = j.at("out").get<std::string>();
  if (!out_flag.empty()) spec.out_dir = out_flag;

  synclab::SweepSummary summary = synclab::run_sweep(spec);
  std::cout << synclab::sweep_summary_csv(summary);
  bool all = std::all_of(summary.rows.begin(), summary.rows.end(),
                         [](const synclab::SweepRow& r) { return r.status == "PASS"; });
  return all ? 0 : kExitCheckFailed;
}

// --- report ----------------------------------------------------------------------

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

void print_check_table(const nlohmann::json& checks) {
  for (const auto& c : checks)
    std::printf("  %-34s %s  value=%s bound=%s\n", c.at("name").get<std::string>().c_str(),
                c.at("pass").get<bool>() ? "PASS" : "FAIL", c.at("value").dump().c_str(),
                c.at("bound").dump().c_str());
}

int cmd_report(const std::string& run_dir, const std::string& sweep_dir) {
  if (!run_dir.empty()) {
    nlohmann::json rep = load_json((std::filesystem::path(run_dir) / "report.json").string());
    std::string status = rep.value("status", "UNKNOWN");
    std::printf("status: %s\n", status.c_str());
    std::printf("n=%d d=%d seed=%s\n", rep.value("n", 0), rep.value("d", 0),
                rep.contains("seed") ? rep["seed"].dump().c_str() : "?");
    std::printf("alpha=%s K=%s t_end=%s\n", rep["alpha"].dump().c_str(), rep["K"].dump().c_str(),
                rep["t_end"].dump().c_str());
    if (rep.contains("theorem")) {
      const auto& th = rep["theorem"];
      std::printf("certification (t_star=%s):\n", th["t_star"].dump().c_str());
      print_check_table(th["checks"]);
    }
    if (rep.contains("monitor"))
      for (const auto& m : rep["monitor"])
        std::printf("  monitor layer %d: %s  max_residual=%s tol=%s\n", m.at("k").get<int>(),
                    m.at("pass").get<bool>() ? "PASS" : "FAIL",
                    m.at("max_residual").dump().c_str(), m.at("tol").dump().c_str());
    if (rep.contains("decay")) {
      const auto& dec = rep["decay"];
      if (dec.contains("C2"))
        std::printf("  frequency decay: %s  C1=%s C2=%s r2=%s points=%d\n",
                    dec.value("pass", false) ? "PASS" : "FAIL", dec["C1"].dump().c_str(),
                    dec["C2"].dump().c_str(), dec["r2"].dump().c_str(), dec.value("points", 0));
      else
        std::printf("  frequency decay: %s\n", dec.dump().c_str());
    }
    if (rep.contains("failing") && !rep["failing"].empty())
      std::printf("failing: %s\n", rep["failing"].dump().c_str());
    return status == "PASS" ? 0 : kExitCheckFailed;
  }

  std::ifstream in(std::filesystem::path(sweep_dir) / "summary.csv");
  if (!in) throw synclab::InvalidConfig("cannot open summary.csv under " + sweep_dir);
  std::string line;
  std::size_t status_col = 0;
  bool header = true, all = true;
  while (std::getline(in, line)) {
    std::cout << line << '\n';
    std::vector<std::string> cells = split_csv_row(line);
    if (header) {
      header = false;
      status_col = std::find(cells.begin(), cells.end(), "status") - cells.begin();
      if (status_col >= cells.size())
        throw synclab::InvalidConfig("summary.csv has no status column");
      continue;
    }
    if (status_col >= cells.size() || cells[status_col] != "PASS") all = false;
  }
  return all ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frustrated oscillator networks: simulate, decompose, certify"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  auto* sim = app.add_subcommand("simulate", "run one scenario and print its report");
  sim->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "directory for scenario.json, trajectory.csv, report.json");

  std::string graph_path;
  auto* dec = app.add_subcommand("decompose", "print the layer decomposition of a graph");
  dec->add_option("--graph", graph_path, "graph JSON file {\"n\", \"arcs\"} with 1-based ids")
      ->required()
      ->check(CLI::ExistingFile);

  std::string cc_graph, cc_omega;
  double cc_alpha = 0;
  double cc_d0 = 0.9 * kPi;
  std::optional<double> cc_K, cc_dinf;
  auto* cc = app.add_subcommand("check-conditions",
                                "evaluate the admissible-region conditions for (K, alpha)");
  cc->add_option("--graph", cc_graph, "graph JSON file")->required()->check(CLI::ExistingFile);
  cc->add_option("--omega", cc_omega, "JSON array of natural frequencies")
      ->required()
      ->check(CLI::ExistingFile);
  cc->add_option("--alpha", cc_alpha, "frustration to test")->required();
  cc->add_option("--K", cc_K, "coupling to test (default: 1.1 * K_min(alpha))");
  cc->add_option("--dinf", cc_dinf, "target terminal diameter override");
  cc->add_option("--d0", cc_d0, "assumed initial phase diameter")
      ->capture_default_str();

  long l31_samples = 0;
  int l31_n = 0;
  double l31_eta = 0, l31_gamma = 0, l31_slack = 1e-12, l31_extra = 0.3;
  std::uint64_t l31_seed = 1;
  auto* l31 = app.add_subcommand("check-lemma31",
                                 "randomized falsification of the sorted sine chain bounds");
  l31->add_option("--samples", l31_samples, "number of random configurations")
      ->required()
      ->check(CLI::PositiveNumber);
  l31->add_option("--n", l31_n, "layer size")->required()->check(CLI::Range(2, 64));
  l31->add_option("--eta", l31_eta, "chain growth base")->required();
  l31->add_option("--gamma", l31_gamma, "diameter bound, in (0, pi)")->required();
  l31->add_option("--seed", l31_seed, "RNG seed")->capture_default_str();
  l31->add_option("--slack", l31_slack, "tolerated floating point slack")->capture_default_str();
  l31->add_option("--extra-arc-prob", l31_extra, "density of extra arcs")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));

  std::string sweep_spec, sweep_out;
  auto* sw = app.add_subcommand("sweep", "run a cartesian parameter sweep");
  sw->add_option("--spec", sweep_spec, "sweep spec JSON: {base, axes, out?, parallelism?}")
      ->required()
      ->check(CLI::ExistingFile);
  sw->add_option("--out", sweep_out, "output directory (overrides the spec)");

  std::string rep_run, rep_sweep;
  auto* rp = app.add_subcommand("report", "pretty-print a saved run or sweep");
  auto* rp_run = rp->add_option("--run", rep_run, "run directory holding report.json");
  auto* rp_sw = rp->add_option("--sweep", rep_sweep, "sweep directory holding summary.csv");
  rp_run->excludes(rp_sw);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(scenario_path, out_dir);
    if (dec->parsed()) return cmd_decompose(graph_path);
    if (cc->parsed())
      return cmd_check_conditions(cc_graph, cc_omega, cc_alpha, cc_K, cc_dinf, cc_d0);
    if (l31->parsed())
      return cmd_check_lemma31(l31_samples, l31_n, l31_eta, l31_gamma, l31_seed, l31_slack,
                               l31_extra);
    if (sw->parsed()) return cmd_sweep(sweep_spec, sweep_out);
    if (rp->parsed()) {
      if (rep_run.empty() && rep_sweep.empty())
        throw synclab::InvalidConfig("report needs --run or --sweep");
      return cmd_report(rep_run, rep_sweep);
    }
  } catch (const synclab::Infeasible& e) {
    // A provably empty admissible region is a verdict, not a usage error.
    emit({{"pass", false}, {"infeasible", e.what()}});
    return kExitCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
