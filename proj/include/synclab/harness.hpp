#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synclab/digraph.hpp"
#include "synclab/dynamics.hpp"
#include "synclab/framework.hpp"

namespace synclab {

// Random arborescence from a shuffled root plus Bernoulli extra arcs; the
// result always contains a spanning tree, deterministically per seed.
Digraph random_spanning_tree_digraph(int n, double extra_arc_prob, std::uint64_t seed);

struct VectorSpec {
  enum class Kind { values, uniform, identical, uniform_arc };
  Kind kind = Kind::values;
  std::vector<double> values;
  double lo = 0, hi = 0;   // uniform range
  double value = 0;        // identical
  double width = 0;        // uniform_arc: arc [0, width), width < pi

  std::vector<double> realize(int n, std::uint64_t seed, std::uint64_t stream) const;
};

struct Scenario {
  Digraph graph;
  VectorSpec omega;   // natural frequencies
  VectorSpec theta0;  // initial phases
  // nullopt = auto: alpha_max/2, K = safety*K_min (>= safety when K_min = 0),
  // t_end found by doubling a probe horizon until every layer is well inside
  // its target.
  std::optional<double> alpha;
  std::optional<double> K;
  std::optional<double> t_end;
  std::optional<double> dinf;
  double safety = 1.1;
  SolverConfig solver;
  std::uint64_t seed = 0;
};

// `graph` may be inline JSON or {"path": "g.json"} relative to base_dir.
Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
nlohmann::json scenario_to_json(const Scenario& s);

struct RunResult {
  Trajectory trajectory;
  NodeDecomposition decomp;
  FrameworkParams fp;
  bool fp_valid = false;  // false when condition arithmetic degenerates
  double alpha = 0;
  double K = 0;
  double t_end = 0;
  double t_star = -1;
  nlohmann::json report;
  // PASS: all requested checks hold. PRECONDITION_UNMET: simulation ran but
  // (K, alpha) is outside the admissible region, so no verdict on the theorem.
  // FAIL: admissible parameters with a violated check.
  std::string status;
};

RunResult run_scenario(const Scenario& s);

// Writes scenario.json, trajectory.csv, report.json under dir.
void persist_run(const RunResult& r, const Scenario& s, const std::string& dir);

struct SweepSpec {
  nlohmann::json base;  // scenario JSON; axes override fields per cell
  // axis = {field path, list of JSON values}; cells = cartesian product
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes;
  std::string out_dir;
  int parallelism = 0;  // 0 = hardware concurrency; capped by SYNC_LAB_THREADS
};

struct SweepRow {
  std::vector<std::string> axis_values;
  std::string status;  // PASS / PRECONDITION_UNMET / FAIL / ERROR
  double t_star = -1;
  double C2 = 0;
  std::string detail;
};

struct SweepSummary {
  std::vector<std::string> axis_names;
  std::vector<SweepRow> rows;  // sorted by axis value tuple
};

// Runs every cell (guard: <= 1e5 cells), isolating per-cell failures: a thrown
// NonFinite marks the row FAIL, any other exception ERROR, and the sweep
// continues. Writes summary.csv plus per-cell outputs under out_dir/runs/.
SweepSummary run_sweep(const SweepSpec& spec);

std::string sweep_summary_csv(const SweepSummary& s);

int thread_cap(int requested);  // applies SYNC_LAB_THREADS

}  // namespace synclab
