#pragma once

#include <optional>
#include <vector>

#include "synclab/digraph.hpp"
#include "synclab/dynamics.hpp"

namespace synclab {

// n (n-1) ... (n-j+1). Throws Overflow past uint64 range; A(n,0) = 1.
std::uint64_t falling_factorial(int n, int j);

// The comparison coefficients come in two flavours: on a strongly connected
// graph the recursion only ever sees the component size N0, while on a layered
// graph the same recursion runs with the full vertex count N and a per-layer
// size N_k.
enum class CoeffMode { strongly_connected, layered };

struct ComboCoefficients {
  int layer = 0;
  int N = 0;      // effective total size entering the recursion
  int Nk = 0;     // layer size
  double eta = 0;
  CoeffMode mode = CoeffMode::strongly_connected;
  // 0-based: abar[l-1] holds the coefficient attached to sorted position l.
  // abar.back() == 0 and aunder.front() == 0 by construction.
  std::vector<double> abar;
  std::vector<double> aunder;
};

// Both the backward recursion and the closed-form sum are evaluated (in long
// double) and cross-checked to <= 1 ulp before returning; integer eta stays
// exact in double up to the sizes used here.
ComboCoefficients coefficients(int N, int Nk, double eta, CoeffMode mode, int layer = 0);

// Vertex ids of `layer` sorted by phase ascending, ties broken by vertex id.
std::vector<int> order_layer(const std::vector<double>& theta, const std::vector<int>& layer);

struct Barycenters {
  // upper[l-1] = weighted mean sweeping down from the top phase; the layer's
  // upper barycenter is upper.front(). lower mirrors from the bottom phase;
  // the lower barycenter is lower.back().
  std::vector<double> upper;
  std::vector<double> lower;
};

// theta_sorted: layer phases ascending, size coeffs.Nk.
Barycenters barycenters(const ComboCoefficients& coeffs, const std::vector<double>& theta_sorted);

struct QResult {
  std::vector<double> theta_bar;    // per-layer upper barycenter
  std::vector<double> theta_under;  // per-layer lower barycenter
  std::vector<double> Q;            // Q[k] = max_{i<=k} bar - min_{i<=k} under
};

// pre: theta.size() == decomp vertex count (DimensionMismatch otherwise).
// coeffs_per_layer.size() == depth+1.
QResult q_quantity(const NodeDecomposition& decomp,
                   const std::vector<ComboCoefficients>& coeffs_per_layer,
                   const std::vector<double>& theta);

std::vector<ComboCoefficients> layer_coefficients(const NodeDecomposition& decomp, double eta);

struct SineChainWitness {
  int n = 0;          // 1-based start index of the failing chain
  bool mirrored = false;
  double lhs = 0;
  double rhs = 0;
};

// Verifies, for every suffix start n, the telescoping bound
//   sum_{i=n}^{N0} eta^{i-n} min_{j in N_i, j<=i} sin(th_j - th_i)
//     <= sin(th_{kbar_n} - th_{N0})
// together with the mirrored (max / prefix) version. Positions are 1-based in
// the sorted layer; neighbors[i] lists sorted positions (0-based vector index)
// adjacent to position i+1. Vertices with no lower (resp. higher) neighbor
// contribute 0 to the chain. pre: diameter < gamma, else PreconditionViolated.
bool sine_chain_check(const std::vector<double>& theta_sorted,
                      const std::vector<std::vector<int>>& neighbors, double eta, double gamma,
                      double slack = 0, SineChainWitness* witness = nullptr);

// In-neighbor sets re-indexed to sorted positions of one layer; arcs leaving
// the layer are dropped.
std::vector<std::vector<int>> sorted_layer_neighbors(const Digraph& g,
                                                     const std::vector<int>& layer_sorted);

// Position of layer k+1's barycenters against the running extremes of layers
// 0..k: 1 = supplies neither extreme, 2 = supplies both (new max and new min),
// 3 = new max only, 4 = new min only. On ties the lowest label consistent with
// some attribution wins, so exact equality degrades toward case 1/2.
int classify_case(const QResult& q, int k);
int classify_case(const NodeDecomposition& decomp,
                  const std::vector<ComboCoefficients>& coeffs_per_layer,
                  const std::vector<double>& theta, int k);

// Fills Dk, Qk, case_label on every sample.
void annotate_trajectory(Trajectory& tr, const NodeDecomposition& decomp,
                         const std::vector<ComboCoefficients>& coeffs_per_layer);

}  // namespace synclab
