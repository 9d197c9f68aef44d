#include "synclab/combo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace synclab {

std::uint64_t falling_factorial(int n, int j) {
  if (n < 1 || j < 0 || j > n) throw InvalidConfig("falling factorial needs n >= 1, 0 <= j <= n");
  std::uint64_t r = 1;
  for (int t = 0; t < j; ++t) {
    std::uint64_t f = static_cast<std::uint64_t>(n - t);
    if (r > std::numeric_limits<std::uint64_t>::max() / f)
      throw Overflow("falling factorial exceeds 64 bits");
    r *= f;
  }
  return r;
}

namespace {

long double falling_factorial_ld(int n, int j) {
  long double r = 1;
  for (int t = 0; t < j; ++t) r *= static_cast<long double>(n - t);
  return r;
}

// |a - b| within one representable double step of a.
bool within_one_ulp(double a, double b) {
  if (a == b) return true;
  return b == std::nextafter(a, b);
}

}  // namespace

ComboCoefficients coefficients(int N, int Nk, double eta, CoeffMode mode, int layer) {
  if (N < 1 || Nk < 1 || Nk > N) throw InvalidConfig("coefficient sizes need 1 <= Nk <= N");
  if (!(eta > 0) || !std::isfinite(eta)) throw InvalidConfig("eta must be positive and finite");
  if (mode == CoeffMode::strongly_connected && N != Nk)
    throw InvalidConfig("strongly connected coefficients take the component as the whole graph");

  ComboCoefficients c;
  c.layer = layer;
  c.N = N;
  c.Nk = Nk;
  c.eta = eta;
  c.mode = mode;

  const long double e = eta;
  std::vector<long double> abar(Nk), aunder(Nk);
  abar[Nk - 1] = 0;
  for (int l = Nk; l >= 2; --l)  // 1-based positions; abar[l-1] belongs to position l
    abar[l - 2] = e * (2 * N - l + 2) * (abar[l - 1] + 1);
  aunder[0] = 0;
  for (int l = 1; l <= Nk - 1; ++l)
    aunder[l] = e * (l + 1 + 2 * N - Nk) * (aunder[l - 1] + 1);

  c.abar.resize(Nk);
  c.aunder.resize(Nk);
  for (int p = 0; p < Nk; ++p) {
    c.abar[p] = static_cast<double>(abar[p]);
    c.aunder[p] = static_cast<double>(aunder[p]);
    if (!std::isfinite(c.abar[p]) || !std::isfinite(c.aunder[p]))
      throw Overflow("coefficient magnitude exceeds double range");
  }

  // Independent closed forms; a silent divergence here would invalidate every
  // downstream Q computation, so it is a hard failure.
  for (int l = 2; l <= Nk; ++l) {
    long double sum = 0, epow = 1;
    for (int j = 1; j <= Nk - l + 1; ++j) {
      epow *= e;
      sum += epow * falling_factorial_ld(2 * N - l + 2, j);
    }
    if (!within_one_ulp(c.abar[l - 2], static_cast<double>(sum)))
      throw Error("coefficient recursion disagrees with closed form");
  }
  for (int l = 1; l <= Nk - 1; ++l) {
    long double sum = 0, epow = 1;
    for (int j = 1; j <= l; ++j) {
      epow *= e;
      sum += epow * falling_factorial_ld(l + 1 + 2 * N - Nk, j);
    }
    if (!within_one_ulp(c.aunder[l], static_cast<double>(sum)))
      throw Error("coefficient recursion disagrees with closed form");
  }
  return c;
}

std::vector<int> order_layer(const std::vector<double>& theta, const std::vector<int>& layer) {
  std::vector<int> order = layer;
  for (int v : order)
    if (v < 0 || v >= static_cast<int>(theta.size()))
      throw DimensionMismatch("layer vertex outside phase vector");
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (theta[a] != theta[b]) return theta[a] < theta[b];
    return a < b;
  });
  return order;
}

Barycenters barycenters(const ComboCoefficients& coeffs, const std::vector<double>& theta_sorted) {
  const int Nk = coeffs.Nk;
  if (static_cast<int>(theta_sorted.size()) != Nk)
    throw DimensionMismatch("sorted layer size does not match coefficients");
  Barycenters b;
  b.upper.resize(Nk);
  b.lower.resize(Nk);
  b.upper[Nk - 1] = theta_sorted[Nk - 1];
  for (int p = Nk - 2; p >= 0; --p)
    b.upper[p] = (coeffs.abar[p] * b.upper[p + 1] + theta_sorted[p]) / (coeffs.abar[p] + 1);
  b.lower[0] = theta_sorted[0];
  for (int p = 1; p < Nk; ++p)
    b.lower[p] = (coeffs.aunder[p] * b.lower[p - 1] + theta_sorted[p]) / (coeffs.aunder[p] + 1);
  return b;
}

std::vector<ComboCoefficients> layer_coefficients(const NodeDecomposition& decomp, double eta) {
  const int N = static_cast<int>(decomp.layer_of.size());
  std::vector<ComboCoefficients> out;
  out.reserve(decomp.layers.size());
  for (size_t k = 0; k < decomp.layers.size(); ++k)
    out.push_back(coefficients(N, static_cast<int>(decomp.layers[k].size()), eta,
                               CoeffMode::layered, static_cast<int>(k)));
  return out;
}

QResult q_quantity(const NodeDecomposition& decomp,
                   const std::vector<ComboCoefficients>& coeffs_per_layer,
                   const std::vector<double>& theta) {
  if (theta.size() != decomp.layer_of.size())
    throw DimensionMismatch("phase vector does not match decomposition");
  if (coeffs_per_layer.size() != decomp.layers.size())
    throw DimensionMismatch("coefficient list does not match layer count");

  QResult q;
  const size_t L = decomp.layers.size();
  q.theta_bar.resize(L);
  q.theta_under.resize(L);
  q.Q.resize(L);
  double run_max = 0, run_min = 0;
  for (size_t k = 0; k < L; ++k) {
    auto order = order_layer(theta, decomp.layers[k]);
    std::vector<double> sorted(order.size());
    for (size_t p = 0; p < order.size(); ++p) sorted[p] = theta[order[p]];
    auto b = barycenters(coeffs_per_layer[k], sorted);
    q.theta_bar[k] = b.upper.front();
    q.theta_under[k] = b.lower.back();
    run_max = k == 0 ? q.theta_bar[k] : std::max(run_max, q.theta_bar[k]);
    run_min = k == 0 ? q.theta_under[k] : std::min(run_min, q.theta_under[k]);
    q.Q[k] = run_max - run_min;
  }
  return q;
}

std::vector<std::vector<int>> sorted_layer_neighbors(const Digraph& g,
                                                     const std::vector<int>& layer_sorted) {
  std::vector<int> pos_of(g.n, -1);
  for (size_t p = 0; p < layer_sorted.size(); ++p) pos_of[layer_sorted[p]] = static_cast<int>(p);
  std::vector<std::vector<int>> nb(layer_sorted.size());
  for (auto [j, i] : g.arcs)
    if (pos_of[i] != -1 && pos_of[j] != -1) nb[pos_of[i]].push_back(pos_of[j]);
  for (auto& v : nb) std::sort(v.begin(), v.end());
  return nb;
}

bool sine_chain_check(const std::vector<double>& theta_sorted,
                      const std::vector<std::vector<int>>& neighbors, double eta, double gamma,
                      double slack, SineChainWitness* witness) {
  const int n = static_cast<int>(theta_sorted.size());
  if (neighbors.size() != theta_sorted.size())
    throw DimensionMismatch("neighbor list does not match layer size");
  if (n == 0) return true;
  if (!std::is_sorted(theta_sorted.begin(), theta_sorted.end()))
    throw PreconditionViolated("layer phases must be sorted ascending");
  if (diameter(theta_sorted) >= gamma)
    throw PreconditionViolated("layer diameter must stay below gamma");

  auto fail = [&](int start, bool mirrored, double lhs, double rhs) {
    if (witness) *witness = {start, mirrored, lhs, rhs};
    return false;
  };

  // Forward: suffix chains are bounded by a single sine of the widest gap.
  for (int start = 1; start <= n; ++start) {
    double lhs = 0, weight = 1;
    int kbar = n + 1;
    for (int i = start; i <= n; ++i) {
      double term = 0;
      bool any = false;
      for (int j : neighbors[i - 1]) {
        kbar = std::min(kbar, j + 1);
        if (j + 1 <= i) {
          double s = std::sin(theta_sorted[j] - theta_sorted[i - 1]);
          term = any ? std::min(term, s) : s;
          any = true;
        }
      }
      lhs += weight * term;
      weight *= eta;
    }
    double rhs = kbar <= n ? std::sin(theta_sorted[kbar - 1] - theta_sorted[n - 1]) : 0.0;
    if (lhs > rhs + slack) return fail(start, false, lhs, rhs);
  }

  // Mirrored: prefix chains of maxima bounded from below.
  for (int start = 1; start <= n; ++start) {
    double lhs = 0, weight = 1;
    int kunder = 0;
    for (int i = start; i >= 1; --i) {  // descending so the weight is a running product
      double term = 0;
      bool any = false;
      for (int j : neighbors[i - 1]) {
        kunder = std::max(kunder, j + 1);
        if (j + 1 >= i) {
          double s = std::sin(theta_sorted[j] - theta_sorted[i - 1]);
          term = any ? std::max(term, s) : s;
          any = true;
        }
      }
      lhs += weight * term;
      weight *= eta;
    }
    double rhs = kunder >= 1 ? std::sin(theta_sorted[kunder - 1] - theta_sorted[0]) : 0.0;
    if (lhs < rhs - slack) return fail(start, true, lhs, rhs);
  }
  return true;
}

int classify_case(const QResult& q, int k) {
  if (k < 0 || k + 1 >= static_cast<int>(q.theta_bar.size()))
    throw DimensionMismatch("case label needs layers k and k+1");
  double run_max = q.theta_bar[0], run_min = q.theta_under[0];
  for (int i = 1; i <= k; ++i) {
    run_max = std::max(run_max, q.theta_bar[i]);
    run_min = std::min(run_min, q.theta_under[i]);
  }
  const double bar = q.theta_bar[k + 1], under = q.theta_under[k + 1];
  const bool top_gt = bar > run_max, top_ge = bar >= run_max;
  const bool bot_lt = under < run_min, bot_le = under <= run_min;
  if (!top_gt && !bot_lt) return 1;
  if (top_ge && bot_le) return 2;
  if (top_ge && !bot_lt) return 3;
  return 4;
}

int classify_case(const NodeDecomposition& decomp,
                  const std::vector<ComboCoefficients>& coeffs_per_layer,
                  const std::vector<double>& theta, int k) {
  return classify_case(q_quantity(decomp, coeffs_per_layer, theta), k);
}

void annotate_trajectory(Trajectory& tr, const NodeDecomposition& decomp,
                         const std::vector<ComboCoefficients>& coeffs_per_layer) {
  for (auto& s : tr.samples) {
    // psi differs from theta by a uniform shift, which every quantity here is
    // invariant under; using psi keeps tiny diameters at full precision.
    auto dia = diameters(decomp, s.psi);
    s.Dk = std::move(dia.Dk);
    auto q = q_quantity(decomp, coeffs_per_layer, s.psi);
    s.Qk = std::move(q.Q);
    s.case_label.clear();
    for (int k = 0; k + 1 < static_cast<int>(decomp.layers.size()); ++k)
      s.case_label.push_back(classify_case(q, k));
  }
}

}  // namespace synclab
