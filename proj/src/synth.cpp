#include "pgsbm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pgsbm/design.hpp"
#include "pgsbm/errors.hpp"

namespace pgsbm {

namespace {

using Edge = std::pair<int, int>;

int uniform_int(Rng& rng, int m) { return std::min(m - 1, static_cast<int>(rng.uniform() * m)); }

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) std::swap(v[i], v[uniform_int(rng, i + 1)]);
}

// Inverse-CDF draw from density proportional to x^-e on [lo, hi].
double power_law(double e, double lo, double hi, Rng& rng) {
  const double u = rng.uniform();
  if (std::abs(e - 1.0) < 1e-12) return lo * std::pow(hi / lo, u);
  const double a = std::pow(lo, 1.0 - e);
  const double b = std::pow(hi, 1.0 - e);
  return std::pow(a + u * (b - a), 1.0 / (1.0 - e));
}

// Integral of x^-s over [lo, hi].
double power_integral(double s, double lo, double hi) {
  if (std::abs(s - 1.0) < 1e-12) return std::log(hi / lo);
  return (std::pow(hi, 1.0 - s) - std::pow(lo, 1.0 - s)) / (1.0 - s);
}

double power_law_mean(double e, double lo, double hi) {
  return power_integral(e - 1.0, lo, hi) / power_integral(e, lo, hi);
}

// Lower cutoff giving the requested mean, by bisection (mean is increasing in lo).
double solve_min_degree(double e, double mean, double hi) {
  double lo = 1.0, up = hi;
  if (power_law_mean(e, lo, hi) >= mean) return lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + up);
    (power_law_mean(e, mid, hi) < mean ? lo : up) = mid;
  }
  return 0.5 * (lo + up);
}

// Rounds x to integers summing to total, giving the extra units to the
// largest fractional parts (lowest index on ties).
std::vector<int> largest_remainder(const std::vector<double>& x, long total) {
  std::vector<int> out(x.size());
  long sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += (out[i] = static_cast<int>(std::floor(x[i])));
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] - std::floor(x[a]) > x[b] - std::floor(x[b]);
  });
  for (std::size_t t = 0; sum < total && t < order.size(); ++t, ++sum) ++out[order[t]];
  return out;
}

std::vector<int> draw_degrees(const BenchmarkSpec& spec, Rng& rng) {
  const double hi = spec.effective_max_degree();
  const double lo = solve_min_degree(spec.a, spec.avg_degree, hi);
  std::vector<double> x(spec.n);
  for (double& v : x) v = power_law(spec.a, lo, hi, rng);
  for (int it = 0; it < 20; ++it) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / spec.n;
    if (std::abs(mean - spec.avg_degree) < 1e-9) break;
    for (double& v : x) v = std::clamp(v * spec.avg_degree / mean, 1.0, hi);
  }
  long total = std::lround(std::accumulate(x.begin(), x.end(), 0.0));
  if (total % 2 != 0) {
    long floors = 0;
    for (double v : x) floors += static_cast<long>(std::floor(v));
    total += total > floors ? -1 : 1;
  }
  return largest_remainder(x, total);
}

// Draws sizes until they sum to n; an overshooting last draw is redrawn.
bool draw_sizes(const BenchmarkSpec& spec, Rng& rng, std::vector<int>& sizes) {
  const int lo = spec.min_community;
  const int hi = spec.effective_max_community();
  sizes.clear();
  int sum = 0;
  while (sum < spec.n) {
    const int rest = spec.n - sum;
    if (rest < lo) return false;
    int s = 0;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      s = std::min(hi, static_cast<int>(std::floor(power_law(spec.b, lo, hi + 1.0, rng))));
      if (s <= rest && (rest - s == 0 || rest - s >= lo)) break;
      s = 0;
    }
    if (s == 0) return false;
    sizes.push_back(s);
    sum += s;
  }
  return sizes.size() >= 2;
}

std::uint64_t key(int u, int v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
}

// Configuration-model matching of a stub list. Pairs failing `ok` go to a
// residual list that is reshuffled, then repaired by swapping with already
// placed edges, for up to 100 passes. Unmatched stubs are discarded.
template <class Ok>
void match_stubs(std::vector<int> stubs, Rng& rng, std::unordered_set<std::uint64_t>& present,
                 std::vector<Edge>& edges, Ok ok) {
  std::vector<Edge> placed;
  auto valid = [&](int u, int v) { return u != v && ok(u, v) && !present.count(key(u, v)); };
  auto place = [&](int u, int v) {
    present.insert(key(u, v));
    placed.emplace_back(u, v);
  };
  for (int pass = 0; pass < 100 && stubs.size() >= 2; ++pass) {
    shuffle(stubs, rng);
    std::vector<int> residual;
    for (std::size_t t = 0; t + 1 < stubs.size(); t += 2) {
      const int u = stubs[t], v = stubs[t + 1];
      if (valid(u, v)) {
        place(u, v);
      } else if (!placed.empty()) {
        // Rewire with a random placed edge (x, y) into (u, x), (v, y).
        const std::size_t e = uniform_int(rng, static_cast<int>(placed.size()));
        auto [x, y] = placed[e];
        if (rng.uniform() < 0.5) std::swap(x, y);
        present.erase(key(x, y));
        if (valid(u, x) && valid(v, y) && key(u, x) != key(v, y)) {
          placed[e] = {u, x};
          present.insert(key(u, x));
          place(v, y);
        } else {
          present.insert(key(x, y));
          residual.push_back(u);
          residual.push_back(v);
        }
      } else {
        residual.push_back(u);
        residual.push_back(v);
      }
    }
    if (stubs.size() % 2 == 1) residual.push_back(stubs.back());
    stubs = std::move(residual);
  }
  edges.insert(edges.end(), placed.begin(), placed.end());
}

}  // namespace

void SpikeSpec::validate() const {
  if (n1 < 3) throw UsageError("spike n1 must be >= 3");
  if (r < 1) throw UsageError("spike r must be >= 1");
}

Synthetic gen_spike(const SpikeSpec& spec) {
  spec.validate();
  const int n1 = spec.n1;
  const int n2 = spec.r * n1;
  const int k2 = 2 * n1;  // first node of community 2
  std::vector<Edge> edges;
  auto kernel = [&](int start, int size) {
    for (int i = 0; i < size; ++i) {
      for (int j = i + 1; j < size; ++j) edges.emplace_back(start + i, start + j);
      edges.emplace_back(start + i, start + size + i);
    }
  };
  kernel(0, n1);
  kernel(k2, n2);
  for (int i = 0; i < n1; ++i) {
    for (int t = 0; t < spec.r; ++t) edges.emplace_back(i, k2 + i * spec.r + t);
  }
  std::vector<int> labels(spec.num_nodes(), 2);
  std::fill(labels.begin(), labels.begin() + k2, 1);
  return {Graph(spec.num_nodes(), edges), LabelVector(std::move(labels), 2)};
}

Graph gen_sbm(int num_nodes, const LabelVector& sigma, const ModelParams& params, Rng& rng) {
  const int K = sigma.num_labels();
  if (sigma.size() != num_nodes || params.eta.size() != num_nodes ||
      params.gamma.size() != num_block_pairs(K)) {
    throw UsageError("dimension mismatch in gen_sbm");
  }
  const Eigen::MatrixXd blocks = block_table(params.gamma, K);
  std::vector<Edge> edges;
  for (int i = 0; i < num_nodes; ++i) {
    for (int j = i + 1; j < num_nodes; ++j) {
      const double s = blocks(sigma[i] - 1, sigma[j] - 1) + params.eta(i) + params.eta(j);
      const double p = std::isinf(s) ? (s > 0 ? 1.0 : 0.0) : 1.0 / (1.0 + std::exp(-s));
      if (rng.uniform() < p) edges.emplace_back(i, j);
    }
  }
  return Graph(num_nodes, edges);
}

void BenchmarkSpec::validate() const {
  if (n < 4) throw UsageError("benchmark n must be >= 4");
  if (!(mu > 0.0 && mu < 1.0)) throw UsageError("mu must lie in (0, 1)");
  if (!(a > 0.0) || !(b > 0.0)) throw UsageError("power-law exponents must be positive");
  if (!(avg_degree >= 1.0) || avg_degree >= n) throw UsageError("avg-degree must lie in [1, n)");
  if (avg_degree > effective_max_degree()) throw UsageError("avg-degree exceeds max-degree");
  if (effective_max_degree() >= n) throw UsageError("max-degree must be < n");
  if (min_community < 2 || effective_max_community() < min_community) {
    throw UsageError("community size caps are inconsistent");
  }
  if (max_retries < 1) throw UsageError("max-retries must be >= 1");
}

Synthetic gen_benchmark(const BenchmarkSpec& spec, Rng& rng) {
  spec.validate();
  const int n = spec.n;
  for (int attempt = 0; attempt < spec.max_retries; ++attempt) {
    std::vector<int> degree = draw_degrees(spec, rng);
    std::vector<int> sizes;
    if (!draw_sizes(spec, rng, sizes)) continue;
    const int C = static_cast<int>(sizes.size());

    // Highest degrees first, each to a random community with room for its
    // internal degree.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int u, int v) { return degree[u] > degree[v]; });
    std::vector<int> room = sizes;
    std::vector<int> comm(n, -1);
    bool placed_all = true;
    std::vector<int> feasible;
    for (int v : order) {
      const int need = static_cast<int>(std::ceil((1.0 - spec.mu) * degree[v]));
      feasible.clear();
      for (int c = 0; c < C; ++c) {
        if (room[c] > 0 && sizes[c] - 1 >= need) feasible.push_back(c);
      }
      if (feasible.empty()) {
        placed_all = false;
        break;
      }
      const int c = feasible[uniform_int(rng, static_cast<int>(feasible.size()))];
      comm[v] = c;
      --room[c];
    }
    if (!placed_all) continue;

    // Between-community stubs: mu * degree, largest-remainder rounded.
    std::vector<double> want(n);
    long total = 0;
    for (int v = 0; v < n; ++v) {
      want[v] = spec.mu * degree[v];
      total += degree[v];
    }
    std::vector<int> ext = largest_remainder(want, std::lround(spec.mu * total));
    std::vector<int> in(n);
    for (int v = 0; v < n; ++v) {
      ext[v] = std::min(ext[v], degree[v]);
      in[v] = degree[v] - ext[v];
      if (in[v] > sizes[comm[v]] - 1) {
        ext[v] += in[v] - (sizes[comm[v]] - 1);
        in[v] = sizes[comm[v]] - 1;
      }
    }
    // Parity: each community's internal stubs and the external total must be even.
    for (int c = 0; c < C; ++c) {
      int sum = 0, top = -1;
      for (int v = 0; v < n; ++v) {
        if (comm[v] != c) continue;
        sum += in[v];
        if (top < 0 || in[v] > in[top]) top = v;
      }
      if (sum % 2 != 0) {
        --in[top];
        ++ext[top];
      }
    }
    if (std::accumulate(ext.begin(), ext.end(), 0L) % 2 != 0) {
      const int top = static_cast<int>(std::max_element(ext.begin(), ext.end()) - ext.begin());
      --ext[top];
    }

    std::unordered_set<std::uint64_t> present;
    std::vector<Edge> edges;
    for (int c = 0; c < C; ++c) {
      std::vector<int> stubs;
      for (int v = 0; v < n; ++v) {
        if (comm[v] == c) stubs.insert(stubs.end(), in[v], v);
      }
      match_stubs(std::move(stubs), rng, present, edges, [](int, int) { return true; });
    }
    std::vector<int> between;
    for (int v = 0; v < n; ++v) between.insert(between.end(), ext[v], v);
    match_stubs(std::move(between), rng, present, edges,
                [&](int u, int v) { return comm[u] != comm[v]; });

    // Communities in the reference are numbered by first appearance.
    std::vector<int> labels(n);
    for (int v = 0; v < n; ++v) labels[v] = comm[v] + 1;
    return {Graph(n, edges), remap(LabelVector(std::move(labels), C)).sigma};
  }
  throw UsageError("benchmark spec infeasible after " + std::to_string(spec.max_retries) + " retries");
}

double between_fraction(const Graph& graph, const LabelVector& labels) {
  const auto edges = graph.edges();
  if (edges.empty()) return 0.0;
  std::size_t between = 0;
  for (auto [u, v] : edges) between += labels[u] != labels[v] ? 1 : 0;
  return static_cast<double>(between) / static_cast<double>(edges.size());
}

}  // namespace pgsbm
