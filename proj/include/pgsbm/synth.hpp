#pragma once

#include "pgsbm/graph.hpp"
#include "pgsbm/labels.hpp"
#include "pgsbm/model.hpp"
#include "pgsbm/random.hpp"

namespace pgsbm {

/// Two communities, each a complete kernel with a one-to-one crown.
/// Community 1 has an n1 kernel, community 2 an r*n1 kernel.
struct SpikeSpec {
  int n1 = 10;
  int r = 5;

  int num_nodes() const { return 2 * n1 + 2 * r * n1; }
  void validate() const;
};

struct Synthetic {
  Graph graph;
  LabelVector reference;
};

/// Node layout: community 1 kernel 0..n1-1, its crown n1..2n1-1, then the
/// community 2 kernel and crown. Kernel node i of community 1 is joined to
/// kernel nodes i*r .. i*r + r - 1 of community 2 (0-based).
Synthetic gen_spike(const SpikeSpec& spec);

/// Independent Bernoulli edges with logit P(A_ij) = gamma_{sigma_i sigma_j} + eta_i + eta_j.
Graph gen_sbm(int num_nodes, const LabelVector& sigma, const ModelParams& params, Rng& rng);

/// Power-law benchmark with planted communities. Zero caps select the
/// defaults max_degree = n/4, max_community = n/2.
struct BenchmarkSpec {
  int n = 100;
  double a = 2.0;   // degree exponent
  double b = 1.0;   // community-size exponent
  double mu = 0.4;  // between-community fraction of each node's stubs
  double avg_degree = 10.0;
  int max_degree = 0;
  int min_community = 5;
  int max_community = 0;
  int max_retries = 50;

  int effective_max_degree() const { return max_degree > 0 ? max_degree : n / 4; }
  int effective_max_community() const { return max_community > 0 ? max_community : n / 2; }
  void validate() const;
};

Synthetic gen_benchmark(const BenchmarkSpec& spec, Rng& rng);

/// Fraction of edges whose endpoints carry different labels.
double between_fraction(const Graph& graph, const LabelVector& labels);

}  // namespace pgsbm
