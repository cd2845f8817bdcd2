#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pgsbm/labels.hpp"

namespace pgsbm {

class Graph;

/// Number of off-diagonal community pairs, K choose 2.
constexpr int num_block_pairs(int K) { return K * (K - 1) / 2; }

/// Column of the off-diagonal pair {k, l} (1-based labels, k != l) in the
/// row-major upper-triangle ordering (1,2), (1,3), ..., (K-1,K).
constexpr int block_pair_index(int k, int l, int K) {
  if (k > l) {
    const int t = k;
    k = l;
    l = t;
  }
  return (k - 1) * (2 * K - k) / 2 + (l - k - 1);
}

/// Row index of node pair (i, j), i < j, in lexicographic order.
constexpr long pair_row(long i, long j, long n) { return i * (2 * n - i - 1) / 2 + (j - i - 1); }

/// Dense logistic design for a label vector. Rows are node pairs in
/// lexicographic order; columns are the off-diagonal block effects followed
/// by the n node intercepts. Within-community rows carry no block entry.
struct DesignMatrix {
  Eigen::MatrixXd x;
  int num_nodes = 0;
  int num_communities = 0;
  LabelVector sigma;

  int gamma_col(int k, int l) const { return block_pair_index(k, l, num_communities); }
  int eta_col(int v) const { return num_block_pairs(num_communities) + v; }
  long row(int i, int j) const { return pair_row(i, j, num_nodes); }
};

/// Throws UsageError when K < 2, fewer than two labels are present, or the
/// label vector length differs from the node count.
DesignMatrix build_design(const Graph& graph, const LabelVector& sigma);
DesignMatrix build_design(int num_nodes, const LabelVector& sigma);

/// Design with the K diagonal block columns retained: block columns cover
/// all k <= l in row-major order, then the n intercept columns.
Eigen::MatrixXd build_unreduced_design(int num_nodes, const LabelVector& sigma);

/// Column of block (k, l), k <= l, in the unreduced design.
int unreduced_block_col(int k, int l, int K);

/// Rank from singular values, with tolerance 1e-9 times the largest one.
int numeric_rank(const Eigen::MatrixXd& m);

struct Identifiability {
  bool identifiable = true;
  /// First community with fewer than two members (1-based), 0 if none.
  int deficient_community = 0;
};

Identifiability check_identifiability(const LabelVector& sigma);

/// For each community k, the largest absolute residual over rows of
/// 2 b_kk + sum_{l != k} b_kl - sum_{v in k} c_v on the unreduced design.
std::vector<double> verify_column_dependencies(const Graph& graph, const LabelVector& sigma);

}  // namespace pgsbm
