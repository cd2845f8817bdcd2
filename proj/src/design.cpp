#include "pgsbm/design.hpp"

#include <algorithm>
#include <cmath>

#include "pgsbm/errors.hpp"
#include "pgsbm/graph.hpp"

namespace pgsbm {

namespace {

void check_design_input(int num_nodes, const LabelVector& sigma) {
  if (sigma.size() != num_nodes) throw UsageError("label vector length differs from node count");
  if (sigma.num_labels() < 2) throw UsageError("K >= 2 required");
  if (sigma.num_present() < 2) throw UsageError("at least two communities must be present");
}

}  // namespace

DesignMatrix build_design(const Graph& graph, const LabelVector& sigma) {
  return build_design(graph.num_nodes(), sigma);
}

DesignMatrix build_design(int n, const LabelVector& sigma) {
  check_design_input(n, sigma);
  const int K = sigma.num_labels();
  const int p = num_block_pairs(K);
  DesignMatrix d;
  d.num_nodes = n;
  d.num_communities = K;
  d.sigma = sigma;
  d.x = Eigen::MatrixXd::Zero(static_cast<long>(n) * (n - 1) / 2, p + n);
  long r = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++r) {
      if (sigma[i] != sigma[j]) d.x(r, block_pair_index(sigma[i], sigma[j], K)) = 1.0;
      d.x(r, p + i) = 1.0;
      d.x(r, p + j) = 1.0;
    }
  }
  return d;
}

int unreduced_block_col(int k, int l, int K) {
  if (k > l) std::swap(k, l);
  return (k - 1) * (2 * K - k + 2) / 2 + (l - k);
}

Eigen::MatrixXd build_unreduced_design(int n, const LabelVector& sigma) {
  if (sigma.size() != n) throw UsageError("label vector length differs from node count");
  const int K = sigma.num_labels();
  const int p = K * (K + 1) / 2;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<long>(n) * (n - 1) / 2, p + n);
  long r = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++r) {
      x(r, unreduced_block_col(sigma[i], sigma[j], K)) = 1.0;
      x(r, p + i) = 1.0;
      x(r, p + j) = 1.0;
    }
  }
  return x;
}

int numeric_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double tol = 1e-9 * s(0);
  return static_cast<int>((s.array() > tol).count());
}

Identifiability check_identifiability(const LabelVector& sigma) {
  for (int k = 1; k <= sigma.num_labels(); ++k) {
    if (sigma.size_of(k) < 2) return {false, k};
  }
  return {};
}

std::vector<double> verify_column_dependencies(const Graph& graph, const LabelVector& sigma) {
  const int n = graph.num_nodes();
  const int K = sigma.num_labels();
  const int p = K * (K + 1) / 2;
  const Eigen::MatrixXd x = build_unreduced_design(n, sigma);
  std::vector<double> residual(K, 0.0);
  for (int k = 1; k <= K; ++k) {
    for (long r = 0; r < x.rows(); ++r) {
      double lhs = 2.0 * x(r, unreduced_block_col(k, k, K));
      for (int l = 1; l <= K; ++l) {
        if (l != k) lhs += x(r, unreduced_block_col(k, l, K));
      }
      double rhs = 0.0;
      for (int v = 0; v < n; ++v) {
        if (sigma[v] == k) rhs += x(r, p + v);
      }
      residual[k - 1] = std::max(residual[k - 1], std::abs(lhs - rhs));
    }
  }
  return residual;
}

}  // namespace pgsbm
