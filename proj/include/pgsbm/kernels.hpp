#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pgsbm/design.hpp"
#include "pgsbm/labels.hpp"
#include "pgsbm/model.hpp"
#include "pgsbm/random.hpp"

// Pair-loop kernels of the sampler. Each has an OpenMP version (parallel over
// node rows, fixed-order reductions, so results do not depend on the thread
// count) and a serial reference used by the tests and the benchmark.

namespace pgsbm {

/// Precision matrix X' W X + I / tau2 in block form. The block-by-block part
/// is diagonal because each design row has at most one block entry.
struct BlockPrecision {
  Eigen::VectorXd gg;  // (K choose 2)
  Eigen::MatrixXd ge;  // (K choose 2) x n
  Eigen::MatrixXd ee;  // n x n

  int num_block_pairs() const { return static_cast<int>(gg.size()); }
  int num_nodes() const { return static_cast<int>(ee.rows()); }
  Eigen::MatrixXd dense() const;
};

/// softplus(g + eta_i + eta_j) for every pair and every block level g: level
/// 0 is the diagonal (g = 0), level 1 + block_pair_index(k, l) is gamma_kl.
/// Each level is a full symmetric n x n slab so rows are contiguous; the
/// diagonal holds 0.
struct SoftplusTable {
  Eigen::VectorXd gamma;
  Eigen::VectorXd eta;
  int num_nodes = 0;
  int levels = 0;
  std::vector<double> values;

  const double* row(int level, int i) const {
    return values.data() + (static_cast<std::size_t>(level) * num_nodes + i) * num_nodes;
  }
  bool matches(const Eigen::VectorXd& g, const Eigen::VectorXd& e) const {
    return g.size() == gamma.size() && e.size() == eta.size() && g == gamma && e == eta;
  }
  /// False when the slabs would exceed the memory cap.
  static bool fits(int num_nodes, int K);
};

/// K x K matrix of table levels.
Eigen::MatrixXi block_levels(int K);

namespace kernels {

void build_softplus_table(const Eigen::VectorXd& gamma, const Eigen::VectorXd& eta, int K,
                          SoftplusTable& table);

/// omega_ij ~ PG(1, s_ij) for all pairs; row i draws from key.derive(tag, i).
/// Result is symmetric with a zero diagonal.
void draw_omega(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                const Eigen::VectorXd& eta, const Rng& key, std::uint64_t tag, Eigen::MatrixXd& omega);
void draw_omega_serial(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                       const Eigen::VectorXd& eta, const Rng& key, std::uint64_t tag,
                       Eigen::MatrixXd& omega);

/// IRLS weights mu(1 - mu) and residuals A - mu at the current predictor.
void irls_weights(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                  const Eigen::VectorXd& eta, Eigen::MatrixXd& weights, Eigen::MatrixXd& residual);

/// X' W X + I / tau2 from symmetric pair weights, accumulated node by node.
BlockPrecision assemble_precision(const Eigen::MatrixXd& weights, const LabelVector& sigma,
                                  double tau2);
/// Same quantity from an explicit dense design (serial reference).
Eigen::MatrixXd assemble_precision_reference(const DesignMatrix& design, const Eigen::MatrixXd& weights,
                                             double tau2);

/// X' v for a symmetric pair vector v (zero diagonal).
Eigen::VectorXd design_transpose_times(const Eigen::MatrixXd& pair_values, const LabelVector& sigma);
Eigen::VectorXd design_transpose_times_reference(const DesignMatrix& design,
                                                 const Eigen::MatrixXd& pair_values);

/// A - 1/2 as a symmetric pair matrix (zero diagonal); X' of it is the
/// Polya-Gamma linear term.
Eigen::MatrixXd centered_adjacency(const ModelData& data);

double log_likelihood(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                      const Eigen::VectorXd& eta);
/// Same value read from a table built at (gamma, eta).
double log_likelihood(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                      const Eigen::VectorXd& eta, const SoftplusTable& table);
double log_likelihood_serial(const ModelData& data, const LabelVector& sigma,
                             const Eigen::MatrixXd& blocks, const Eigen::VectorXd& eta);

}  // namespace kernels
}  // namespace pgsbm
