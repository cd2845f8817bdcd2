#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "pgsbm/graph.hpp"
#include "pgsbm/labels.hpp"

namespace pgsbm {

/// Prior settings: beta ~ I(gamma <= 0) N(0, tau2 I), pi ~ Dir(alpha).
struct Hyperparams {
  int num_communities = 2;
  double tau2 = 25.0;
  std::vector<double> alpha;

  static Hyperparams defaults(int K);
  /// Throws UsageError on K < 2, tau2 <= 0, or a bad alpha vector.
  void validate() const;
};

/// Off-diagonal block log-odds (K choose 2 entries, all <= 0), node
/// intercepts, and community weights.
struct ModelParams {
  Eigen::VectorXd gamma;
  Eigen::VectorXd eta;
  Eigen::VectorXd pi;

  static ModelParams zeros(int num_nodes, int K);
};

/// Graph data laid out for the sampler's hot loops.
class ModelData {
 public:
  explicit ModelData(const Graph& graph);

  const Graph& graph() const { return *graph_; }
  int num_nodes() const { return n_; }
  bool edge(int i, int j) const { return adjacency_[static_cast<std::size_t>(i) * n_ + j] != 0; }
  const unsigned char* adjacency_row(int i) const {
    return adjacency_.data() + static_cast<std::size_t>(i) * n_;
  }
  /// A_ij - 1/2 off the diagonal, 0 on it.
  const Eigen::MatrixXd& centered_adjacency() const { return centered_; }

 private:
  const Graph* graph_;
  int n_;
  std::vector<unsigned char> adjacency_;
  Eigen::MatrixXd centered_;
};

/// K x K table of block log-odds with zeros on the diagonal.
Eigen::MatrixXd block_table(const Eigen::VectorXd& gamma, int K);

/// log(1 + exp(s)) without overflow.
inline double softplus(double s) {
  return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

/// sum_{i<j} A_ij s_ij - log(1 + exp(s_ij)), s_ij = gamma_{sigma_i sigma_j} + eta_i + eta_j.
double log_likelihood(const ModelData& data, const LabelVector& sigma, const ModelParams& params);

/// Pi-dependent terms: sum_k (N_k + alpha_k - 1) log pi_k.
double log_pi_terms(const LabelVector& sigma, const Eigen::VectorXd& pi, const Hyperparams& hyper);

/// -(|gamma|^2 + |eta|^2) / (2 tau2); -inf when some gamma > 0.
double log_beta_prior(const ModelParams& params, const Hyperparams& hyper);

/// Unnormalized joint log posterior of (sigma, beta, pi); -inf outside the
/// support (some N_k < 2 or gamma > 0).
double log_posterior(const ModelData& data, const LabelVector& sigma, const ModelParams& params,
                     const Hyperparams& hyper);

}  // namespace pgsbm
