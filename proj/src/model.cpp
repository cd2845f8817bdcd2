#include "pgsbm/model.hpp"

#include <cmath>
#include <limits>

#include "pgsbm/design.hpp"
#include "pgsbm/errors.hpp"
#include "pgsbm/kernels.hpp"

namespace pgsbm {

Hyperparams Hyperparams::defaults(int K) {
  Hyperparams h;
  h.num_communities = K;
  h.alpha.assign(K > 0 ? K : 0, 1.0);
  return h;
}

void Hyperparams::validate() const {
  if (num_communities < 2) throw UsageError("K >= 2 required");
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw UsageError("tau2 must be positive and finite");
  if (static_cast<int>(alpha.size()) != num_communities) {
    throw UsageError("alpha must have K entries");
  }
  for (double a : alpha) {
    if (!(a > 0.0)) throw UsageError("alpha entries must be positive");
  }
}

ModelParams ModelParams::zeros(int num_nodes, int K) {
  ModelParams p;
  p.gamma = Eigen::VectorXd::Zero(num_block_pairs(K));
  p.eta = Eigen::VectorXd::Zero(num_nodes);
  p.pi = Eigen::VectorXd::Constant(K, 1.0 / K);
  return p;
}

ModelData::ModelData(const Graph& graph)
    : graph_(&graph), n_(graph.num_nodes()), adjacency_(graph.dense_adjacency()) {
  centered_ = kernels::centered_adjacency(*this);
}

Eigen::MatrixXd block_table(const Eigen::VectorXd& gamma, int K) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(K, K);
  for (int k = 1; k <= K; ++k) {
    for (int l = k + 1; l <= K; ++l) {
      t(k - 1, l - 1) = t(l - 1, k - 1) = gamma(block_pair_index(k, l, K));
    }
  }
  return t;
}

double log_likelihood(const ModelData& data, const LabelVector& sigma, const ModelParams& params) {
  return kernels::log_likelihood(data, sigma, block_table(params.gamma, sigma.num_labels()), params.eta);
}

double log_pi_terms(const LabelVector& sigma, const Eigen::VectorXd& pi, const Hyperparams& hyper) {
  double acc = 0.0;
  for (int k = 1; k <= sigma.num_labels(); ++k) {
    const double weight = sigma.size_of(k) + hyper.alpha[k - 1] - 1.0;
    if (weight != 0.0) acc += weight * std::log(pi(k - 1));
  }
  return acc;
}

double log_beta_prior(const ModelParams& params, const Hyperparams& hyper) {
  if ((params.gamma.array() > 0.0).any()) return -std::numeric_limits<double>::infinity();
  return -(params.gamma.squaredNorm() + params.eta.squaredNorm()) / (2.0 * hyper.tau2);
}

double log_posterior(const ModelData& data, const LabelVector& sigma, const ModelParams& params,
                     const Hyperparams& hyper) {
  if (sigma.min_size() < 2) return -std::numeric_limits<double>::infinity();
  const double prior = log_beta_prior(params, hyper);
  if (!std::isfinite(prior)) return prior;
  return log_likelihood(data, sigma, params) + prior + log_pi_terms(sigma, params.pi, hyper);
}

}  // namespace pgsbm
