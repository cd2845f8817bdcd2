#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "pgsbm/labels.hpp"

namespace pgsbm {

/// Counters reported in run metadata.
struct SamplerStats {
  std::int64_t sigma_updates = 0;
  std::int64_t sigma_moves = 0;
  /// Candidate labels rejected because a community would drop below 2 nodes.
  std::int64_t sigma_rejections = 0;
  std::int64_t gamma_draws = 0;
  std::int64_t gamma_attempts = 0;
  std::int64_t gamma_fallbacks = 0;

  SamplerStats& operator+=(const SamplerStats& o);
};

/// Post-burn-in draws of one or more chains.
struct SampleTrace {
  int num_nodes = 0;
  int num_communities = 0;

  std::vector<std::int64_t> iterations;
  std::vector<int> chain;
  std::vector<double> log_post;
  std::vector<LabelVector> sigma_samples;
  std::vector<Eigen::VectorXd> gamma_samples;
  std::vector<Eigen::VectorXd> pi_samples;
  /// Full eta draws are kept only on request; running sums always are.
  std::vector<Eigen::VectorXd> eta_samples;
  Eigen::VectorXd eta_sum;
  Eigen::VectorXd eta_sum_sq;
  /// n x K label frequencies, row-major.
  std::vector<std::int64_t> marginal_counts;

  SamplerStats stats;

  SampleTrace() = default;
  SampleTrace(int n, int K);

  std::size_t size() const { return sigma_samples.size(); }
  bool empty() const { return sigma_samples.empty(); }
  std::int64_t count(int node, int label) const {
    return marginal_counts[static_cast<std::size_t>(node) * num_communities + (label - 1)];
  }
  Eigen::VectorXd eta_mean() const;
  Eigen::VectorXd eta_sd() const;

  void append(std::int64_t iteration, int chain_id, double lp, const LabelVector& sigma,
              const Eigen::VectorXd& gamma, const Eigen::VectorXd& eta, const Eigen::VectorXd& pi,
              bool keep_eta);
  /// Concatenates another trace over the same (n, K).
  void merge(const SampleTrace& other);
};

}  // namespace pgsbm
