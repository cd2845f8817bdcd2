#include "pgsbm/trace.hpp"

#include <cmath>

#include "pgsbm/errors.hpp"

namespace pgsbm {

SamplerStats& SamplerStats::operator+=(const SamplerStats& o) {
  sigma_updates += o.sigma_updates;
  sigma_moves += o.sigma_moves;
  sigma_rejections += o.sigma_rejections;
  gamma_draws += o.gamma_draws;
  gamma_attempts += o.gamma_attempts;
  gamma_fallbacks += o.gamma_fallbacks;
  return *this;
}

SampleTrace::SampleTrace(int n, int K)
    : num_nodes(n),
      num_communities(K),
      eta_sum(Eigen::VectorXd::Zero(n)),
      eta_sum_sq(Eigen::VectorXd::Zero(n)),
      marginal_counts(static_cast<std::size_t>(n) * K, 0) {}

Eigen::VectorXd SampleTrace::eta_mean() const {
  if (empty()) throw UsageError("empty trace");
  return eta_sum / static_cast<double>(size());
}

Eigen::VectorXd SampleTrace::eta_sd() const {
  if (size() < 2) return Eigen::VectorXd::Zero(num_nodes);
  const double t = static_cast<double>(size());
  const Eigen::VectorXd mean = eta_sum / t;
  Eigen::VectorXd var = (eta_sum_sq / t - mean.cwiseAbs2()) * (t / (t - 1.0));
  return var.cwiseMax(0.0).cwiseSqrt();
}

void SampleTrace::append(std::int64_t iteration, int chain_id, double lp, const LabelVector& sigma,
                         const Eigen::VectorXd& gamma, const Eigen::VectorXd& eta,
                         const Eigen::VectorXd& pi, bool keep_eta) {
  iterations.push_back(iteration);
  chain.push_back(chain_id);
  log_post.push_back(lp);
  sigma_samples.push_back(sigma);
  gamma_samples.push_back(gamma);
  pi_samples.push_back(pi);
  if (keep_eta) eta_samples.push_back(eta);
  eta_sum += eta;
  eta_sum_sq += eta.cwiseAbs2();
  for (int i = 0; i < num_nodes; ++i) {
    ++marginal_counts[static_cast<std::size_t>(i) * num_communities + (sigma[i] - 1)];
  }
}

void SampleTrace::merge(const SampleTrace& other) {
  if (other.num_nodes != num_nodes || other.num_communities != num_communities) {
    throw UsageError("cannot merge traces of different shape");
  }
  iterations.insert(iterations.end(), other.iterations.begin(), other.iterations.end());
  chain.insert(chain.end(), other.chain.begin(), other.chain.end());
  log_post.insert(log_post.end(), other.log_post.begin(), other.log_post.end());
  sigma_samples.insert(sigma_samples.end(), other.sigma_samples.begin(), other.sigma_samples.end());
  gamma_samples.insert(gamma_samples.end(), other.gamma_samples.begin(), other.gamma_samples.end());
  pi_samples.insert(pi_samples.end(), other.pi_samples.begin(), other.pi_samples.end());
  eta_samples.insert(eta_samples.end(), other.eta_samples.begin(), other.eta_samples.end());
  eta_sum += other.eta_sum;
  eta_sum_sq += other.eta_sum_sq;
  for (std::size_t i = 0; i < marginal_counts.size(); ++i) marginal_counts[i] += other.marginal_counts[i];
  stats += other.stats;
}

}  // namespace pgsbm
