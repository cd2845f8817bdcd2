#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pgsbm/kernels.hpp"
#include "pgsbm/labels.hpp"
#include "pgsbm/model.hpp"
#include "pgsbm/random.hpp"
#include "pgsbm/trace.hpp"

namespace pgsbm {

/// One Gibbs state. sigma is canonical with every community holding at
/// least two nodes; log_post caches log_posterior() of the state.
struct ChainState {
  LabelVector sigma;
  ModelParams params;
  double log_post = 0.0;
  Rng rng;
  std::int64_t iteration = 0;
  SamplerStats stats;
  /// Softplus values at the current (gamma, eta); rebuilt when stale.
  std::shared_ptr<const SoftplusTable> softplus;
};

/// Remaps sigma (permuting gamma and pi to match), checks the support
/// constraints and fills log_post. Throws UsageError on invalid input.
ChainState make_state(const ModelData& data, const LabelVector& sigma, ModelParams params,
                      const Hyperparams& hyper, Rng rng);

/// gamma'_{rho(k) rho(l)} = gamma_{kl}; rho as returned by remap().
Eigen::VectorXd permute_blocks(const Eigen::VectorXd& gamma, std::span<const int> rho, int K);

/// Unnormalized log conditional of sigma_i = k for k = 1..K:
/// log pi_k + sum_{j != i} A_ij s_ij(k) - log(1 + exp(s_ij(k))).
void sigma_log_weights(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                       const Eigen::VectorXd& eta, const Eigen::VectorXd& pi, int i,
                       std::span<double> out);

/// Same weights read from a softplus table built at (gamma, eta).
void sigma_log_weights(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                       const Eigen::MatrixXi& levels, const Eigen::VectorXd& eta, const Eigen::VectorXd& pi,
                       const SoftplusTable& table, int i, std::span<double> out);

/// Systematic scan over nodes 0..n-1; moves that would leave a community
/// with fewer than two nodes are rejected. Ends with a remap.
void sample_sigma_sweep(ChainState& state, const ModelData& data, const Hyperparams& hyper);

/// pi ~ Dir(alpha + N(sigma)).
void sample_pi(ChainState& state, const Hyperparams& hyper);

enum class BetaRoute {
  /// Structured pair kernels (OpenMP), SWEEP on the precision's block pivots.
  kParallel,
  /// Dense design, serial kernels, full inverse and SWEEP on the covariance.
  kReference,
};

enum class BetaScheme {
  /// Joint draw from N(m, Q^-1) restricted to gamma <= 0: rejection on the
  /// pair (eta, gamma), falling back to eta | gamma then gamma | eta.
  kExact,
  /// eta from its untruncated marginal, then gamma | eta truncated. Biased
  /// whenever P(gamma <= 0 | eta) varies with eta.
  kMarginalEta,
};

/// Draws omega ~ PG(1, x' beta) for every pair, then beta | omega.
void sample_beta(ChainState& state, const ModelData& data, const Hyperparams& hyper,
                 BetaRoute route = BetaRoute::kParallel, BetaScheme scheme = BetaScheme::kExact);

/// Sigma sweep, pi, then beta.
void gibbs_iteration(ChainState& state, const ModelData& data, const Hyperparams& hyper);

struct RunOptions {
  int iters = 5000;
  int burnin = 1000;
  int thin = 1;
  int chain_id = 0;
  bool keep_eta = false;
};

/// Runs iterations 1..iters and records every thin-th draw after burn-in.
/// The final state is written to *final_state when given.
SampleTrace gibbs_run(const ModelData& data, const Hyperparams& hyper, ChainState init,
                      const RunOptions& options, ChainState* final_state = nullptr);

/// Mode of Dir(alpha + N): (alpha_k + N_k - 1) / (sum alpha + n - K).
Eigen::VectorXd dirichlet_mode(const LabelVector& sigma, const Hyperparams& hyper);

struct IrlsStep {
  bool moved = false;
  double objective = 0.0;  // log-likelihood + beta log-prior after the step
  int active = 0;          // gamma coordinates held at 0
  int halvings = 0;
};

/// One ridge-IRLS update of beta for fixed sigma with the constraint
/// gamma <= 0 enforced by an active-set solve, followed by step halving.
/// Throws NumericalError if 30 halvings fail to improve a non-negligible step.
IrlsStep irls_step(const ModelData& data, const LabelVector& sigma, const Hyperparams& hyper,
                   ModelParams& params);

/// Iterates irls_step until the objective gains less than tol.
IrlsStep fit_beta_irls(const ModelData& data, const LabelVector& sigma, const Hyperparams& hyper,
                       ModelParams& params, int max_iter = 100, double tol = 1e-12);

/// Gradient of the penalized log-likelihood in beta, X'(A - mu) - beta / tau2.
Eigen::VectorXd penalized_score(const ModelData& data, const LabelVector& sigma,
                                const ModelParams& params, const Hyperparams& hyper);

/// Cyclic ascent: sigma_i to its conditional argmax, pi to the Dirichlet
/// mode, beta by IRLS to convergence, until the log posterior gains less than
/// 1e-8 or max_iter cycles. Returns the best state; its log posterior after
/// every cycle goes to *history when given.
ChainState mode_find(const ModelData& data, const Hyperparams& hyper, ChainState init, int max_iter,
                     std::vector<double>* history = nullptr);

/// Draw from the constrained prior: pi ~ Dir(alpha), sigma_i ~ MN(pi),
/// redrawn until every community has at least two nodes, then remapped.
LabelVector sample_prior_labels(int num_nodes, const Hyperparams& hyper, Rng& rng);

struct RestartResult {
  ChainState best;
  int best_index = 0;
  std::vector<double> log_posts;
};

/// Runs mode_find from `restarts` prior draws; restart r uses stream
/// rng.derive(r), so the first r restarts do not depend on the total.
RestartResult multi_restart_init(const ModelData& data, const Hyperparams& hyper, int restarts,
                                 const Rng& rng, int max_iter = 100);

/// Potential scale reduction factor of equal-length chains; NaN when fewer
/// than two chains or two draws are available.
double psrf(const std::vector<std::vector<double>>& chains);

struct FitOptions {
  int chains = 4;
  int restarts = 32;
  int iters = 5000;
  int burnin = 1000;
  int thin = 1;
  int mode_max_iter = 100;
  std::uint64_t seed = 1;
  bool keep_eta = false;
};

struct FitResult {
  RestartResult init;
  std::vector<SampleTrace> chains;
  std::vector<ChainState> final_states;
  SampleTrace merged;
  double psrf_log_post = 0.0;
  std::vector<double> psrf_gamma;
};

/// Stream used for the restart phase; chain c uses stream c.
inline constexpr std::uint64_t kInitStream = 0x1000000;

/// Restarts, mode finding, then `chains` independent chains from the mode.
FitResult fit(const ModelData& data, const Hyperparams& hyper, const FitOptions& options);

}  // namespace pgsbm
