#include "pgsbm/gibbs.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "pgsbm/design.hpp"
#include "pgsbm/errors.hpp"
#include "pgsbm/gaussian.hpp"
#include "pgsbm/kernels.hpp"

namespace pgsbm {

namespace {

Eigen::VectorXd stack(const Eigen::VectorXd& gamma, const Eigen::VectorXd& eta) {
  Eigen::VectorXd beta(gamma.size() + eta.size());
  beta << gamma, eta;
  return beta;
}

void apply_remap(ChainState& s) {
  if (s.sigma.canonical()) return;
  RemapResult r = remap(s.sigma);
  const int K = s.sigma.num_labels();
  s.params.gamma = permute_blocks(s.params.gamma, r.rho, K);
  Eigen::VectorXd pi(K);
  for (int k = 1; k <= K; ++k) pi(r.rho[k] - 1) = s.params.pi(k - 1);
  s.params.pi = pi;
  s.sigma = std::move(r.sigma);
}

// Returns the state's softplus table at the current (gamma, eta), building
// it if needed; nullptr when it would not fit in memory.
const SoftplusTable* current_table(ChainState& s) {
  const int K = s.sigma.num_labels();
  if (!SoftplusTable::fits(static_cast<int>(s.params.eta.size()), K)) return nullptr;
  if (!s.softplus || !s.softplus->matches(s.params.gamma, s.params.eta)) {
    auto t = std::make_shared<SoftplusTable>();
    kernels::build_softplus_table(s.params.gamma, s.params.eta, K, *t);
    s.softplus = std::move(t);
  }
  return s.softplus.get();
}

// Exceptions cannot cross an OpenMP region; loops collect them per index.
void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void check_mode_alpha(const Hyperparams& hyper) {
  for (double a : hyper.alpha) {
    if (a < 1.0) throw UsageError("mode finding requires every alpha_k >= 1");
  }
}

void check_support(const LabelVector& sigma, const Hyperparams& hyper) {
  if (sigma.num_labels() != hyper.num_communities) {
    throw UsageError("label vector K differs from hyperparameter K");
  }
  if (sigma.min_size() < 2) throw UsageError("every community needs at least two nodes");
}

double beta_objective(const ModelData& data, const LabelVector& sigma, const Eigen::VectorXd& beta,
                      int p, const Hyperparams& hyper) {
  if ((beta.head(p).array() > 0.0).any()) return -std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd blocks = block_table(beta.head(p), sigma.num_labels());
  return kernels::log_likelihood(data, sigma, blocks, beta.tail(beta.size() - p)) -
         beta.squaredNorm() / (2.0 * hyper.tau2);
}

// Minimizes 1/2 x'Qx - r'x subject to x_k <= 0 for k < p. Violating
// coordinates are clamped to 0 and the free set re-solved; an active
// coordinate is released when its multiplier r_k - (Qx)_k is negative.
Eigen::VectorXd active_set_solve(const Eigen::MatrixXd& q, const Eigen::VectorXd& r, int p,
                                 int* num_active) {
  const int d = static_cast<int>(r.size());
  std::vector<char> active(p, 0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  const int max_rounds = 4 * p + 10;
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<int> free;
    free.reserve(d);
    for (int k = 0; k < d; ++k) {
      if (k >= p || !active[k]) free.push_back(k);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(q(free, free));
    if (llt.info() != Eigen::Success) throw NumericalError("IRLS system is not positive definite");
    const Eigen::VectorXd xf = llt.solve(r(free));
    x.setZero();
    x(free) = xf;

    bool violated = false;
    for (int k = 0; k < p; ++k) {
      if (!active[k] && x(k) > 0.0) {
        active[k] = 1;
        violated = true;
      }
    }
    if (violated) continue;

    const Eigen::VectorXd slack = r - q * x;
    int release = -1;
    double worst = -1e-10 * std::max(1.0, r.cwiseAbs().maxCoeff());
    for (int k = 0; k < p; ++k) {
      if (active[k] && slack(k) < worst) {
        worst = slack(k);
        release = k;
      }
    }
    if (release < 0) break;
    active[release] = 0;
  }
  for (int k = 0; k < p; ++k) {
    if (active[k]) x(k) = 0.0;
  }
  x.head(p) = x.head(p).cwiseMin(0.0);
  if (num_active) *num_active = static_cast<int>(std::count(active.begin(), active.end(), 1));
  return x;
}

// Greedy version of the sigma sweep: each node moves to its conditional
// argmax (smallest label on ties) unless that empties a community.
void sigma_argmax_sweep(ChainState& s, const ModelData& data) {
  const int n = data.num_nodes();
  const int K = s.sigma.num_labels();
  const Eigen::MatrixXd blocks = block_table(s.params.gamma, K);
  std::vector<double> logw(K);
  for (int i = 0; i < n; ++i) {
    sigma_log_weights(data, s.sigma, blocks, s.params.eta, s.params.pi, i, logw);
    const int best = static_cast<int>(std::max_element(logw.begin(), logw.end()) - logw.begin()) + 1;
    const int old = s.sigma[i];
    if (best == old || !(logw[best - 1] > logw[old - 1])) continue;
    if (s.sigma.size_of(old) <= 2) continue;
    s.sigma.set(i, best);
  }
  apply_remap(s);
}

}  // namespace

Eigen::VectorXd permute_blocks(const Eigen::VectorXd& gamma, std::span<const int> rho, int K) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(gamma.size());
  for (int k = 1; k <= K; ++k) {
    for (int l = k + 1; l <= K; ++l) {
      out(block_pair_index(rho[k], rho[l], K)) = gamma(block_pair_index(k, l, K));
    }
  }
  return out;
}

ChainState make_state(const ModelData& data, const LabelVector& sigma, ModelParams params,
                      const Hyperparams& hyper, Rng rng) {
  hyper.validate();
  check_support(sigma, hyper);
  const int K = hyper.num_communities;
  if (sigma.size() != data.num_nodes()) throw UsageError("label vector length differs from node count");
  if (params.gamma.size() != num_block_pairs(K) || params.eta.size() != data.num_nodes() ||
      params.pi.size() != K) {
    throw UsageError("parameter dimensions do not match (n, K)");
  }
  if ((params.gamma.array() > 0.0).any()) throw UsageError("gamma entries must be <= 0");
  ChainState s{sigma, std::move(params), 0.0, std::move(rng), 0, {}, nullptr};
  apply_remap(s);
  s.log_post = log_posterior(data, s.sigma, s.params, hyper);
  return s;
}

void sigma_log_weights(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                       const Eigen::VectorXd& eta, const Eigen::VectorXd& pi, int i,
                       std::span<double> out) {
  const int n = data.num_nodes();
  const int K = static_cast<int>(out.size());
  const unsigned char* a = data.adjacency_row(i);
  for (int k = 0; k < K; ++k) out[k] = std::log(pi(k));
  const double eta_i = eta(i);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const double base = eta_i + eta(j);
    const double* col = blocks.col(sigma[j] - 1).data();
    if (a[j]) {
      for (int k = 0; k < K; ++k) {
        const double s = col[k] + base;
        out[k] += s - softplus(s);
      }
    } else {
      for (int k = 0; k < K; ++k) out[k] -= softplus(col[k] + base);
    }
  }
}

void sigma_log_weights(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                       const Eigen::MatrixXi& levels, const Eigen::VectorXd& eta, const Eigen::VectorXd& pi,
                       const SoftplusTable& table, int i, std::span<double> out) {
  const int n = data.num_nodes();
  const int K = static_cast<int>(out.size());
  const double eta_i = eta(i);
  for (int k = 0; k < K; ++k) out[k] = std::log(pi(k));
  for (int j : data.graph().neighbors(i)) {
    const double base = eta_i + eta(j);
    const double* col = blocks.col(sigma[j] - 1).data();
    for (int k = 0; k < K; ++k) out[k] += col[k] + base;
  }
  if (K == 2) {
    const double* same = table.row(0, i);
    const double* cross = table.row(1, i);
    double s1 = 0.0, s2 = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      if (sigma[j] == 1) {
        s1 += same[j];
        s2 += cross[j];
      } else {
        s1 += cross[j];
        s2 += same[j];
      }
    }
    out[0] -= s1;
    out[1] -= s2;
    return;
  }
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const int l = sigma[j] - 1;
    for (int k = 0; k < K; ++k) out[k] -= table.row(levels(k, l), i)[j];
  }
}

void sample_sigma_sweep(ChainState& s, const ModelData& data, const Hyperparams& hyper) {
  (void)hyper;
  const int n = data.num_nodes();
  const int K = s.sigma.num_labels();
  const Eigen::MatrixXd blocks = block_table(s.params.gamma, K);
  const Eigen::MatrixXi levels = block_levels(K);
  const SoftplusTable* table = current_table(s);
  std::vector<double> logw(K), prob(K);
  for (int i = 0; i < n; ++i) {
    if (table) {
      sigma_log_weights(data, s.sigma, blocks, levels, s.params.eta, s.params.pi, *table, i, logw);
    } else {
      sigma_log_weights(data, s.sigma, blocks, s.params.eta, s.params.pi, i, logw);
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    double total = 0.0;
    for (int k = 0; k < K; ++k) total += (prob[k] = std::exp(logw[k] - top));
    for (double& p : prob) p /= total;
    assert(std::abs(std::accumulate(prob.begin(), prob.end(), 0.0) - 1.0) < 1e-12);

    const int proposed = multinomial_index(prob, s.rng);
    const int old = s.sigma[i];
    ++s.stats.sigma_updates;
    if (proposed == old) continue;
    if (s.sigma.size_of(old) <= 2) {
      ++s.stats.sigma_rejections;
      continue;
    }
    s.log_post += logw[proposed - 1] - logw[old - 1];
    s.sigma.set(i, proposed);
    ++s.stats.sigma_moves;
  }
  apply_remap(s);
}

void sample_pi(ChainState& s, const Hyperparams& hyper) {
  const int K = s.sigma.num_labels();
  std::vector<double> post(K);
  for (int k = 0; k < K; ++k) post[k] = hyper.alpha[k] + s.sigma.size_of(k + 1);
  const double before = log_pi_terms(s.sigma, s.params.pi, hyper);
  s.params.pi = dirichlet(post, s.rng);
  s.log_post += log_pi_terms(s.sigma, s.params.pi, hyper) - before;
}

constexpr int kJointAttempts = 64;

void sample_beta(ChainState& s, const ModelData& data, const Hyperparams& hyper, BetaRoute route,
                 BetaScheme scheme) {
  const int K = s.sigma.num_labels();
  const int p = num_block_pairs(K);
  const Eigen::MatrixXd blocks = block_table(s.params.gamma, K);
  const std::uint64_t tag = s.rng.engine()();

  Eigen::MatrixXd omega;
  Eigen::MatrixXd q;
  BlockGaussian g;
  if (route == BetaRoute::kParallel) {
    kernels::draw_omega(data, s.sigma, blocks, s.params.eta, s.rng, tag, omega);
    q = kernels::assemble_precision(omega, s.sigma, hyper.tau2).dense();
    const Eigen::VectorXd b = kernels::design_transpose_times(data.centered_adjacency(), s.sigma);
    g = split_from_precision(q, b, p);
  } else {
    kernels::draw_omega_serial(data, s.sigma, blocks, s.params.eta, s.rng, tag, omega);
    const DesignMatrix design = build_design(data.num_nodes(), s.sigma);
    q = kernels::assemble_precision_reference(design, omega, hyper.tau2);
    const Eigen::VectorXd b = kernels::design_transpose_times_reference(design, data.centered_adjacency());
    g = split_from_covariance(q, b, p);
  }

  ++s.stats.gamma_draws;
  if (scheme == BetaScheme::kMarginalEta) {
    s.params.eta = g.sample_eta(s.rng);
    TruncatedMvnStats st;
    s.params.gamma = mvn_truncated_nonpositive(g.gamma_mean_given(s.params.eta), g.gamma_cov, s.rng, &st);
    s.stats.gamma_attempts += st.attempts;
    s.stats.gamma_fallbacks += st.used_fallback ? 1 : 0;
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt(g.gamma_cov);
    if (llt.info() != Eigen::Success) throw NumericalError("gamma conditional covariance is not positive definite");
    const Eigen::MatrixXd lower = llt.matrixL();
    bool accepted = false;
    Eigen::VectorXd z(p);
    for (int a = 0; a < kJointAttempts && !accepted; ++a) {
      const Eigen::VectorXd eta = g.sample_eta(s.rng);
      for (int i = 0; i < p; ++i) z(i) = s.rng.normal();
      const Eigen::VectorXd gamma = g.gamma_mean_given(eta) + lower * z;
      ++s.stats.gamma_attempts;
      if (gamma.maxCoeff() <= 0.0) {
        s.params.eta = eta;
        s.params.gamma = gamma;
        accepted = true;
      }
    }
    if (!accepted) {
      ++s.stats.gamma_fallbacks;
      const Eigen::VectorXd current = s.params.gamma;
      s.params.eta = sample_eta_given_gamma(q, g, current, s.rng);
      TruncatedMvnStats st;
      s.params.gamma =
          mvn_truncated_nonpositive(g.gamma_mean_given(s.params.eta), g.gamma_cov, s.rng, &st, &current);
      s.stats.gamma_attempts += st.attempts;
    }
  }

  const Eigen::MatrixXd new_blocks = block_table(s.params.gamma, K);
  double loglik;
  if (route == BetaRoute::kReference) {
    s.softplus.reset();
    loglik = kernels::log_likelihood_serial(data, s.sigma, new_blocks, s.params.eta);
  } else if (const SoftplusTable* table = current_table(s)) {
    loglik = kernels::log_likelihood(data, s.sigma, new_blocks, s.params.eta, *table);
  } else {
    loglik = kernels::log_likelihood(data, s.sigma, new_blocks, s.params.eta);
  }
  s.log_post = loglik + log_beta_prior(s.params, hyper) + log_pi_terms(s.sigma, s.params.pi, hyper);
}

void gibbs_iteration(ChainState& s, const ModelData& data, const Hyperparams& hyper) {
  sample_sigma_sweep(s, data, hyper);
  sample_pi(s, hyper);
  sample_beta(s, data, hyper);
  ++s.iteration;
}

SampleTrace gibbs_run(const ModelData& data, const Hyperparams& hyper, ChainState init,
                      const RunOptions& options, ChainState* final_state) {
  if (options.burnin < 0 || options.iters <= options.burnin) {
    throw UsageError("iters must exceed burnin >= 0");
  }
  if (options.thin < 1) throw UsageError("thin must be >= 1");
  hyper.validate();
  check_support(init.sigma, hyper);

  ChainState s = std::move(init);
  s.stats = {};
  SampleTrace trace(data.num_nodes(), hyper.num_communities);
  for (int t = 1; t <= options.iters; ++t) {
    gibbs_iteration(s, data, hyper);
    if (t > options.burnin && (t - options.burnin) % options.thin == 0) {
      trace.append(t, options.chain_id, s.log_post, s.sigma, s.params.gamma, s.params.eta,
                   s.params.pi, options.keep_eta);
    }
  }
  trace.stats = s.stats;
  if (final_state) *final_state = std::move(s);
  return trace;
}

Eigen::VectorXd dirichlet_mode(const LabelVector& sigma, const Hyperparams& hyper) {
  const int K = sigma.num_labels();
  const double alpha_total = std::accumulate(hyper.alpha.begin(), hyper.alpha.end(), 0.0);
  const double denom = alpha_total + sigma.size() - K;
  Eigen::VectorXd pi(K);
  for (int k = 0; k < K; ++k) pi(k) = (hyper.alpha[k] + sigma.size_of(k + 1) - 1.0) / denom;
  return pi;
}

IrlsStep irls_step(const ModelData& data, const LabelVector& sigma, const Hyperparams& hyper,
                   ModelParams& params) {
  const int K = sigma.num_labels();
  const int p = num_block_pairs(K);
  const Eigen::MatrixXd blocks = block_table(params.gamma, K);
  Eigen::MatrixXd weights, residual;
  kernels::irls_weights(data, sigma, blocks, params.eta, weights, residual);
  const Eigen::MatrixXd q = kernels::assemble_precision(weights, sigma, hyper.tau2).dense();

  const Eigen::VectorXd beta = stack(params.gamma, params.eta);
  const Eigen::VectorXd score = kernels::design_transpose_times(residual, sigma) - beta / hyper.tau2;
  // X'W z with working response z = X beta + W^-1 (A - mu).
  const Eigen::VectorXd rhs = q * beta + score;

  IrlsStep out;
  const Eigen::VectorXd target = active_set_solve(q, rhs, p, &out.active);
  const Eigen::VectorXd direction = target - beta;
  const double f0 = beta_objective(data, sigma, beta, p, hyper);
  const double predicted = direction.dot(score) - 0.5 * direction.dot(q * direction);

  double step = 1.0;
  for (int h = 0; h <= 30; ++h, step *= 0.5) {
    const Eigen::VectorXd cand = beta + step * direction;
    const double f = beta_objective(data, sigma, cand, p, hyper);
    if (f >= f0) {
      params.gamma = cand.head(p).cwiseMin(0.0);
      params.eta = cand.tail(cand.size() - p);
      out.moved = step * direction.cwiseAbs().maxCoeff() > 0.0;
      out.objective = f;
      out.halvings = h;
      return out;
    }
  }
  if (std::abs(predicted) > 1e-8 * std::max(1.0, std::abs(f0))) {
    throw NumericalError("IRLS failed to improve after 30 step halvings");
  }
  out.objective = f0;
  out.halvings = 30;
  return out;
}

IrlsStep fit_beta_irls(const ModelData& data, const LabelVector& sigma, const Hyperparams& hyper,
                       ModelParams& params, int max_iter, double tol) {
  const int p = num_block_pairs(sigma.num_labels());
  double prev = beta_objective(data, sigma, stack(params.gamma, params.eta), p, hyper);
  IrlsStep last;
  for (int it = 0; it < max_iter; ++it) {
    last = irls_step(data, sigma, hyper, params);
    if (!last.moved || last.objective - prev < tol) break;
    prev = last.objective;
  }
  return last;
}

Eigen::VectorXd penalized_score(const ModelData& data, const LabelVector& sigma,
                                const ModelParams& params, const Hyperparams& hyper) {
  Eigen::MatrixXd weights, residual;
  kernels::irls_weights(data, sigma, block_table(params.gamma, sigma.num_labels()), params.eta, weights,
                        residual);
  return kernels::design_transpose_times(residual, sigma) - stack(params.gamma, params.eta) / hyper.tau2;
}

ChainState mode_find(const ModelData& data, const Hyperparams& hyper, ChainState s, int max_iter,
                     std::vector<double>* history) {
  hyper.validate();
  check_mode_alpha(hyper);
  check_support(s.sigma, hyper);
  apply_remap(s);
  s.params.pi = dirichlet_mode(s.sigma, hyper);
  fit_beta_irls(data, s.sigma, hyper, s.params, 50, 1e-8);
  s.log_post = log_posterior(data, s.sigma, s.params, hyper);
  if (history) history->push_back(s.log_post);

  ChainState best = s;
  constexpr double kTol = 1e-8;
  for (int it = 0; it < max_iter; ++it) {
    const double before = s.log_post;
    sigma_argmax_sweep(s, data);
    s.params.pi = dirichlet_mode(s.sigma, hyper);
    fit_beta_irls(data, s.sigma, hyper, s.params, 50, 1e-8);
    s.log_post = log_posterior(data, s.sigma, s.params, hyper);
    if (history) history->push_back(s.log_post);
    if (s.log_post > best.log_post) best = s;
    if (s.log_post - before < kTol) break;
  }
  return best;
}

LabelVector sample_prior_labels(int n, const Hyperparams& hyper, Rng& rng) {
  const int K = hyper.num_communities;
  if (n < 2 * K) throw UsageError("need at least 2K nodes for K communities of size >= 2");
  constexpr int kMaxDraws = 100000;
  std::vector<int> labels(n);
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    const Eigen::VectorXd pi = dirichlet(hyper.alpha, rng);
    std::vector<double> p(pi.data(), pi.data() + K);
    std::vector<int> sizes(K, 0);
    for (int i = 0; i < n; ++i) {
      labels[i] = multinomial_index(p, rng);
      ++sizes[labels[i] - 1];
    }
    if (*std::min_element(sizes.begin(), sizes.end()) >= 2) {
      return remap(LabelVector(labels, K)).sigma;
    }
  }
  throw NumericalError("could not draw a prior label vector with all communities of size >= 2");
}

RestartResult multi_restart_init(const ModelData& data, const Hyperparams& hyper, int restarts,
                                 const Rng& rng, int max_iter) {
  if (restarts < 1) throw UsageError("restarts must be >= 1");
  hyper.validate();
  check_mode_alpha(hyper);
  const int n = data.num_nodes();
  const int K = hyper.num_communities;
  std::vector<ChainState> modes(restarts);
  std::vector<std::exception_ptr> errors(restarts);
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < restarts; ++r) {
    try {
      Rng sub = rng.derive(static_cast<std::uint64_t>(r));
      LabelVector sigma = sample_prior_labels(n, hyper, sub);
      ModelParams params = ModelParams::zeros(n, K);
      ChainState s = make_state(data, sigma, std::move(params), hyper, sub);
      modes[r] = mode_find(data, hyper, std::move(s), max_iter);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  rethrow_first(errors);
  RestartResult out;
  out.log_posts.reserve(restarts);
  for (int r = 0; r < restarts; ++r) {
    out.log_posts.push_back(modes[r].log_post);
    if (modes[r].log_post > modes[out.best_index].log_post) out.best_index = r;
  }
  out.best = std::move(modes[out.best_index]);
  return out;
}

double psrf(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  std::size_t t = chains.front().size();
  for (const auto& c : chains) t = std::min(t, c.size());
  if (t < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < t; ++i) mean += chains[c][i];
    mean /= static_cast<double>(t);
    double ss = 0.0;
    for (std::size_t i = 0; i < t; ++i) ss += (chains[c][i] - mean) * (chains[c][i] - mean);
    means[c] = mean;
    vars[c] = ss / static_cast<double>(t - 1);
  }
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(m);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(t) / static_cast<double>(m - 1);
  const double w = std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(m);
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double td = static_cast<double>(t);
  const double var_plus = (td - 1.0) / td * w + b / td;
  return std::sqrt(var_plus / w);
}

FitResult fit(const ModelData& data, const Hyperparams& hyper, const FitOptions& options) {
  hyper.validate();
  if (data.num_nodes() <= hyper.num_communities) throw UsageError("n must exceed K");
  if (options.chains < 1) throw UsageError("chains must be >= 1");

  FitResult out;
  out.init = multi_restart_init(data, hyper, options.restarts, Rng(options.seed, kInitStream),
                                options.mode_max_iter);

  const int chains = options.chains;
  out.chains.resize(chains);
  out.final_states.resize(chains);
  std::vector<std::exception_ptr> errors(chains);
#pragma omp parallel for schedule(static, 1) if (chains > 1)
  for (int c = 0; c < chains; ++c) {
    try {
      ChainState start = out.init.best;
      start.rng = Rng(options.seed, static_cast<std::uint64_t>(c));
      start.iteration = 0;
      RunOptions run;
      run.iters = options.iters;
      run.burnin = options.burnin;
      run.thin = options.thin;
      run.chain_id = c;
      run.keep_eta = options.keep_eta;
      out.chains[c] = gibbs_run(data, hyper, std::move(start), run, &out.final_states[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  rethrow_first(errors);

  out.merged = SampleTrace(data.num_nodes(), hyper.num_communities);
  for (const auto& t : out.chains) out.merged.merge(t);

  std::vector<std::vector<double>> lp;
  for (const auto& t : out.chains) lp.push_back(t.log_post);
  out.psrf_log_post = psrf(lp);
  const int p = num_block_pairs(hyper.num_communities);
  for (int k = 0; k < p; ++k) {
    std::vector<std::vector<double>> g;
    for (const auto& t : out.chains) {
      std::vector<double> v;
      v.reserve(t.gamma_samples.size());
      for (const auto& s : t.gamma_samples) v.push_back(s(k));
      g.push_back(std::move(v));
    }
    out.psrf_gamma.push_back(psrf(g));
  }
  return out;
}

}  // namespace pgsbm
