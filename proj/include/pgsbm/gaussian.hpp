#pragma once

#include <Eigen/Dense>
#include <span>

#include "pgsbm/random.hpp"

namespace pgsbm {

/// SWEEP operator on pivot k of a symmetric matrix, in place. Sweeping a
/// set S of pivots turns [A_SS A_ST; A_TS A_TT] into
/// [-A_SS^-1, A_SS^-1 A_ST; A_TS A_SS^-1, A_TT - A_TS A_SS^-1 A_ST].
/// Throws NumericalError on a non-positive pivot.
void sweep(Eigen::MatrixXd& a, int k);
void sweep(Eigen::MatrixXd& a, std::span<const int> pivots);

/// The block Gaussian N(m, V) over (gamma, eta) with V = Q^-1, m = V b,
/// split as eta ~ N(m_eta, V_eta) and gamma | eta ~ N(c + S (eta - m_eta), C).
struct BlockGaussian {
  Eigen::VectorXd eta_mean;
  Eigen::VectorXd gamma_mean;      // c: mean of gamma at eta = m_eta
  Eigen::MatrixXd gamma_slope;     // S = V_ge V_ee^-1
  Eigen::MatrixXd gamma_cov;       // C = V_gg - V_ge V_ee^-1 V_eg
  Eigen::MatrixXd eta_factor;      // lower Cholesky factor, see factor_is_precision
  bool factor_is_precision = true; // factor of V_ee^-1 (true) or V_ee (false)

  Eigen::VectorXd sample_eta(Rng& rng) const;
  Eigen::VectorXd gamma_mean_given(const Eigen::VectorXd& eta) const;
  Eigen::MatrixXd eta_covariance() const;
};

/// eta | gamma under the untruncated N(m, Q^-1) whose split is g:
/// N(m_eta - Q_ee^-1 Q_eg (gamma - m_gamma), Q_ee^-1).
Eigen::VectorXd sample_eta_given_gamma(const Eigen::MatrixXd& precision, const BlockGaussian& g,
                                       const Eigen::VectorXd& gamma, Rng& rng);

/// Sweeps the precision Q on the gamma pivots (the first p coordinates):
/// the remaining block is the marginal precision of eta, and the swept block
/// gives the conditional covariance of gamma given eta. Costs one n x n
/// Cholesky plus O(p (p + n)^2).
BlockGaussian split_from_precision(const Eigen::MatrixXd& precision, const Eigen::VectorXd& rhs, int p);

/// Reference route: inverts Q to V, then sweeps V on the eta pivots to get
/// the Schur complement V_gg - V_ge V_ee^-1 V_eg.
BlockGaussian split_from_covariance(const Eigen::MatrixXd& precision, const Eigen::VectorXd& rhs, int p);

}  // namespace pgsbm
