#include "pgsbm/gaussian.hpp"

#include <vector>

#include "pgsbm/errors.hpp"

namespace pgsbm {

void sweep(Eigen::MatrixXd& a, int k) {
  const double pivot = a(k, k);
  if (!(pivot > 0.0)) throw NumericalError("SWEEP pivot is not positive");
  Eigen::VectorXd col = a.col(k);
  col(k) = 0.0;
  a.noalias() -= (col / pivot) * col.transpose();
  a.col(k) = col / pivot;
  a.row(k) = a.col(k).transpose();
  a(k, k) = -1.0 / pivot;
}

void sweep(Eigen::MatrixXd& a, std::span<const int> pivots) {
  for (int k : pivots) sweep(a, k);
}

Eigen::VectorXd BlockGaussian::sample_eta(Rng& rng) const {
  const long n = eta_mean.size();
  Eigen::VectorXd z(n);
  for (long i = 0; i < n; ++i) z(i) = rng.normal();
  if (factor_is_precision) {
    // Q = L L'  =>  L'^-1 z ~ N(0, Q^-1).
    return eta_mean + eta_factor.transpose().triangularView<Eigen::Upper>().solve(z);
  }
  return eta_mean + eta_factor.triangularView<Eigen::Lower>() * z;
}

Eigen::VectorXd BlockGaussian::gamma_mean_given(const Eigen::VectorXd& eta) const {
  return gamma_mean + gamma_slope * (eta - eta_mean);
}

Eigen::MatrixXd BlockGaussian::eta_covariance() const {
  const Eigen::MatrixXd ll = eta_factor * eta_factor.transpose();
  if (!factor_is_precision) return ll;
  return ll.llt().solve(Eigen::MatrixXd::Identity(ll.rows(), ll.cols()));
}

Eigen::VectorXd sample_eta_given_gamma(const Eigen::MatrixXd& precision, const BlockGaussian& g,
                                       const Eigen::VectorXd& gamma, Rng& rng) {
  const long p = g.gamma_mean.size();
  const long n = g.eta_mean.size();
  Eigen::LLT<Eigen::MatrixXd> llt(precision.bottomRightCorner(n, n));
  if (llt.info() != Eigen::Success) throw NumericalError("eta precision block is not positive definite");
  Eigen::VectorXd z(n);
  for (long i = 0; i < n; ++i) z(i) = rng.normal();
  const Eigen::VectorXd shift = precision.bottomLeftCorner(n, p) * (gamma - g.gamma_mean);
  return g.eta_mean - llt.solve(shift) + llt.matrixU().solve(z);
}

BlockGaussian split_from_precision(const Eigen::MatrixXd& precision, const Eigen::VectorXd& rhs, int p) {
  const long d = precision.rows();
  const long n = d - p;
  Eigen::MatrixXd a = precision;
  std::vector<int> pivots(p);
  for (int k = 0; k < p; ++k) pivots[k] = k;
  sweep(a, pivots);

  // a.bottomRightCorner: Q_ee - Q_eg Q_gg^-1 Q_ge, the marginal precision of eta.
  // a.topRightCorner:    Q_gg^-1 Q_ge.
  BlockGaussian g;
  Eigen::LLT<Eigen::MatrixXd> llt(a.bottomRightCorner(n, n));
  if (llt.info() != Eigen::Success) throw NumericalError("eta precision is not positive definite");
  const Eigen::VectorXd bg = rhs.head(p);
  const Eigen::MatrixXd reg = a.topRightCorner(p, n);
  const Eigen::VectorXd gamma_offset = -a.topLeftCorner(p, p) * bg;  // Q_gg^-1 b_g
  g.eta_mean = llt.solve(rhs.tail(n) - reg.transpose() * bg);
  g.eta_factor = llt.matrixL();
  g.factor_is_precision = true;
  g.gamma_slope = -reg;
  g.gamma_mean = gamma_offset - reg * g.eta_mean;
  g.gamma_cov = -a.topLeftCorner(p, p);
  return g;
}

BlockGaussian split_from_covariance(const Eigen::MatrixXd& precision, const Eigen::VectorXd& rhs, int p) {
  const long d = precision.rows();
  const long n = d - p;
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericalError("precision is not positive definite");
  Eigen::MatrixXd v = llt.solve(Eigen::MatrixXd::Identity(d, d));
  v = 0.5 * (v + v.transpose());
  const Eigen::VectorXd m = v * rhs;

  BlockGaussian g;
  g.eta_mean = m.tail(n);
  Eigen::LLT<Eigen::MatrixXd> eta_llt(v.bottomRightCorner(n, n));
  if (eta_llt.info() != Eigen::Success) throw NumericalError("eta covariance is not positive definite");
  g.eta_factor = eta_llt.matrixL();
  g.factor_is_precision = false;

  Eigen::MatrixXd a = v;
  std::vector<int> pivots(n);
  for (long k = 0; k < n; ++k) pivots[k] = static_cast<int>(p + k);
  sweep(a, pivots);
  g.gamma_mean = m.head(p);
  g.gamma_slope = a.topRightCorner(p, n);
  g.gamma_cov = a.topLeftCorner(p, p);
  return g;
}

}  // namespace pgsbm
