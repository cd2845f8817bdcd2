#include "pgsbm/kernels.hpp"

#include <omp.h>

#include <vector>

#include "pgsbm/vector_math.hpp"

namespace pgsbm {

Eigen::MatrixXd BlockPrecision::dense() const {
  const int p = num_block_pairs();
  const int n = num_nodes();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(p + n, p + n);
  q.topLeftCorner(p, p) = gg.asDiagonal();
  q.topRightCorner(p, n) = ge;
  q.bottomLeftCorner(n, p) = ge.transpose();
  q.bottomRightCorner(n, n) = ee;
  return q;
}

bool SoftplusTable::fits(int num_nodes, int K) {
  const double slabs = 1.0 + num_block_pairs(K);
  return slabs * num_nodes * num_nodes <= 32.0 * 1024 * 1024;
}

Eigen::MatrixXi block_levels(int K) {
  Eigen::MatrixXi lv = Eigen::MatrixXi::Zero(K, K);
  for (int k = 1; k <= K; ++k) {
    for (int l = k + 1; l <= K; ++l) lv(k - 1, l - 1) = lv(l - 1, k - 1) = 1 + block_pair_index(k, l, K);
  }
  return lv;
}

namespace kernels {

namespace {

void omega_row(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
               const Eigen::VectorXd& eta, const Rng& key, std::uint64_t tag, int i,
               Eigen::MatrixXd& omega) {
  const int n = data.num_nodes();
  const int m = n - i - 1;
  if (m <= 0) return;
  Rng rng = key.derive(tag, static_cast<std::uint64_t>(i));
  thread_local std::vector<double> c, w;
  c.resize(m);
  w.resize(m);
  const int si = sigma[i] - 1;
  for (int j = i + 1; j < n; ++j) c[j - i - 1] = blocks(si, sigma[j] - 1) + eta(i) + eta(j);
  pg1_batch(c, rng, w);
  for (int j = i + 1; j < n; ++j) {
    omega(i, j) = w[j - i - 1];
    omega(j, i) = w[j - i - 1];
  }
}

}  // namespace

void draw_omega(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                const Eigen::VectorXd& eta, const Rng& key, std::uint64_t tag, Eigen::MatrixXd& omega) {
  const int n = data.num_nodes();
  omega.resize(n, n);
  omega.diagonal().setZero();
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) omega_row(data, sigma, blocks, eta, key, tag, i, omega);
}

void draw_omega_serial(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                       const Eigen::VectorXd& eta, const Rng& key, std::uint64_t tag,
                       Eigen::MatrixXd& omega) {
  const int n = data.num_nodes();
  omega.resize(n, n);
  omega.diagonal().setZero();
  for (int i = 0; i < n; ++i) omega_row(data, sigma, blocks, eta, key, tag, i, omega);
}

void irls_weights(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                  const Eigen::VectorXd& eta, Eigen::MatrixXd& weights, Eigen::MatrixXd& residual) {
  const int n = data.num_nodes();
  weights.setZero(n, n);
  residual.setZero(n, n);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    const unsigned char* a = data.adjacency_row(j);
    const int sj = sigma[j] - 1;
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      const double s = blocks(sigma[i] - 1, sj) + eta(i) + eta(j);
      const double mu = 1.0 / (1.0 + std::exp(-s));
      weights(i, j) = mu * (1.0 - mu);
      residual(i, j) = static_cast<double>(a[i]) - mu;
    }
  }
}

BlockPrecision assemble_precision(const Eigen::MatrixXd& weights, const LabelVector& sigma,
                                  double tau2) {
  const int n = sigma.size();
  const int K = sigma.num_labels();
  const int p = num_block_pairs(K);
  const double ridge = 1.0 / tau2;
  BlockPrecision q;
  q.ee = weights;
  q.ge.setZero(p, n);
  q.gg.setZero(p);

  std::vector<int> col_of(static_cast<std::size_t>(K) * K, -1);
  for (int k = 1; k <= K; ++k) {
    for (int l = 1; l <= K; ++l) {
      if (k != l) col_of[(k - 1) * K + (l - 1)] = block_pair_index(k, l, K);
    }
  }

#pragma omp parallel for schedule(static)
  for (int v = 0; v < n; ++v) {
    const double* w = weights.col(v).data();
    const int sv = sigma[v] - 1;
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == v) continue;
      total += w[j];
      const int c = col_of[sv * K + (sigma[j] - 1)];
      if (c >= 0) q.ge(c, v) += w[j];
    }
    q.ee(v, v) = total + ridge;
  }
  // Each block pair is seen from both endpoints.
  for (int v = 0; v < n; ++v) q.gg += q.ge.col(v);
  q.gg = 0.5 * q.gg.array() + ridge;
  return q;
}

Eigen::MatrixXd assemble_precision_reference(const DesignMatrix& design, const Eigen::MatrixXd& weights,
                                             double tau2) {
  const int n = design.num_nodes;
  Eigen::VectorXd w(design.x.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) w(design.row(i, j)) = weights(i, j);
  }
  Eigen::MatrixXd q = design.x.transpose() * w.asDiagonal() * design.x;
  q.diagonal().array() += 1.0 / tau2;
  return q;
}

Eigen::VectorXd design_transpose_times(const Eigen::MatrixXd& pair_values, const LabelVector& sigma) {
  const int n = sigma.size();
  const int K = sigma.num_labels();
  const int p = num_block_pairs(K);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(p + n);
  Eigen::MatrixXd block_part = Eigen::MatrixXd::Zero(p, n);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < n; ++v) {
    const double* x = pair_values.col(v).data();
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == v) continue;
      total += x[j];
      if (sigma[j] != sigma[v]) block_part(block_pair_index(sigma[v], sigma[j], K), v) += x[j];
    }
    out(p + v) = total;
  }
  for (int v = 0; v < n; ++v) out.head(p) += block_part.col(v);
  out.head(p) *= 0.5;
  return out;
}

Eigen::VectorXd design_transpose_times_reference(const DesignMatrix& design,
                                                 const Eigen::MatrixXd& pair_values) {
  const int n = design.num_nodes;
  Eigen::VectorXd v(design.x.rows());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) v(design.row(i, j)) = pair_values(i, j);
  }
  return design.x.transpose() * v;
}

Eigen::MatrixXd centered_adjacency(const ModelData& data) {
  const int n = data.num_nodes();
  Eigen::MatrixXd kappa(n, n);
  for (int j = 0; j < n; ++j) {
    const unsigned char* a = data.adjacency_row(j);
    for (int i = 0; i < n; ++i) kappa(i, j) = i == j ? 0.0 : static_cast<double>(a[i]) - 0.5;
  }
  return kappa;
}

namespace {

double loglik_row(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                  const Eigen::VectorXd& eta, int i) {
  const int n = data.num_nodes();
  const unsigned char* a = data.adjacency_row(i);
  const int si = sigma[i] - 1;
  double acc = 0.0;
  for (int j = i + 1; j < n; ++j) {
    const double s = blocks(si, sigma[j] - 1) + eta(i) + eta(j);
    acc += (a[j] ? s : 0.0) - softplus(s);
  }
  return acc;
}

}  // namespace

double log_likelihood(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                      const Eigen::VectorXd& eta) {
  const int n = data.num_nodes();
  std::vector<double> rows(n, 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) rows[i] = loglik_row(data, sigma, blocks, eta, i);
  double total = 0.0;
  for (double r : rows) total += r;
  return total;
}

void build_softplus_table(const Eigen::VectorXd& gamma, const Eigen::VectorXd& eta, int K,
                          SoftplusTable& table) {
  const int n = static_cast<int>(eta.size());
  const int levels = 1 + num_block_pairs(K);
  table.gamma = gamma;
  table.eta = eta;
  table.num_nodes = n;
  table.levels = levels;
  table.values.resize(static_cast<std::size_t>(levels) * n * n);
  double* base = table.values.data();
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) {
    for (int g = 0; g < levels; ++g) {
      const double shift = (g == 0 ? 0.0 : gamma(g - 1)) + eta(i);
      double* row = base + (static_cast<std::size_t>(g) * n + i) * n;
      if (i + 1 < n) vmath::softplus_shifted(eta.data() + i + 1, shift, n - i - 1, row + i + 1);
      row[i] = 0.0;
    }
  }
  // Mirror the strict upper triangle.
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int g = 0; g < levels; ++g) {
      double* row = base + (static_cast<std::size_t>(g) * n + i) * n;
      for (int j = 0; j < i; ++j) row[j] = base[(static_cast<std::size_t>(g) * n + j) * n + i];
    }
  }
}

double log_likelihood(const ModelData& data, const LabelVector& sigma, const Eigen::MatrixXd& blocks,
                      const Eigen::VectorXd& eta, const SoftplusTable& table) {
  const int n = data.num_nodes();
  const Eigen::MatrixXi lv = block_levels(sigma.num_labels());
  std::vector<double> rows(n, 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const int si = sigma[i] - 1;
    double acc = 0.0;
    for (int j : data.graph().neighbors(i)) {
      if (j > i) acc += blocks(si, sigma[j] - 1) + eta(i) + eta(j);
    }
    for (int j = i + 1; j < n; ++j) acc -= table.row(lv(si, sigma[j] - 1), i)[j];
    rows[i] = acc;
  }
  double total = 0.0;
  for (double r : rows) total += r;
  return total;
}

double log_likelihood_serial(const ModelData& data, const LabelVector& sigma,
                             const Eigen::MatrixXd& blocks, const Eigen::VectorXd& eta) {
  const int n = data.num_nodes();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double s = blocks(sigma[i] - 1, sigma[j] - 1) + eta(i) + eta(j);
      total += (data.edge(i, j) ? s : 0.0) - std::log1p(std::exp(s));
    }
  }
  return total;
}

}  // namespace kernels
}  // namespace pgsbm
