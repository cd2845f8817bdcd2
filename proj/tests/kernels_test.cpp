#include <gtest/gtest.h>
#include <omp.h>

#include <random>

#include "pgsbm/design.hpp"
#include "pgsbm/errors.hpp"
#include "pgsbm/gaussian.hpp"
#include "pgsbm/kernels.hpp"
#include "pgsbm/model.hpp"
#include "test_util.hpp"

using namespace pgsbm;

namespace {

struct Fixture {
  Graph graph;
  LabelVector sigma;
  ModelParams params;
  Eigen::MatrixXd blocks;

  Fixture(int n, int K, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (g() % 4 == 0) e.emplace_back(i, j);
      }
    }
    graph = Graph(n, e);
    auto v = testing_util::random_labels(g, n, K);
    for (int k = 0; k < K; ++k) v[2 * k] = v[2 * k + 1] = k + 1;
    sigma = LabelVector(v, K);
    params = ModelParams::zeros(n, K);
    std::normal_distribution<double> normal;
    for (long k = 0; k < params.gamma.size(); ++k) params.gamma(k) = -std::abs(normal(g));
    for (long i = 0; i < params.eta.size(); ++i) params.eta(i) = normal(g);
    blocks = block_table(params.gamma, K);
  }
};

Eigen::MatrixXd random_spd(int d, std::mt19937_64& g) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) a(i, j) = normal(g);
  }
  return a * a.transpose() + d * Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd random_pair_matrix(int n, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.05, 0.3);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) w(i, j) = w(j, i) = u(g);
  }
  return w;
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(BlockTable, DiagonalZeroAndSymmetric) {
  Eigen::VectorXd gamma(3);
  gamma << -1.0, -2.0, -3.0;
  const Eigen::MatrixXd t = block_table(gamma, 3);
  EXPECT_EQ(t(0, 0), 0.0);
  EXPECT_EQ(t(0, 1), -1.0);
  EXPECT_EQ(t(2, 0), -2.0);
  EXPECT_EQ(t(1, 2), -3.0);
  EXPECT_EQ(t, t.transpose());
  const Eigen::MatrixXi lv = block_levels(3);
  EXPECT_EQ(lv(0, 0), 0);
  EXPECT_EQ(lv(1, 0), 1);
  EXPECT_EQ(lv(2, 1), 3);
}

TEST(DrawOmega, ParallelEqualsSerial) {
  const Fixture f(37, 3, 1);
  const ModelData data(f.graph);
  Eigen::MatrixXd a, b;
  const Rng key(5, 1);
  kernels::draw_omega(data, f.sigma, f.blocks, f.params.eta, key, 99, a);
  kernels::draw_omega_serial(data, f.sigma, f.blocks, f.params.eta, key, 99, b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, a.transpose());
  for (int i = 0; i < a.rows(); ++i) {
    EXPECT_EQ(a(i, i), 0.0);
    for (int j = 0; j < a.cols(); ++j) {
      if (i != j) {
        EXPECT_GT(a(i, j), 0.0);
      }
    }
  }
  Eigen::MatrixXd c;
  kernels::draw_omega(data, f.sigma, f.blocks, f.params.eta, key, 100, c);
  EXPECT_NE(a, c);
}

TEST(DrawOmega, IndependentOfThreadCount) {
  const Fixture f(50, 2, 2);
  const ModelData data(f.graph);
  const Rng key(8, 0);
  const int saved = omp_get_max_threads();
  Eigen::MatrixXd one, many;
  omp_set_num_threads(1);
  kernels::draw_omega(data, f.sigma, f.blocks, f.params.eta, key, 3, one);
  omp_set_num_threads(4);
  kernels::draw_omega(data, f.sigma, f.blocks, f.params.eta, key, 3, many);
  omp_set_num_threads(saved);
  EXPECT_EQ(one, many);
}

TEST(DrawOmega, MeanMatchesClosedForm) {
  const Fixture f(30, 2, 3);
  const ModelData data(f.graph);
  const int reps = 400;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(30, 30), omega;
  const Rng key(1);
  for (int t = 0; t < reps; ++t) {
    kernels::draw_omega(data, f.sigma, f.blocks, f.params.eta, key, t, omega);
    sum += omega;
  }
  // Average over all pairs of (draw mean - exact mean), scaled by its SE.
  double dev = 0.0, var = 0.0;
  for (int i = 0; i < 30; ++i) {
    for (int j = i + 1; j < 30; ++j) {
      const double s = f.blocks(f.sigma[i] - 1, f.sigma[j] - 1) + f.params.eta(i) + f.params.eta(j);
      dev += sum(i, j) / reps - pg1_mean(s);
      var += 1.0 / 24.0 / reps;  // Var PG(1, c) <= 1/24
    }
  }
  EXPECT_LT(std::abs(dev), 3.0 * std::sqrt(var));
}

TEST(Precision, StructuredEqualsDense) {
  for (int K : {2, 3, 4}) {
    const Fixture f(25, K, 10 + K);
    std::mt19937_64 g(K);
    const Eigen::MatrixXd w = random_pair_matrix(25, g);
    const Eigen::MatrixXd fast = kernels::assemble_precision(w, f.sigma, 4.0).dense();
    const Eigen::MatrixXd ref = kernels::assemble_precision_reference(build_design(25, f.sigma), w, 4.0);
    EXPECT_LT(rel_diff(fast, ref), 1e-12) << "K=" << K;
    // Direct oracle: X' W X + I / tau2.
    const DesignMatrix d = build_design(25, f.sigma);
    Eigen::VectorXd wv(d.x.rows());
    for (int i = 0; i < 25; ++i) {
      for (int j = i + 1; j < 25; ++j) wv(d.row(i, j)) = w(i, j);
    }
    const Eigen::MatrixXd direct =
        d.x.transpose() * wv.asDiagonal() * d.x + Eigen::MatrixXd::Identity(d.x.cols(), d.x.cols()) / 4.0;
    EXPECT_LT(rel_diff(fast, direct), 1e-12);
  }
}

TEST(Precision, BlockBlockPartIsDiagonal) {
  const Fixture f(20, 4, 4);
  std::mt19937_64 g(4);
  const Eigen::MatrixXd w = random_pair_matrix(20, g);
  const Eigen::MatrixXd ref = kernels::assemble_precision_reference(build_design(20, f.sigma), w, 2.0);
  const int p = num_block_pairs(4);
  const Eigen::MatrixXd gg = ref.topLeftCorner(p, p);
  EXPECT_EQ((gg - Eigen::MatrixXd(gg.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DesignTransposeTimes, MatchesReference) {
  const Fixture f(31, 3, 5);
  std::mt19937_64 g(5);
  const Eigen::MatrixXd v = random_pair_matrix(31, g);
  const DesignMatrix d = build_design(31, f.sigma);
  const Eigen::VectorXd fast = kernels::design_transpose_times(v, f.sigma);
  const Eigen::VectorXd ref = kernels::design_transpose_times_reference(d, v);
  EXPECT_LT((fast - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CenteredAdjacency, Values) {
  const Graph g = testing_util::graph_from(3, {{0, 1}});
  const Eigen::MatrixXd k = kernels::centered_adjacency(ModelData(g));
  EXPECT_EQ(k(0, 1), 0.5);
  EXPECT_EQ(k(1, 0), 0.5);
  EXPECT_EQ(k(0, 2), -0.5);
  EXPECT_EQ(k(2, 2), 0.0);
}

TEST(IrlsWeights, Values) {
  const Fixture f(12, 2, 6);
  const ModelData data(f.graph);
  Eigen::MatrixXd w, r;
  kernels::irls_weights(data, f.sigma, f.blocks, f.params.eta, w, r);
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      if (i == j) continue;
      const double s = f.blocks(f.sigma[i] - 1, f.sigma[j] - 1) + f.params.eta(i) + f.params.eta(j);
      const double mu = 1.0 / (1.0 + std::exp(-s));
      EXPECT_NEAR(w(i, j), mu * (1 - mu), 1e-14);
      EXPECT_NEAR(r(i, j), (f.graph.has_edge(i, j) ? 1.0 : 0.0) - mu, 1e-14);
    }
  }
}

TEST(LogLikelihood, AllRoutesAgree) {
  for (int K : {2, 3, 5}) {
    const Fixture f(40, K, 20 + K);
    const ModelData data(f.graph);
    const double serial = kernels::log_likelihood_serial(data, f.sigma, f.blocks, f.params.eta);
    const double parallel = kernels::log_likelihood(data, f.sigma, f.blocks, f.params.eta);
    SoftplusTable table;
    kernels::build_softplus_table(f.params.gamma, f.params.eta, K, table);
    ASSERT_TRUE(table.matches(f.params.gamma, f.params.eta));
    const double tabled = kernels::log_likelihood(data, f.sigma, f.blocks, f.params.eta, table);
    const double model = log_likelihood(data, f.sigma, f.params);
    // Pair-by-pair oracle.
    double oracle = 0.0;
    for (int i = 0; i < 40; ++i) {
      for (int j = i + 1; j < 40; ++j) {
        const double s = f.blocks(f.sigma[i] - 1, f.sigma[j] - 1) + f.params.eta(i) + f.params.eta(j);
        oracle += (f.graph.has_edge(i, j) ? s : 0.0) - std::log1p(std::exp(s));
      }
    }
    const double tol = 1e-10 * std::abs(oracle);
    EXPECT_NEAR(serial, oracle, tol);
    EXPECT_NEAR(parallel, oracle, tol);
    EXPECT_NEAR(tabled, oracle, tol);
    EXPECT_NEAR(model, oracle, tol);
  }
}

TEST(SoftplusTableTest, Values) {
  const Fixture f(15, 3, 7);
  SoftplusTable table;
  kernels::build_softplus_table(f.params.gamma, f.params.eta, 3, table);
  EXPECT_EQ(table.levels, 4);
  const Eigen::MatrixXi lv = block_levels(3);
  for (int k = 1; k <= 3; ++k) {
    for (int l = 1; l <= 3; ++l) {
      const double g = f.blocks(k - 1, l - 1);
      for (int i = 0; i < 15; ++i) {
        EXPECT_EQ(table.row(lv(k - 1, l - 1), i)[i], 0.0);
        for (int j = 0; j < 15; ++j) {
          if (j == i) continue;
          EXPECT_NEAR(table.row(lv(k - 1, l - 1), i)[j], softplus(g + f.params.eta(i) + f.params.eta(j)), 1e-13);
        }
      }
    }
  }
  Eigen::VectorXd other = f.params.eta;
  other(0) += 1e-12;
  EXPECT_FALSE(table.matches(f.params.gamma, other));
  EXPECT_TRUE(SoftplusTable::fits(120, 2));
  EXPECT_FALSE(SoftplusTable::fits(5000, 4));
}

TEST(Softplus, Stable) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_EQ(softplus(800.0), 800.0);
  EXPECT_GT(softplus(-800.0), -1.0);
  EXPECT_NEAR(softplus(-40.0), std::exp(-40.0), 1e-30);
}

TEST(Sweep, AllPivotsGiveNegativeInverse) {
  std::mt19937_64 g(1);
  for (int d : {1, 3, 8}) {
    const Eigen::MatrixXd a = random_spd(d, g);
    Eigen::MatrixXd s = a;
    std::vector<int> piv(d);
    for (int k = 0; k < d; ++k) piv[k] = k;
    sweep(s, piv);
    EXPECT_LT(rel_diff(s, -a.inverse()), 1e-12);
  }
}

TEST(Sweep, PartialPivotsGiveSchurComplement) {
  std::mt19937_64 g(2);
  const Eigen::MatrixXd a = random_spd(7, g);
  Eigen::MatrixXd s = a;
  const std::vector<int> piv{0, 1};
  sweep(s, piv);
  const Eigen::MatrixXd a11 = a.topLeftCorner(2, 2), a12 = a.topRightCorner(2, 5), a22 = a.bottomRightCorner(5, 5);
  const Eigen::MatrixXd inv = a11.inverse();
  EXPECT_LT(rel_diff(s.topLeftCorner(2, 2), -inv), 1e-12);
  EXPECT_LT(rel_diff(s.topRightCorner(2, 5), inv * a12), 1e-12);
  EXPECT_LT(rel_diff(s.bottomRightCorner(5, 5), a22 - a12.transpose() * inv * a12), 1e-12);
}

TEST(Sweep, NonPositivePivotThrows) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
  a(1, 1) = 0.0;
  EXPECT_THROW(sweep(a, 1), NumericalError);
}

TEST(SplitGaussian, PrecisionRouteEqualsCovarianceRoute) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 20; ++rep) {
    const int p = 1 + rep % 6, n = 3 + rep % 9;
    const Eigen::MatrixXd q = random_spd(p + n, g);
    Eigen::VectorXd b(p + n);
    for (int i = 0; i < p + n; ++i) b(i) = normal(g);
    const BlockGaussian fast = split_from_precision(q, b, p);
    const BlockGaussian ref = split_from_covariance(q, b, p);

    // Direct inverse-based oracle.
    const Eigen::MatrixXd v = q.inverse();
    const Eigen::VectorXd m = v * b;
    const Eigen::MatrixXd vgg = v.topLeftCorner(p, p), vge = v.topRightCorner(p, n), vee = v.bottomRightCorner(n, n);
    const Eigen::MatrixXd slope = vge * vee.inverse();
    const Eigen::MatrixXd schur = vgg - slope * vge.transpose();

    for (const BlockGaussian* bg : {&fast, &ref}) {
      EXPECT_LT(rel_diff(bg->eta_mean, m.tail(n)), 1e-10);
      EXPECT_LT(rel_diff(bg->gamma_mean, m.head(p)), 1e-10);
      EXPECT_LT(rel_diff(bg->gamma_slope, slope), 1e-10);
      EXPECT_LT(rel_diff(bg->gamma_cov, schur), 1e-10);
      EXPECT_LT(rel_diff(bg->eta_covariance(), vee), 1e-10);
    }
    Eigen::VectorXd eta(n);
    for (int i = 0; i < n; ++i) eta(i) = normal(g);
    EXPECT_LT(rel_diff(fast.gamma_mean_given(eta), ref.gamma_mean_given(eta)), 1e-10);
  }
}

TEST(SplitGaussian, EtaDrawsHaveMarginalMoments) {
  std::mt19937_64 g(4);
  const int p = 2, n = 3;
  const Eigen::MatrixXd q = random_spd(p + n, g);
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(p + n, -1.0, 1.0);
  const Eigen::MatrixXd vee = q.inverse().bottomRightCorner(n, n);
  for (const BlockGaussian& bg : {split_from_precision(q, b, p), split_from_covariance(q, b, p)}) {
    Rng rng(9);
    const int draws = 100000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(n, n);
    for (int t = 0; t < draws; ++t) {
      const Eigen::VectorXd e = bg.sample_eta(rng) - bg.eta_mean;
      sum += e;
      sq += e * e.transpose();
    }
    EXPECT_LT((sum / draws).cwiseAbs().maxCoeff(), 4.0 * std::sqrt(vee.diagonal().maxCoeff() / draws));
    EXPECT_LT((sq / draws - vee).cwiseAbs().maxCoeff(), 0.02 * vee.cwiseAbs().maxCoeff() + 1e-3);
  }
}
