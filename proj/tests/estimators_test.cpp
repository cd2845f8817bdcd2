#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pgsbm/errors.hpp"
#include "pgsbm/estimators.hpp"
#include "pgsbm/gibbs.hpp"
#include "pgsbm/synth.hpp"
#include "test_util.hpp"

using namespace pgsbm;

namespace {

void add(SampleTrace& t, const LabelVector& sigma, int copies = 1, double lp = 0.0, double gamma = -1.0) {
  Eigen::VectorXd g(num_block_pairs(t.num_communities));
  g.setConstant(gamma);
  const Eigen::VectorXd eta = Eigen::VectorXd::Zero(t.num_nodes);
  const Eigen::VectorXd pi = Eigen::VectorXd::Constant(t.num_communities, 1.0 / t.num_communities);
  for (int c = 0; c < copies; ++c) {
    t.append(static_cast<std::int64_t>(t.size()) + 1, 0, lp, sigma, g, eta, pi, false);
  }
}

std::vector<int> vec(const LabelVector& l) { return {l.values().begin(), l.values().end()}; }

// All 2^n label vectors over {1, 2}.
std::vector<std::vector<int>> all_binary(int n) {
  std::vector<std::vector<int>> out;
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = (mask >> i) & 1 ? 2 : 1;
    out.push_back(v);
  }
  return out;
}

// Canonical vectors over {1, 2} of length n (first entry 1).
std::vector<std::vector<int>> canonical_binary(int n) {
  std::vector<std::vector<int>> out;
  for (const auto& v : all_binary(n)) {
    if (v[0] == 1) out.push_back(v);
  }
  return out;
}

struct Enumerated {
  std::vector<std::vector<int>> support;
  std::vector<int> weights;
  SampleTrace trace{5, 2};
};

// Random integer weights on the canonical configurations, redrawn until no
// node has tied marginal counts.
Enumerated enumerated_posterior(std::mt19937_64& g) {
  const int n = 5;
  for (;;) {
    Enumerated e;
    e.support = canonical_binary(n);
    std::uniform_int_distribution<int> w(1, 200);
    std::vector<long> ones(n, 0), twos(n, 0);
    for (const auto& v : e.support) {
      const int wt = w(g);
      e.weights.push_back(wt);
      for (int i = 0; i < n; ++i) (v[i] == 1 ? ones : twos)[i] += wt;
    }
    bool tie = false;
    for (int i = 0; i < n; ++i) tie |= ones[i] == twos[i];
    if (tie) continue;
    for (std::size_t k = 0; k < e.support.size(); ++k) add(e.trace, LabelVector(e.support[k], 2), e.weights[k]);
    return e;
  }
}

long expected_hamming_exact(const std::vector<int>& cand, const Enumerated& e) {
  long risk = 0;
  for (std::size_t k = 0; k < e.support.size(); ++k) {
    long h = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) h += cand[i] != e.support[k][i] ? 1 : 0;
    risk += h * e.weights[k];
  }
  return risk;
}

long expected_binder_exact(const std::vector<int>& cand, const Enumerated& e) {
  long risk = 0;
  for (std::size_t k = 0; k < e.support.size(); ++k) risk += testing_util::binder_pairs(cand, e.support[k]) * e.weights[k];
  return risk;
}

}  // namespace

TEST(Centroid, Examples) {
  SampleTrace t(4, 2);
  add(t, LabelVector({1, 1, 2, 2}), 3);
  add(t, LabelVector({1, 2, 2, 2}));
  EXPECT_EQ(vec(centroid_estimate(t)), (std::vector<int>{1, 1, 2, 2}));

  SampleTrace same(5, 3);
  add(same, LabelVector({1, 2, 2, 3, 1}, 3), 7);
  EXPECT_EQ(vec(centroid_estimate(same)), (std::vector<int>{1, 2, 2, 3, 1}));
}

TEST(Centroid, TiesGoToSmallestLabelThenRemap) {
  SampleTrace t(4, 2);
  add(t, LabelVector({1, 1, 2, 2}));
  add(t, LabelVector({1, 2, 1, 2}));
  // Nodes 1 and 2 tie and take label 1.
  EXPECT_EQ(vec(centroid_estimate(t)), (std::vector<int>{1, 1, 1, 2}));
}

TEST(Centroid, ResultIsCanonical) {
  // Per-node argmax (2, 2, 1, 1) cannot occur from canonical samples, but
  // argmax over mixed samples can still be non-canonical for K = 3.
  SampleTrace t(6, 3);
  add(t, LabelVector({1, 2, 2, 3, 3, 3}, 3), 2);
  add(t, LabelVector({1, 2, 3, 3, 2, 2}, 3), 1);
  add(t, LabelVector({1, 1, 2, 2, 3, 3}, 3), 1);
  const LabelVector c = centroid_estimate(t);
  EXPECT_TRUE(is_canonical(c.values()));
}

TEST(Centroid, EmptyTraceThrows) {
  SampleTrace t(4, 2);
  EXPECT_THROW(centroid_estimate(t), UsageError);
  EXPECT_THROW(binder_estimate(t), UsageError);
  EXPECT_THROW(map_estimate(t), UsageError);
  EXPECT_THROW(gamma_credible_interval(t, 0.95), UsageError);
}

TEST(Centroid, InvariantToUniformRelabeling) {
  std::mt19937_64 g(1);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 8, K = 3;
    std::vector<int> phi{0, 1, 2, 3};
    std::shuffle(phi.begin() + 1, phi.end(), g);
    SampleTrace a(n, K), b(n, K);
    for (int t = 0; t < 20; ++t) {
      const LabelVector s(testing_util::random_labels(g, n, K), K);
      add(a, remap(s).sigma);
      add(b, remap(relabel(s, phi)).sigma);
    }
    EXPECT_EQ(centroid_estimate(a), centroid_estimate(b));
  }
}

TEST(Centroid, MinimizesExpectedHammingOnEnumeratedPosteriors) {
  std::mt19937_64 g(2);
  for (int rep = 0; rep < 20; ++rep) {
    const Enumerated e = enumerated_posterior(g);
    std::vector<int> best;
    long best_risk = std::numeric_limits<long>::max();
    for (const auto& cand : all_binary(5)) {
      const long r = expected_hamming_exact(cand, e);
      if (r < best_risk) {
        best_risk = r;
        best = cand;
      }
    }
    EXPECT_EQ(vec(centroid_estimate(e.trace)), best);
    const double total = std::accumulate(e.weights.begin(), e.weights.end(), 0.0);
    EXPECT_NEAR(expected_hamming(centroid_estimate(e.trace), e.trace), best_risk / total, 1e-12);
  }
}

TEST(Binder, CoclusteringAndRisk) {
  SampleTrace t(4, 2);
  add(t, LabelVector({1, 1, 2, 2}), 3);
  add(t, LabelVector({1, 2, 2, 2}));
  const Eigen::MatrixXd p = coclustering(t);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.75);
  EXPECT_DOUBLE_EQ(p(2, 3), 1.0);
  EXPECT_DOUBLE_EQ(p(1, 2), 0.25);
  EXPECT_DOUBLE_EQ(p(0, 0), 1.0);
  const LabelVector cand({1, 1, 2, 2});
  // Per-sample losses 0 x3 and B((1,1,2,2),(1,2,2,2)) = 3.
  EXPECT_DOUBLE_EQ(expected_binder(cand, t), 0.75);
  EXPECT_DOUBLE_EQ(expected_binder(cand, p), 0.75);
}

TEST(Binder, SingleSample) {
  SampleTrace t(5, 2);
  add(t, LabelVector({1, 2, 2, 1, 2}), 4);
  EXPECT_EQ(vec(binder_estimate(t)), (std::vector<int>{1, 2, 2, 1, 2}));
  EXPECT_DOUBLE_EQ(expected_binder(binder_estimate(t), t), 0.0);
}

TEST(Binder, NeverWorseThanCentroid) {
  std::mt19937_64 g(3);
  for (int rep = 0; rep < 50; ++rep) {
    SampleTrace t(9, 3);
    for (int s = 0; s < 15; ++s) add(t, remap(LabelVector(testing_util::random_labels(g, 9, 3), 3)).sigma);
    const LabelVector b = binder_estimate(t);
    EXPECT_LE(expected_binder(b, t), expected_binder(centroid_estimate(t), t) + 1e-12);
    const LabelVector only = binder_estimate(t, BinderCandidates::kSamples);
    bool sampled = false;
    for (const auto& s : t.sigma_samples) sampled |= s == only;
    EXPECT_TRUE(sampled);
  }
}

TEST(Binder, CandidateMinimumIsGlobalOnEnumeratedPosteriors) {
  std::mt19937_64 g(4);
  for (int rep = 0; rep < 20; ++rep) {
    const Enumerated e = enumerated_posterior(g);
    long best = std::numeric_limits<long>::max();
    for (const auto& cand : all_binary(5)) best = std::min(best, expected_binder_exact(cand, e));
    const double total = std::accumulate(e.weights.begin(), e.weights.end(), 0.0);
    const LabelVector chosen = binder_estimate(e.trace);
    EXPECT_EQ(expected_binder_exact(vec(chosen), e), best);
    EXPECT_NEAR(expected_binder(chosen, e.trace), best / total, 1e-9);
  }
}

TEST(Binder, TermwiseHammingBound) {
  std::mt19937_64 g(5);
  SampleTrace t(10, 3);
  for (int s = 0; s < 40; ++s) add(t, remap(LabelVector(testing_util::random_labels(g, 10, 3), 3)).sigma);
  const LabelVector cand = centroid_estimate(t);
  double bound = 0.0;
  for (const auto& s : t.sigma_samples) {
    const BinderBound r = binder_hamming_bound(cand, s);
    EXPECT_LE(static_cast<double>(r.binder), r.bound);
    bound += r.bound;
  }
  EXPECT_LE(expected_binder(cand, t), bound / t.size() + 1e-12);
}

TEST(Map, FrequencyMode) {
  SampleTrace t(4, 2);
  add(t, LabelVector({1, 1, 2, 2}), 3);
  add(t, LabelVector({1, 2, 2, 2}));
  const MapEstimate m = map_estimate(t);
  EXPECT_EQ(vec(m.sigma), (std::vector<int>{1, 1, 2, 2}));
  EXPECT_EQ(m.frequency, 3);
  EXPECT_FALSE(m.from_mode_find);
}

TEST(Map, TiesUseLogPosteriorThenOrder) {
  SampleTrace t(4, 2);
  add(t, LabelVector({1, 1, 2, 2}), 1, -10.0);
  add(t, LabelVector({1, 2, 2, 2}), 1, -5.0);
  add(t, LabelVector({1, 2, 1, 2}), 1, -7.0);
  EXPECT_EQ(vec(map_estimate(t).sigma), (std::vector<int>{1, 2, 2, 2}));

  SampleTrace u(4, 2);
  add(u, LabelVector({1, 2, 1, 2}), 1, -3.0);
  add(u, LabelVector({1, 1, 2, 2}), 1, -3.0);
  EXPECT_EQ(vec(map_estimate(u).sigma), (std::vector<int>{1, 2, 1, 2}));
}

TEST(Map, ModeFindResultWinsWhenHigher) {
  SampleTrace t(4, 2);
  add(t, LabelVector({1, 1, 2, 2}), 3, -10.0);
  const MapEstimate lower = map_estimate(t, std::make_pair(LabelVector({1, 2, 2, 2}), -20.0));
  EXPECT_EQ(vec(lower.sigma), (std::vector<int>{1, 1, 2, 2}));
  const MapEstimate higher = map_estimate(t, std::make_pair(LabelVector({1, 2, 2, 2}), -1.0));
  EXPECT_EQ(vec(higher.sigma), (std::vector<int>{1, 2, 2, 2}));
  EXPECT_TRUE(higher.from_mode_find);
  EXPECT_DOUBLE_EQ(higher.log_post, -1.0);
}

TEST(Map, FrequencyModeConvergesOnEnumeratedPosterior) {
  std::mt19937_64 g(6);
  const auto support = canonical_binary(5);
  std::vector<double> w(support.size());
  std::uniform_real_distribution<double> u(1.0, 2.0);
  for (double& x : w) x = u(g);
  w[5] = 6.0;  // clear mode
  std::discrete_distribution<int> pick(w.begin(), w.end());
  SampleTrace t(5, 2);
  for (int s = 0; s < 10000; ++s) add(t, LabelVector(support[pick(g)], 2));
  EXPECT_EQ(vec(map_estimate(t).sigma), support[5]);
}

TEST(GammaInterval, ConstantAndNormal) {
  SampleTrace t(4, 2);
  add(t, LabelVector({1, 1, 2, 2}), 10, 0.0, -2.5);
  auto iv = gamma_credible_interval(t, 0.95);
  ASSERT_EQ(iv.size(), 1u);
  EXPECT_DOUBLE_EQ(iv[0].lo, -2.5);
  EXPECT_DOUBLE_EQ(iv[0].hi, -2.5);

  SampleTrace z(4, 2);
  std::mt19937_64 g(7);
  std::normal_distribution<double> normal;
  for (int s = 0; s < 100000; ++s) add(z, LabelVector({1, 1, 2, 2}), 1, 0.0, normal(g));
  iv = gamma_credible_interval(z, 0.95);
  EXPECT_NEAR(iv[0].lo, -1.96, 0.03);
  EXPECT_NEAR(iv[0].hi, 1.96, 0.03);
  EXPECT_THROW(gamma_credible_interval(z, 1.0), UsageError);
  EXPECT_THROW(gamma_credible_interval(z, 0.0), UsageError);
}

TEST(EtaDegree, RegularGraphUndefined) {
  std::vector<std::pair<int, int>> cycle;
  for (int i = 0; i < 8; ++i) cycle.emplace_back(i, (i + 1) % 8);
  const Graph g(8, cycle);
  Eigen::VectorXd eta = Eigen::VectorXd::LinSpaced(8, -1.0, 1.0);
  const EtaDegreeDiagnostic d = eta_degree_diagnostic(eta, g);
  EXPECT_FALSE(d.correlation_defined);
  EXPECT_TRUE(std::isnan(d.correlation));
  ASSERT_EQ(d.rows.size(), 8u);
  EXPECT_NEAR(d.rows[0].logit_degree, std::log((2.0 / 7.0) / (5.0 / 7.0)), 1e-12);
}

TEST(EtaDegree, FullDegreeNodeFlagged) {
  // Star centre 0 plus a few extra edges.
  std::vector<std::pair<int, int>> e{{1, 2}, {3, 4}, {4, 5}};
  for (int v = 1; v < 6; ++v) e.emplace_back(0, v);
  const Graph g(6, e);
  Eigen::VectorXd eta(6);
  eta << 3.0, 0.1, 0.1, 0.1, 0.5, 0.0;
  const EtaDegreeDiagnostic d = eta_degree_diagnostic(eta, g);
  EXPECT_TRUE(d.rows[0].flagged);
  EXPECT_EQ(d.rows[0].degree, 5);
  for (int v = 1; v < 6; ++v) EXPECT_FALSE(d.rows[v].flagged);
  EXPECT_TRUE(d.correlation_defined);
  // Correlation over nodes 1..5 only.
  std::vector<double> x, y;
  for (int v = 1; v < 6; ++v) {
    const double q = g.degree(v) / 5.0;
    x.push_back(eta(v));
    y.push_back(std::log(q / (1 - q)));
  }
  EXPECT_NEAR(d.correlation, pearson(x, y), 1e-12);
}

TEST(EtaDegree, SpikePositiveCorrelation) {
  const Synthetic sp = gen_spike(SpikeSpec{10, 5});
  const ModelData data(sp.graph);
  FitOptions opt;
  opt.chains = 1;
  opt.restarts = 4;
  opt.iters = 600;
  opt.burnin = 100;
  const FitResult r = fit(data, Hyperparams::defaults(2), opt);
  const EtaDegreeDiagnostic d = eta_degree_diagnostic(r.merged, sp.graph);
  EXPECT_TRUE(d.correlation_defined);
  EXPECT_GT(d.correlation, 0.5);
}

TEST(Pearson, Basic) {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, c{1, 1, 1, 1};
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, z), -1.0, 1e-15);
  EXPECT_TRUE(std::isnan(pearson(x, c)));
}

TEST(Estimators, TwoCliqueBinderAgreesWithCentroid) {
  const Graph g = testing_util::two_cliques(5, 1);
  const ModelData data(g);
  FitOptions opt;
  opt.chains = 2;
  opt.restarts = 8;
  opt.iters = 1500;
  opt.burnin = 300;
  const FitResult r = fit(data, Hyperparams::defaults(2), opt);
  EXPECT_EQ(binder_estimate(r.merged), centroid_estimate(r.merged));
  EXPECT_EQ(error_rate(centroid_estimate(r.merged), testing_util::blocks_of(5, 2)), 0.0);
}
