#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace pgsbm {

/// Seeded random stream. Identical (seed, stream) and identical call
/// sequences give identical draws. Not shareable across threads: derive a
/// child stream per concurrent unit instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Child stream keyed on (seed, stream, a, b); independent of how many
  /// draws this stream has already produced.
  Rng derive(std::uint64_t a, std::uint64_t b = 0) const;

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Exp(1).
  double exponential();
  /// Gamma(shape, 1).
  double gamma(double shape);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Exact draw from the Polya-Gamma PG(1, c) distribution using the
/// alternating-series accept/reject sampler. Throws UsageError if c is not
/// finite.
double pg1(double c, Rng& rng);

/// out[j] ~ PG(1, c[j]), drawn in order from one stream. Same sampler as
/// pg1() with the proposal weights computed for the whole batch at once.
void pg1_batch(std::span<const double> c, Rng& rng, std::span<double> out);

/// E[PG(1, c)] = tanh(c/2) / (2c), with the limit 1/4 at c = 0.
double pg1_mean(double c);

/// N(mean, sd^2) conditioned on value <= upper. Uses plain rejection when the
/// acceptance probability is at least 0.1, else an exponential-proposal tail
/// sampler. upper may be +infinity.
double truncnorm_upper(double mean, double sd, double upper, Rng& rng);

struct TruncatedMvnStats {
  int attempts = 0;
  bool used_fallback = false;
};

/// N(mean, cov) conditioned on every coordinate being <= 0. Joint rejection
/// for up to 1000 attempts, then 20 coordinate-wise Gibbs sweeps started from
/// `start` when given (it must be feasible), else from min(mean, 0).
/// Throws NumericalError if cov is not SPD.
Eigen::VectorXd mvn_truncated_nonpositive(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                          Rng& rng, TruncatedMvnStats* stats = nullptr,
                                          const Eigen::VectorXd* start = nullptr);

/// Throws UsageError on non-positive entries.
Eigen::VectorXd dirichlet(std::span<const double> alpha, Rng& rng);

/// Category in 1..K drawn with probabilities p. Throws UsageError on negative
/// entries or when p does not sum to 1 within 1e-12 (relative to K).
int multinomial_index(std::span<const double> p, Rng& rng);

}  // namespace pgsbm
