#include "pgsbm/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "pgsbm/errors.hpp"
#include "pgsbm/vector_math.hpp"

namespace pgsbm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

constexpr double kPi = std::numbers::pi;
constexpr double kTrunc = 0.64;

double log_std_normal_cdf(double x) { return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2)); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Ratios a_n(x) / a_0(x) of the alternating-series coefficients of the
// Jacobi density are (2n + 1) w^{n(n+1)/2}, with w = exp(-pi^2 x) right of the
// truncation point and w = exp(-4 / x) left of it.
double series_base(double x) { return x > kTrunc ? std::exp(-kPi * kPi * x) : std::exp(-4.0 / x); }

// Probability of proposing from the exponential tail (x > kTrunc).
double exponential_mass(double z, double fz) {
  const double t = kTrunc;
  const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
  const double a = -std::sqrt(1.0 / t) * (t * z + 1.0);
  double q_over_p;
  if (z < 30.0) {
    const double ez = std::exp(z);
    q_over_p = 4.0 / kPi * fz * std::exp(fz * t) * (std_normal_cdf(b) / ez + std_normal_cdf(a) * ez);
  } else {
    const double x0 = std::log(fz) + fz * t;
    const double xb = x0 - z + log_std_normal_cdf(b);
    const double xa = x0 + z + log_std_normal_cdf(a);
    q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  }
  return 1.0 / (1.0 + q_over_p);
}

// Inverse Gaussian IG(1/z, 1) truncated to (0, kTrunc).
double truncated_inverse_gaussian(double z, Rng& rng) {
  const double t = kTrunc;
  double x = t + 1.0;
  if (z < 1.0 / t) {
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1 = rng.exponential();
      double e2 = rng.exponential();
      while (e1 * e1 > 2.0 * e2 / t) {
        e1 = rng.exponential();
        e2 = rng.exponential();
      }
      x = 1.0 + e1 * t;
      x = t / (x * x);
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    const double mu = 1.0 / z;
    while (x > t) {
      double y = rng.normal();
      y *= y;
      const double half_mu = 0.5 * mu;
      const double mu_y = mu * y;
      x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
      if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

// Standard normal conditioned on >= a, a > 0 (Robert's exponential proposal).
double std_normal_lower_tail(double a, Rng& rng) {
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  while (true) {
    const double z = a + rng.exponential() / lambda;
    const double d = z - lambda;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
  }
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(mix(splitmix64(seed), stream)) {}

Rng Rng::derive(std::uint64_t a, std::uint64_t b) const {
  return Rng(mix(mix(splitmix64(seed_), stream_), a), b);
}

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return normal_(engine_); }

double Rng::exponential() { return -std::log(uniform()); }

double Rng::gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

namespace {

// One PG(1, 2z) draw given the exponential-proposal weight p_exp.
double pg1_draw(double z, double p_exp, Rng& rng) {
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  while (true) {
    double x;
    if (rng.uniform() < p_exp) {
      x = kTrunc + rng.exponential() / fz;
    } else {
      x = truncated_inverse_gaussian(z, rng);
    }
    const double w = series_base(x);
    const double u = rng.uniform();
    double sum = 1.0, wn = 1.0, pw = 1.0;
    for (int n = 1;; ++n) {
      wn *= w;
      pw *= wn;
      const double term = (2 * n + 1) * pw;
      if (n % 2 == 1) {
        sum -= term;
        if (u <= sum) return 0.25 * x;
      } else {
        sum += term;
        if (u > sum) break;
      }
    }
  }
}

}  // namespace

double pg1(double c, Rng& rng) {
  if (!std::isfinite(c)) throw UsageError("PG(1, c) requires a finite tilt");
  const double z = 0.5 * std::abs(c);
  return pg1_draw(z, exponential_mass(z, 0.125 * kPi * kPi + 0.5 * z * z), rng);
}

void pg1_batch(std::span<const double> c, Rng& rng, std::span<double> out) {
  const int m = static_cast<int>(c.size());
  if (out.size() != c.size()) throw UsageError("pg1_batch: output size mismatch");
  thread_local std::vector<double> z, p_exp;
  z.resize(m);
  p_exp.resize(m);
  for (int j = 0; j < m; ++j) {
    if (!std::isfinite(c[j])) throw UsageError("PG(1, c) requires a finite tilt");
    z[j] = 0.5 * std::abs(c[j]);
  }
  vmath::pg_exponential_mass(z.data(), m, p_exp.data());
  for (int j = 0; j < m; ++j) {
    if (z[j] >= 30.0) p_exp[j] = exponential_mass(z[j], 0.125 * kPi * kPi + 0.5 * z[j] * z[j]);
    out[j] = pg1_draw(z[j], p_exp[j], rng);
  }
}

double pg1_mean(double c) {
  if (std::abs(c) < 1e-6) return 0.25 - c * c / 48.0;
  return std::tanh(0.5 * c) / (2.0 * c);
}

double truncnorm_upper(double mean, double sd, double upper, Rng& rng) {
  if (!(sd > 0.0)) throw UsageError("truncated normal needs sd > 0");
  if (upper == std::numeric_limits<double>::infinity()) return mean + sd * rng.normal();
  const double b = (upper - mean) / sd;
  double x;
  if (std_normal_cdf(b) >= 0.1) {
    do {
      x = rng.normal();
    } while (x > b);
  } else {
    x = -std_normal_lower_tail(-b, rng);
  }
  const double value = std::min(mean + sd * x, upper);
  return value;
}

Eigen::VectorXd mvn_truncated_nonpositive(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                          Rng& rng, TruncatedMvnStats* stats, const Eigen::VectorXd* start) {
  const long d = mean.size();
  if (cov.rows() != d || cov.cols() != d) throw UsageError("covariance shape mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();

  TruncatedMvnStats local;
  Eigen::VectorXd z(d);
  constexpr int kMaxAttempts = 1000;
  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    for (long i = 0; i < d; ++i) z(i) = rng.normal();
    Eigen::VectorXd x = mean + L * z;
    if ((x.array() <= 0.0).all()) {
      local.attempts = attempt;
      if (stats) *stats = local;
      return x;
    }
  }
  local.attempts = kMaxAttempts;
  local.used_fallback = true;

  // Coordinate-wise Gibbs on the full conditionals, from precision form.
  const Eigen::MatrixXd precision = llt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::VectorXd x = start ? start->cwiseMin(0.0) : mean.cwiseMin(0.0);
  constexpr int kSweeps = 20;
  for (int sweep = 0; sweep < kSweeps; ++sweep) {
    for (long i = 0; i < d; ++i) {
      const double qii = precision(i, i);
      double shift = 0.0;
      for (long j = 0; j < d; ++j) {
        if (j != i) shift += precision(i, j) * (x(j) - mean(j));
      }
      const double cmean = mean(i) - shift / qii;
      x(i) = truncnorm_upper(cmean, 1.0 / std::sqrt(qii), 0.0, rng);
    }
  }
  if (stats) *stats = local;
  return x;
}

Eigen::VectorXd dirichlet(std::span<const double> alpha, Rng& rng) {
  Eigen::VectorXd g(static_cast<long>(alpha.size()));
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0)) throw UsageError("Dirichlet parameters must be positive");
    g(static_cast<long>(k)) = rng.gamma(alpha[k]);
  }
  const double total = g.sum();
  if (!(total > 0.0)) {
    // All gamma draws underflowed (tiny alphas); put the mass on the largest alpha.
    g.setZero();
    long best = 0;
    for (std::size_t k = 1; k < alpha.size(); ++k) {
      if (alpha[k] > alpha[best]) best = static_cast<long>(k);
    }
    g(best) = 1.0;
    return g;
  }
  return g / total;
}

int multinomial_index(std::span<const double> p, Rng& rng) {
  double total = 0.0;
  for (double v : p) {
    if (v < 0.0) throw UsageError("multinomial probabilities must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12 * std::max<std::size_t>(1, p.size())) {
    throw UsageError("multinomial probabilities must sum to 1");
  }
  const double u = rng.uniform() * total;
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    acc += p[k];
    last_positive = static_cast<int>(k) + 1;
    if (u < acc) return last_positive;
  }
  return last_positive;
}

}  // namespace pgsbm
