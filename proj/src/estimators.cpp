#include "pgsbm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pgsbm/errors.hpp"

namespace pgsbm {

namespace {

void require_samples(const SampleTrace& trace) {
  if (trace.empty()) throw UsageError("empty trace");
}

}  // namespace

LabelVector centroid_estimate(const SampleTrace& trace) {
  require_samples(trace);
  const int n = trace.num_nodes;
  const int K = trace.num_communities;
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    int best = 1;
    for (int k = 2; k <= K; ++k) {
      if (trace.count(i, k) > trace.count(i, best)) best = k;
    }
    labels[i] = best;
  }
  return remap(LabelVector(std::move(labels), K)).sigma;
}

Eigen::MatrixXd coclustering(const SampleTrace& trace) {
  require_samples(trace);
  const int n = trace.num_nodes;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : trace.sigma_samples) {
    for (int j = 0; j < n; ++j) {
      const int sj = s[j];
      for (int i = 0; i < n; ++i) p(i, j) += s[i] == sj ? 1.0 : 0.0;
    }
  }
  return p / static_cast<double>(trace.size());
}

// E[B] = sum_{i<j} P(same) when the candidate separates i and j, and
// 1 - P(same) when it joins them.
double expected_binder(const LabelVector& candidate, const Eigen::MatrixXd& coclust) {
  const int n = candidate.size();
  if (coclust.rows() != n) throw UsageError("candidate length differs from trace");
  double total = 0.0;
  for (int j = 1; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      const double p = coclust(i, j);
      total += candidate[i] == candidate[j] ? 1.0 - p : p;
    }
  }
  return total;
}

double expected_binder(const LabelVector& candidate, const SampleTrace& trace) {
  return expected_binder(candidate, coclustering(trace));
}

double expected_hamming(const LabelVector& candidate, const SampleTrace& trace) {
  require_samples(trace);
  if (candidate.size() != trace.num_nodes) throw UsageError("candidate length differs from trace");
  double total = 0.0;
  for (int i = 0; i < trace.num_nodes; ++i) {
    const int k = candidate[i];
    const std::int64_t hits = k <= trace.num_communities ? trace.count(i, k) : 0;
    total += 1.0 - static_cast<double>(hits) / static_cast<double>(trace.size());
  }
  return total;
}

LabelVector binder_estimate(const SampleTrace& trace, BinderCandidates candidates) {
  require_samples(trace);
  const Eigen::MatrixXd p = coclustering(trace);
  std::map<std::vector<int>, bool> seen;
  const LabelVector* best = nullptr;
  double best_risk = std::numeric_limits<double>::infinity();
  for (const auto& s : trace.sigma_samples) {
    std::vector<int> key(s.values().begin(), s.values().end());
    if (!seen.emplace(std::move(key), true).second) continue;
    const double r = expected_binder(s, p);
    if (r < best_risk) {
      best_risk = r;
      best = &s;
    }
  }
  LabelVector out = *best;
  if (candidates == BinderCandidates::kSamplesAndCentroid) {
    LabelVector c = centroid_estimate(trace);
    if (expected_binder(c, p) < best_risk) out = std::move(c);
  }
  return out;
}

MapEstimate map_estimate(const SampleTrace& trace,
                         const std::optional<std::pair<LabelVector, double>>& mode) {
  require_samples(trace);
  struct Entry {
    std::size_t first;
    int count;
    double log_post;
  };
  std::map<std::vector<int>, Entry> table;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto v = trace.sigma_samples[t].values();
    auto [it, inserted] =
        table.try_emplace(std::vector<int>(v.begin(), v.end()), Entry{t, 0, trace.log_post[t]});
    ++it->second.count;
    it->second.log_post = std::max(it->second.log_post, trace.log_post[t]);
  }
  const Entry* best = nullptr;
  for (const auto& [key, e] : table) {
    if (!best || e.count > best->count ||
        (e.count == best->count &&
         (e.log_post > best->log_post || (e.log_post == best->log_post && e.first < best->first)))) {
      best = &e;
    }
  }
  MapEstimate out{trace.sigma_samples[best->first], best->log_post, best->count, false};
  if (mode && mode->second > out.log_post) {
    out.sigma = remap(mode->first).sigma;
    out.log_post = mode->second;
    out.frequency = 0;
    for (const auto& s : trace.sigma_samples) out.frequency += s == out.sigma ? 1 : 0;
    out.from_mode_find = true;
  }
  return out;
}

std::vector<Interval> gamma_credible_interval(const SampleTrace& trace, double level) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError("level must lie in (0, 1)");
  if (trace.gamma_samples.empty()) throw UsageError("empty trace");
  const auto p = static_cast<int>(trace.gamma_samples.front().size());
  const double tail = (1.0 - level) / 2.0;
  std::vector<Interval> out(p);
  std::vector<double> v(trace.gamma_samples.size());
  for (int k = 0; k < p; ++k) {
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = trace.gamma_samples[t](k);
    out[k] = {quantile(v, tail), quantile(v, 1.0 - tail)};
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  if (m != y.size() || m < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

EtaDegreeDiagnostic eta_degree_diagnostic(const Eigen::VectorXd& eta_mean, const Graph& graph) {
  const int n = graph.num_nodes();
  if (eta_mean.size() != n) throw UsageError("eta length differs from node count");
  EtaDegreeDiagnostic out;
  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i) {
    EtaDegreeRow row;
    row.node = i;
    row.degree = graph.degree(i);
    row.eta_mean = eta_mean(i);
    if (row.degree == 0 || row.degree == n - 1) {
      row.flagged = true;
      row.logit_degree = std::numeric_limits<double>::quiet_NaN();
    } else {
      const double f = static_cast<double>(row.degree) / (n - 1);
      row.logit_degree = std::log(f / (1.0 - f));
      xs.push_back(row.logit_degree);
      ys.push_back(row.eta_mean);
    }
    out.rows.push_back(row);
  }
  out.correlation = pearson(xs, ys);
  out.correlation_defined = !std::isnan(out.correlation);
  return out;
}

EtaDegreeDiagnostic eta_degree_diagnostic(const SampleTrace& trace, const Graph& graph) {
  require_samples(trace);
  return eta_degree_diagnostic(trace.eta_mean(), graph);
}

}  // namespace pgsbm
