#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "pgsbm/graph.hpp"
#include "pgsbm/labels.hpp"
#include "pgsbm/trace.hpp"

namespace pgsbm {

/// Per-node argmax of the marginal label frequencies (smallest label on
/// ties), remapped to canonical form. Throws UsageError on an empty trace.
LabelVector centroid_estimate(const SampleTrace& trace);

/// n x n matrix of empirical co-clustering frequencies Pr(sigma_i = sigma_j).
Eigen::MatrixXd coclustering(const SampleTrace& trace);

/// Monte-Carlo estimate of E[B(candidate, sigma)] over the trace draws.
double expected_binder(const LabelVector& candidate, const Eigen::MatrixXd& coclust);
double expected_binder(const LabelVector& candidate, const SampleTrace& trace);

/// Monte-Carlo estimate of E[H(candidate, sigma)]; the draws are canonical,
/// so this is the risk in the quotient space.
double expected_hamming(const LabelVector& candidate, const SampleTrace& trace);

enum class BinderCandidates { kSamples, kSamplesAndCentroid };

/// Candidate (distinct sampled sigma, optionally plus the centroid) with
/// the smallest estimated expected Binder loss; first candidate on ties.
LabelVector binder_estimate(const SampleTrace& trace,
                            BinderCandidates candidates = BinderCandidates::kSamplesAndCentroid);

struct MapEstimate {
  LabelVector sigma;
  double log_post = 0.0;
  int frequency = 0;
  bool from_mode_find = false;
};

/// Most frequent sigma in the trace; ties go to the larger recorded log
/// posterior, then to the first encountered. When a mode-finding state is
/// supplied it wins if its log posterior is higher.
MapEstimate map_estimate(const SampleTrace& trace,
                         const std::optional<std::pair<LabelVector, double>>& mode = std::nullopt);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Equal-tailed quantile interval per gamma_kl, in block_pair_index order.
std::vector<Interval> gamma_credible_interval(const SampleTrace& trace, double level);

struct EtaDegreeRow {
  int node = 0;
  int degree = 0;
  double eta_mean = 0.0;
  double logit_degree = 0.0;
  /// Degree 0 or n-1: logit undefined, excluded from the correlation.
  bool flagged = false;
};

struct EtaDegreeDiagnostic {
  std::vector<EtaDegreeRow> rows;
  /// Pearson correlation over unflagged nodes; NaN when undefined.
  double correlation = 0.0;
  bool correlation_defined = false;
};

EtaDegreeDiagnostic eta_degree_diagnostic(const SampleTrace& trace, const Graph& graph);
EtaDegreeDiagnostic eta_degree_diagnostic(const Eigen::VectorXd& eta_mean, const Graph& graph);

double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace pgsbm
