#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pgsbm {

class Graph;

/// Assignment of n nodes to communities labelled 1..K.
///
/// Community sizes are cached and kept consistent through set(). The
/// canonical flag is true when labels appear in first-appearance order
/// 1, 2, ..., k (see remap()).
class LabelVector {
 public:
  LabelVector() = default;
  /// Throws UsageError unless every entry is in 1..K.
  LabelVector(std::vector<int> labels, int K);
  /// K taken as the largest label present.
  explicit LabelVector(std::vector<int> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  int num_labels() const { return K_; }
  int operator[](int i) const { return labels_[i]; }
  std::span<const int> values() const { return labels_; }

  /// N_k for k = 1..K, stored at index k-1.
  std::span<const int> sizes() const { return sizes_; }
  int size_of(int k) const { return sizes_[k - 1]; }
  int min_size() const;
  int num_present() const;

  bool canonical() const;
  void set(int i, int label);

  bool operator==(const LabelVector& o) const { return labels_ == o.labels_ && K_ == o.K_; }

 private:
  std::vector<int> labels_;
  std::vector<int> sizes_;
  int K_ = 0;
  mutable std::optional<bool> canonical_;
};

/// First 1-based position of each present label, listed by increasing label.
std::vector<int> ind(const LabelVector& sigma);

/// Labels in the order of their first appearance.
std::vector<int> ord(const LabelVector& sigma);

/// True when ord(sigma) = (1, 2, ..., k).
bool is_canonical(std::span<const int> labels);

struct RemapResult {
  LabelVector sigma;
  /// rho[k] is the canonical label assigned to old label k (index 0 unused).
  /// Labels absent from the input take the remaining slots in increasing
  /// order, so rho is a permutation of 1..K.
  std::vector<int> rho;
};

/// Relabels sigma so that labels appear in first-appearance order.
RemapResult remap(const LabelVector& sigma);

/// Applies phi to every entry; phi[k] is the image of label k (phi[0] unused).
LabelVector relabel(const LabelVector& sigma, std::span<const int> phi);

int hamming(const LabelVector& a, const LabelVector& b);

/// Binder loss: number of pairs i<j on which a and b disagree about
/// co-membership. Computed from the contingency table in O(n + K_a K_b).
std::int64_t binder(const LabelVector& a, const LabelVector& b);

struct BinderBound {
  std::int64_t binder = 0;
  int hamming = 0;
  /// H (n - H/2), exact in halves.
  double bound = 0.0;
};

/// Returns B, H and the Hamming bound on B. Throws std::logic_error if the
/// bound fails, or if both vectors use labels {1, 2} only and B != H (n - H).
BinderBound binder_hamming_bound(const LabelVector& a, const LabelVector& b);

/// Misclassification rate under the best one-to-one matching of labels,
/// found by maximum-overlap assignment on the contingency table.
double error_rate(const LabelVector& estimate, const LabelVector& reference);

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7).
double quantile(std::vector<double> values, double p);

/// (q/2, 1 - q/2) quantiles of the supplied error rates.
std::pair<double, double> q_error_interval(std::span<const double> rates, double q);

/// Reads "token label" lines aligned to the graph's node order. Labels are
/// recoded to 1..K by first appearance in node order. Throws DataError on
/// unknown tokens, missing nodes, or fewer than two labels.
LabelVector load_labels(std::istream& in, const Graph& graph);
LabelVector load_labels_file(const std::string& path, const Graph& graph);

/// Reads "token label" lines without a graph, preserving file order. Labels
/// are kept as written (must be >= 1).
std::vector<std::pair<std::string, int>> read_label_pairs(std::istream& in);

void write_labels(std::ostream& out, const Graph& graph, const LabelVector& sigma);

}  // namespace pgsbm
