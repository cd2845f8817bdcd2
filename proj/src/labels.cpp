#include "pgsbm/labels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "pgsbm/errors.hpp"
#include "pgsbm/graph.hpp"

namespace pgsbm {

LabelVector::LabelVector(std::vector<int> labels, int K)
    : labels_(std::move(labels)), sizes_(K > 0 ? K : 0, 0), K_(K) {
  if (K < 1) throw UsageError("label count K must be >= 1");
  for (int l : labels_) {
    if (l < 1 || l > K) {
      throw UsageError("label " + std::to_string(l) + " outside 1.." + std::to_string(K));
    }
    ++sizes_[l - 1];
  }
}

LabelVector::LabelVector(std::vector<int> labels)
    : LabelVector(labels, labels.empty() ? 1 : *std::max_element(labels.begin(), labels.end())) {}

int LabelVector::min_size() const {
  return sizes_.empty() ? 0 : *std::min_element(sizes_.begin(), sizes_.end());
}

int LabelVector::num_present() const {
  return static_cast<int>(std::count_if(sizes_.begin(), sizes_.end(), [](int s) { return s > 0; }));
}

bool LabelVector::canonical() const {
  if (!canonical_) canonical_ = is_canonical(labels_);
  return *canonical_;
}

void LabelVector::set(int i, int label) {
  int& cur = labels_[i];
  if (cur == label) return;
  --sizes_[cur - 1];
  ++sizes_[label - 1];
  cur = label;
  canonical_.reset();
}

std::vector<int> ind(const LabelVector& sigma) {
  std::vector<int> first(sigma.num_labels() + 1, 0);
  for (int i = 0; i < sigma.size(); ++i) {
    int& f = first[sigma[i]];
    if (f == 0) f = i + 1;
  }
  std::vector<int> out;
  for (int k = 1; k <= sigma.num_labels(); ++k) {
    if (first[k] != 0) out.push_back(first[k]);
  }
  return out;
}

std::vector<int> ord(const LabelVector& sigma) {
  std::vector<char> seen(sigma.num_labels() + 1, 0);
  std::vector<int> out;
  for (int l : sigma.values()) {
    if (!seen[l]) {
      seen[l] = 1;
      out.push_back(l);
    }
  }
  return out;
}

bool is_canonical(std::span<const int> labels) {
  int next = 1;
  for (int l : labels) {
    if (l == next) {
      ++next;
    } else if (l > next || l < 1) {
      return false;
    }
  }
  return true;
}

RemapResult remap(const LabelVector& sigma) {
  std::vector<int> rho(sigma.num_labels() + 1, 0);
  int seen = 0;
  for (int l : sigma.values()) {
    if (rho[l] == 0) rho[l] = ++seen;
  }
  std::vector<int> out(sigma.values().begin(), sigma.values().end());
  for (int& l : out) l = rho[l];
  // Absent labels keep the highest slots so K is preserved.
  for (int k = 1; k <= sigma.num_labels(); ++k) {
    if (rho[k] == 0) rho[k] = ++seen;
  }
  return {LabelVector(std::move(out), sigma.num_labels()), std::move(rho)};
}

LabelVector relabel(const LabelVector& sigma, std::span<const int> phi) {
  std::vector<int> out(sigma.values().begin(), sigma.values().end());
  int K = sigma.num_labels();
  for (int& l : out) {
    l = phi[l];
    K = std::max(K, l);
  }
  return LabelVector(std::move(out), K);
}

namespace {

void check_lengths(const LabelVector& a, const LabelVector& b) {
  if (a.size() != b.size()) {
    throw UsageError("label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
}

std::vector<std::int64_t> contingency(const LabelVector& a, const LabelVector& b) {
  const int kb = b.num_labels();
  std::vector<std::int64_t> table(static_cast<std::size_t>(a.num_labels()) * kb, 0);
  for (int i = 0; i < a.size(); ++i) ++table[(a[i] - 1) * kb + (b[i] - 1)];
  return table;
}

std::int64_t choose2(std::int64_t x) { return x * (x - 1) / 2; }

// Minimum-cost perfect assignment on a square matrix (Kuhn-Munkres with
// potentials). Returns assignment[row] = column.
std::vector<int> hungarian(const std::vector<double>& cost, int m) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= m; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        double cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(m, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  }
  return assignment;
}

}  // namespace

int hamming(const LabelVector& a, const LabelVector& b) {
  check_lengths(a, b);
  int h = 0;
  for (int i = 0; i < a.size(); ++i) h += a[i] != b[i];
  return h;
}

std::int64_t binder(const LabelVector& a, const LabelVector& b) {
  check_lengths(a, b);
  const auto table = contingency(a, b);
  std::int64_t together_both = 0;
  for (auto c : table) together_both += choose2(c);
  std::int64_t together_a = 0, together_b = 0;
  for (int s : a.sizes()) together_a += choose2(s);
  for (int s : b.sizes()) together_b += choose2(s);
  return together_a + together_b - 2 * together_both;
}

BinderBound binder_hamming_bound(const LabelVector& a, const LabelVector& b) {
  BinderBound r;
  r.binder = binder(a, b);
  r.hamming = hamming(a, b);
  const std::int64_t n = a.size();
  const std::int64_t h = r.hamming;
  // 2 * bound = H (2n - H), an integer.
  const std::int64_t twice_bound = h * (2 * n - h);
  r.bound = 0.5 * static_cast<double>(twice_bound);
  if (2 * r.binder > twice_bound) {
    throw std::logic_error("Binder loss exceeds H(n - H/2)");
  }
  const auto two_labels = [](const LabelVector& v) {
    return std::all_of(v.values().begin(), v.values().end(), [](int l) { return l <= 2; });
  };
  if (two_labels(a) && two_labels(b) && r.binder != h * (n - h)) {
    throw std::logic_error("two-label Binder loss differs from H(n - H)");
  }
  return r;
}

double error_rate(const LabelVector& estimate, const LabelVector& reference) {
  check_lengths(estimate, reference);
  if (estimate.size() == 0) return 0.0;
  const int ka = estimate.num_labels();
  const int kb = reference.num_labels();
  const int m = std::max(ka, kb);
  const auto table = contingency(estimate, reference);
  std::vector<double> cost(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < ka; ++i) {
    for (int j = 0; j < kb; ++j) cost[i * m + j] = -static_cast<double>(table[i * kb + j]);
  }
  const auto assignment = hungarian(cost, m);
  std::int64_t matched = 0;
  for (int i = 0; i < ka; ++i) {
    const int j = assignment[i];
    if (j >= 0 && j < kb) matched += table[i * kb + j];
  }
  return static_cast<double>(estimate.size() - matched) / estimate.size();
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw UsageError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::pair<double, double> q_error_interval(std::span<const double> rates, double q) {
  if (rates.empty()) throw UsageError("q-error interval needs at least one error rate");
  if (!(q > 0.0 && q < 1.0)) throw UsageError("q must lie in (0, 1)");
  std::vector<double> v(rates.begin(), rates.end());
  return {quantile(v, q / 2.0), quantile(v, 1.0 - q / 2.0)};
}

std::vector<std::pair<std::string, int>> read_label_pairs(std::istream& in) {
  std::vector<std::pair<std::string, int>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok, lab, extra;
    if (!(ls >> tok)) continue;
    if (!(ls >> lab) || (ls >> extra)) {
      throw DataError("label line " + std::to_string(lineno) + ": expected 'token label'");
    }
    int value = 0;
    try {
      std::size_t used = 0;
      value = std::stoi(lab, &used);
      if (used != lab.size()) throw std::invalid_argument(lab);
    } catch (const std::exception&) {
      throw DataError("label line " + std::to_string(lineno) + ": '" + lab + "' is not an integer");
    }
    if (value < 1) throw DataError("label line " + std::to_string(lineno) + ": labels must be >= 1");
    out.emplace_back(tok, value);
  }
  return out;
}

LabelVector load_labels(std::istream& in, const Graph& graph) {
  const int n = graph.num_nodes();
  std::vector<int> raw(n, 0);
  for (const auto& [tok, value] : read_label_pairs(in)) {
    const NodeId v = graph.find(tok);
    if (v < 0) throw DataError("label file names node '" + tok + "' not present in graph");
    raw[v] = value;
  }
  int missing = static_cast<int>(std::count(raw.begin(), raw.end(), 0));
  if (missing > 0) {
    throw DataError("missing nodes: " + std::to_string(missing) + " graph nodes have no label");
  }
  std::unordered_map<int, int> code;
  std::vector<int> recoded(n);
  for (int i = 0; i < n; ++i) {
    auto [it, inserted] = code.emplace(raw[i], static_cast<int>(code.size()) + 1);
    recoded[i] = it->second;
  }
  const int K = static_cast<int>(code.size());
  if (K < 2) throw DataError("label file must contain at least two labels");
  return LabelVector(std::move(recoded), K);
}

LabelVector load_labels_file(const std::string& path, const Graph& graph) {
  if (path == "-") return load_labels(std::cin, graph);
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file '" + path + "'");
  return load_labels(in, graph);
}

void write_labels(std::ostream& out, const Graph& graph, const LabelVector& sigma) {
  for (int i = 0; i < sigma.size(); ++i) out << graph.token(i) << ' ' << sigma[i] << '\n';
}

}  // namespace pgsbm
