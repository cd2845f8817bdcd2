#include "pgsbm/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pgsbm/design.hpp"
#include "pgsbm/errors.hpp"

namespace pgsbm {

namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

template <class T>
T parse_number(const std::string& s, const fs::path& where) {
  T value{};
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for double is available, but strtod also accepts inf/nan.
    char* end = nullptr;
    value = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw DataError("bad number '" + s + "' in " + where.string());
  } else {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || p != s.data() + s.size()) {
      throw DataError("bad integer '" + s + "' in " + where.string());
    }
  }
  return value;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return std::string(buf, p);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

void write_trace_csv(std::ostream& out, const SampleTrace& trace) {
  const int K = trace.num_communities;
  out << "iteration,log_post";
  for (int k = 1; k <= K; ++k) {
    for (int l = k + 1; l <= K; ++l) out << ",gamma_" << k << '_' << l;
  }
  for (int k = 1; k <= K; ++k) out << ",pi_" << k;
  out << '\n';
  for (std::size_t t = 0; t < trace.size(); ++t) {
    out << trace.iterations[t] << ',' << format_double(trace.log_post[t]);
    for (double g : trace.gamma_samples[t]) out << ',' << format_double(g);
    for (double p : trace.pi_samples[t]) out << ',' << format_double(p);
    out << '\n';
  }
}

void write_sigma_csv(std::ostream& out, const SampleTrace& trace) {
  out << "iteration";
  for (int i = 0; i < trace.num_nodes; ++i) out << ",node_" << i;
  out << '\n';
  for (std::size_t t = 0; t < trace.size(); ++t) {
    out << trace.iterations[t];
    for (int v : trace.sigma_samples[t].values()) out << ',' << v;
    out << '\n';
  }
}

void write_eta_csv(std::ostream& out, const SampleTrace& trace) {
  out << "node,mean,sd\n";
  if (trace.empty()) return;
  const Eigen::VectorXd mean = trace.eta_mean();
  const Eigen::VectorXd sd = trace.eta_sd();
  for (int i = 0; i < trace.num_nodes; ++i) {
    out << i << ',' << format_double(mean(i)) << ',' << format_double(sd(i)) << '\n';
  }
}

void write_eta_samples_csv(std::ostream& out, const SampleTrace& trace) {
  out << "iteration";
  for (int i = 0; i < trace.num_nodes; ++i) out << ",node_" << i;
  out << '\n';
  for (std::size_t t = 0; t < trace.eta_samples.size(); ++t) {
    out << trace.iterations[t];
    for (double e : trace.eta_samples[t]) out << ',' << format_double(e);
    out << '\n';
  }
}

void write_marginal_counts_csv(std::ostream& out, const SampleTrace& trace) {
  out << "node";
  for (int k = 1; k <= trace.num_communities; ++k) out << ",count_" << k;
  out << '\n';
  for (int i = 0; i < trace.num_nodes; ++i) {
    out << i;
    for (int k = 1; k <= trace.num_communities; ++k) out << ',' << trace.count(i, k);
    out << '\n';
  }
}

void write_nodes_csv(std::ostream& out, const Graph& graph) {
  out << "index,token,degree\n";
  for (int i = 0; i < graph.num_nodes(); ++i) {
    out << i << ',' << csv_field(graph.token(i)) << ',' << graph.degree(i) << '\n';
  }
}

void write_edges_csv(std::ostream& out, const Graph& graph) {
  out << "u,v\n";
  for (auto [u, v] : graph.edges()) out << u << ',' << v << '\n';
}

void write_labels_csv(std::ostream& out, const LabelVector& sigma) {
  out << "node,label\n";
  for (int i = 0; i < sigma.size(); ++i) out << i << ',' << sigma[i] << '\n';
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return fnv1a_hex(std::string(std::istreambuf_iterator<char>(in), {}));
}

fs::path chain_file(const fs::path& dir, const std::string& stem, int chain) {
  return dir / (stem + "_chain" + std::to_string(chain) + ".csv");
}

FitDirectory load_fit_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("trace directory not found: " + dir.string());
  nlohmann::json meta;
  {
    std::ifstream in = open_input(dir / "metadata.json");
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed metadata.json: ") + e.what());
    }
  }
  FitDirectory out;
  try {
    out.num_communities = meta.at("hyperparams").at("k").get<int>();
    out.num_chains = meta.at("run").at("chains").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metadata.json lacks fields: ") + e.what());
  }
  const int K = out.num_communities;

  std::vector<std::string> tokens;
  for (const auto& row : read_csv(dir / "nodes.csv")) {
    if (row.size() != 3) throw DataError("malformed nodes.csv");
    tokens.push_back(row[1]);
  }
  const int n = static_cast<int>(tokens.size());
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& row : read_csv(dir / "edges.csv")) {
    if (row.size() != 2) throw DataError("malformed edges.csv");
    edges.emplace_back(parse_number<int>(row[0], "edges.csv"), parse_number<int>(row[1], "edges.csv"));
  }
  out.graph = Graph(n, edges, tokens);

  const int p = num_block_pairs(K);
  out.merged = SampleTrace(n, K);
  for (int c = 0; c < out.num_chains; ++c) {
    SampleTrace t(n, K);
    const fs::path tf = chain_file(dir, "trace", c);
    const fs::path sf = chain_file(dir, "sigma", c);
    const fs::path ef = chain_file(dir, "eta", c);
    const auto trows = read_csv(tf);
    const auto srows = read_csv(sf);
    if (trows.size() != srows.size()) throw DataError("trace and sigma files differ in length for chain " + std::to_string(c));
    for (std::size_t r = 0; r < trows.size(); ++r) {
      const auto& tr = trows[r];
      const auto& sr = srows[r];
      if (static_cast<int>(tr.size()) != 2 + p + K) throw DataError("malformed row in " + tf.string());
      if (static_cast<int>(sr.size()) != 1 + n) throw DataError("malformed row in " + sf.string());
      std::vector<int> labels(n);
      for (int i = 0; i < n; ++i) labels[i] = parse_number<int>(sr[i + 1], sf);
      Eigen::VectorXd gamma(p), pi(K);
      for (int k = 0; k < p; ++k) gamma(k) = parse_number<double>(tr[2 + k], tf);
      for (int k = 0; k < K; ++k) pi(k) = parse_number<double>(tr[2 + p + k], tf);
      LabelVector sigma;
      try {
        sigma = LabelVector(std::move(labels), K);
      } catch (const UsageError& e) {
        throw DataError(sf.string() + ": " + e.what());
      }
      t.append(parse_number<std::int64_t>(tr[0], tf), c, parse_number<double>(tr[1], tf), sigma, gamma,
               Eigen::VectorXd::Zero(n), pi, false);
    }
    // Reconstruct the eta running sums from the per-chain mean and sd.
    const auto erows = read_csv(ef);
    if (static_cast<int>(erows.size()) != n) throw DataError("malformed " + ef.string());
    const double T = static_cast<double>(t.size());
    for (int i = 0; i < n; ++i) {
      if (erows[i].size() != 3) throw DataError("malformed " + ef.string());
      const double mean = parse_number<double>(erows[i][1], ef);
      const double sd = parse_number<double>(erows[i][2], ef);
      t.eta_sum(i) = mean * T;
      t.eta_sum_sq(i) = T > 1 ? sd * sd * (T - 1.0) + T * mean * mean : T * mean * mean;
    }
    t.chain.assign(t.size(), c);
    out.merged.merge(t);
    out.chains.push_back(std::move(t));
  }
  if (out.merged.empty()) throw DataError("empty trace in " + dir.string());

  if (fs::exists(dir / "mode.csv") && meta.contains("mode")) {
    std::vector<int> labels;
    for (const auto& row : read_csv(dir / "mode.csv")) {
      if (row.size() != 2) throw DataError("malformed mode.csv");
      labels.push_back(parse_number<int>(row[1], "mode.csv"));
    }
    if (static_cast<int>(labels.size()) == n) {
      out.mode.emplace(LabelVector(std::move(labels), K), meta["mode"].at("log_post").get<double>());
    }
  }
  return out;
}

}  // namespace pgsbm
