#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgsbm/graph.hpp"
#include "pgsbm/labels.hpp"
#include "pgsbm/trace.hpp"

namespace pgsbm {

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(const std::string& s);
std::vector<std::string> split_csv_line(const std::string& line);

/// iteration,log_post,gamma_k_l...,pi_k...
void write_trace_csv(std::ostream& out, const SampleTrace& trace);
/// iteration,node_0,...,node_{n-1}
void write_sigma_csv(std::ostream& out, const SampleTrace& trace);
/// node,mean,sd
void write_eta_csv(std::ostream& out, const SampleTrace& trace);
/// iteration,node_0,... with full eta draws (only when kept).
void write_eta_samples_csv(std::ostream& out, const SampleTrace& trace);
/// node,count_1,...,count_K
void write_marginal_counts_csv(std::ostream& out, const SampleTrace& trace);
/// index,token,degree
void write_nodes_csv(std::ostream& out, const Graph& graph);
/// u,v by node index
void write_edges_csv(std::ostream& out, const Graph& graph);
/// node,label
void write_labels_csv(std::ostream& out, const LabelVector& sigma);

/// 64-bit FNV-1a digest, hex encoded.
std::string fnv1a_hex(const std::string& bytes);
std::string file_digest(const std::filesystem::path& path);

/// Everything `estimate` needs from a fit output directory.
struct FitDirectory {
  Graph graph;
  int num_communities = 0;
  int num_chains = 0;
  std::vector<SampleTrace> chains;
  SampleTrace merged;
  std::optional<std::pair<LabelVector, double>> mode;
};

/// Reads metadata.json, nodes.csv, edges.csv and the per-chain files.
/// Throws DataError when files are missing or malformed, or the trace is empty.
FitDirectory load_fit_directory(const std::filesystem::path& dir);

std::filesystem::path chain_file(const std::filesystem::path& dir, const std::string& stem, int chain);

}  // namespace pgsbm
