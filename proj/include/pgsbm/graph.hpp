#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pgsbm {

using NodeId = int;

/// Immutable undirected simple graph on nodes 0..n-1.
///
/// Adjacency is kept as sorted neighbor lists; pair queries are binary
/// searches. Original node tokens are retained for output.
class Graph {
 public:
  Graph() = default;

  /// Builds from an edge list; self-loops and duplicate edges are dropped.
  /// Tokens default to the decimal node ids.
  Graph(int n, std::span<const std::pair<NodeId, NodeId>> edges,
        std::vector<std::string> tokens = {});

  int num_nodes() const { return static_cast<int>(adj_.size()); }
  std::size_t num_edges() const { return num_edges_; }
  int degree(NodeId v) const { return static_cast<int>(adj_[v].size()); }
  std::span<const NodeId> neighbors(NodeId v) const { return adj_[v]; }
  bool has_edge(NodeId u, NodeId v) const;

  /// Edges as (u, v) with u < v, lexicographically ordered.
  std::vector<std::pair<NodeId, NodeId>> edges() const;

  const std::string& token(NodeId v) const { return tokens_[v]; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  /// Returns -1 when the token is unknown.
  NodeId find(const std::string& token) const;

  /// Dense 0/1 adjacency rows, row-major n*n. Handy for O(1) lookups in hot
  /// loops on graphs with n in the low thousands.
  std::vector<unsigned char> dense_adjacency() const;

 private:
  std::vector<std::vector<NodeId>> adj_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, NodeId> index_;
  std::size_t num_edges_ = 0;
};

struct LoadReport {
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
  std::size_t isolated_removed = 0;
};

/// Reads "tok tok" lines ('#' starts a comment). Node ids are assigned in
/// order of first appearance. Throws DataError on malformed lines or when
/// the cleaned graph is empty.
Graph load_edge_list(std::istream& in, bool drop_isolated,
                     LoadReport* report = nullptr);
Graph load_edge_list_file(const std::string& path, bool drop_isolated,
                          LoadReport* report = nullptr);

/// Writes one "tok tok" line per edge.
void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace pgsbm
