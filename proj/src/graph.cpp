#include "pgsbm/graph.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pgsbm/errors.hpp"

namespace pgsbm {

Graph::Graph(int n, std::span<const std::pair<NodeId, NodeId>> edges,
             std::vector<std::string> tokens)
    : adj_(n), tokens_(std::move(tokens)) {
  if (tokens_.empty()) {
    tokens_.reserve(n);
    for (int v = 0; v < n; ++v) tokens_.push_back(std::to_string(v));
  }
  if (static_cast<int>(tokens_.size()) != n) {
    throw UsageError("token count does not match node count");
  }
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw UsageError("edge endpoint out of range");
    }
    if (u == v) continue;
    adj_[u].push_back(v);
    adj_[v].push_back(u);
  }
  for (auto& nb : adj_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    num_edges_ += nb.size();
  }
  num_edges_ /= 2;
  index_.reserve(n);
  for (int v = 0; v < n; ++v) {
    if (!index_.emplace(tokens_[v], v).second) {
      throw UsageError("duplicate node token '" + tokens_[v] + "'");
    }
  }
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  const auto& nb = adj_[u];
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::pair<NodeId, NodeId>> Graph::edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(num_edges_);
  for (int u = 0; u < num_nodes(); ++u) {
    for (NodeId v : adj_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

NodeId Graph::find(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

std::vector<unsigned char> Graph::dense_adjacency() const {
  const std::size_t n = adj_.size();
  std::vector<unsigned char> a(n * n, 0);
  for (std::size_t u = 0; u < n; ++u) {
    for (NodeId v : adj_[u]) a[u * n + v] = 1;
  }
  return a;
}

Graph load_edge_list(std::istream& in, bool drop_isolated, LoadReport* report) {
  LoadReport local;
  std::vector<std::string> tokens;
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::pair<NodeId, NodeId>> raw;

  auto intern = [&](const std::string& tok) {
    auto [it, inserted] = ids.emplace(tok, static_cast<NodeId>(tokens.size()));
    if (inserted) tokens.push_back(tok);
    return it->second;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> fields;
    for (std::string tok; ls >> tok;) fields.push_back(tok);
    if (fields.empty()) continue;
    if (fields.size() != 2) {
      throw DataError("line " + std::to_string(lineno) + ": expected 2 tokens, got " +
                      std::to_string(fields.size()));
    }
    NodeId u = intern(fields[0]);
    NodeId v = intern(fields[1]);
    if (u == v) {
      ++local.self_loops;
      continue;
    }
    raw.emplace_back(std::min(u, v), std::max(u, v));
  }

  std::vector<std::pair<NodeId, NodeId>> sorted = raw;
  std::sort(sorted.begin(), sorted.end());
  local.duplicates = static_cast<std::size_t>(
      sorted.end() - std::unique(sorted.begin(), sorted.end()));

  if (drop_isolated) {
    std::vector<char> touched(tokens.size(), 0);
    for (const auto& [u, v] : raw) touched[u] = touched[v] = 1;
    std::vector<NodeId> remap(tokens.size(), -1);
    std::vector<std::string> kept;
    for (std::size_t v = 0; v < tokens.size(); ++v) {
      if (touched[v]) {
        remap[v] = static_cast<NodeId>(kept.size());
        kept.push_back(tokens[v]);
      }
    }
    local.isolated_removed = tokens.size() - kept.size();
    for (auto& [u, v] : raw) {
      u = remap[u];
      v = remap[v];
    }
    tokens = std::move(kept);
  }

  if (raw.empty() || tokens.empty()) {
    throw DataError("graph is empty after removing self-loops and duplicates");
  }
  if (report) *report = local;
  const int n = static_cast<int>(tokens.size());
  return Graph(n, raw, std::move(tokens));
}

Graph load_edge_list_file(const std::string& path, bool drop_isolated,
                          LoadReport* report) {
  if (path == "-") return load_edge_list(std::cin, drop_isolated, report);
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list '" + path + "'");
  return load_edge_list(in, drop_isolated, report);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  for (const auto& [u, v] : g.edges()) {
    out << g.token(u) << ' ' << g.token(v) << '\n';
  }
}

}  // namespace pgsbm
