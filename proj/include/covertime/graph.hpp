#pragma once

#include <string>
#include <utility>
#include <vector>

namespace covertime {

/// Simple undirected graph over vertices 0..n-1. No self-loops, no parallel
/// edges; adjacency lists kept sorted. Immutable after construction.
class Graph {
  public:
    Graph(int n, std::vector<std::pair<int, int>> edges);

    int n() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int v) const { return adj_[v]; }
    int degree(int v) const { return static_cast<int>(adj_[v].size()); }
    int max_degree() const;

    bool connected() const;
    bool is_tree() const;

    /// BFS depth from root; -1 for unreachable vertices.
    std::vector<int> bfs_depths(int root) const;
    /// Shortest-path distance, -1 if disconnected.
    int distance(int u, int v) const;

    static Graph path(int n);
    static Graph cycle(int n);
    static Graph complete(int n);
    static Graph star(int leaves);

  private:
    int n_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> adj_;
};

/// Text format: first non-comment line "n m", then m lines "u v" (0-indexed).
/// Lines starting with '#' are ignored.
Graph load_graph(const std::string& path);
void save_graph(const Graph& g, const std::string& path);

} // namespace covertime
