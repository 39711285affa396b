#include "covertime/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "covertime/errors.hpp"

namespace covertime {

Graph::Graph(int n, std::vector<std::pair<int, int>> edges)
    : n_(n), edges_(std::move(edges)), adj_(std::max(n, 0)) {
    if (n < 0) throw PreconditionError("graph: negative vertex count");
    std::set<std::pair<int, int>> seen;
    for (auto& [u, v] : edges_) {
        if (u < 0 || u >= n_ || v < 0 || v >= n_)
            throw PreconditionError("graph: endpoint out of range");
        if (u == v) throw PreconditionError("graph: self-loop not allowed");
        auto key = std::minmax(u, v);
        if (!seen.insert(key).second)
            throw PreconditionError("graph: parallel edge not allowed");
        adj_[u].push_back(v);
        adj_[v].push_back(u);
    }
    for (auto& nb : adj_) std::sort(nb.begin(), nb.end());
}

int Graph::max_degree() const {
    int d = 0;
    for (int v = 0; v < n_; ++v) d = std::max(d, degree(v));
    return d;
}

std::vector<int> Graph::bfs_depths(int root) const {
    if (root < 0 || root >= n_) throw PreconditionError("bfs: root out of range");
    std::vector<int> depth(n_, -1);
    std::deque<int> queue{root};
    depth[root] = 0;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int w : adj_[v])
            if (depth[w] < 0) {
                depth[w] = depth[v] + 1;
                queue.push_back(w);
            }
    }
    return depth;
}

int Graph::distance(int u, int v) const { return bfs_depths(u)[v]; }

bool Graph::connected() const {
    if (n_ == 0) return true;
    auto depth = bfs_depths(0);
    return std::find(depth.begin(), depth.end(), -1) == depth.end();
}

bool Graph::is_tree() const {
    return n_ >= 1 && edge_count() == n_ - 1 && connected();
}

Graph Graph::path(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Graph(n, std::move(e));
}

Graph Graph::cycle(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    if (n >= 3) e.emplace_back(n - 1, 0);
    return Graph(n, std::move(e));
}

Graph Graph::complete(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph(n, std::move(e));
}

Graph Graph::star(int leaves) {
    std::vector<std::pair<int, int>> e;
    for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
    return Graph(leaves + 1, std::move(e));
}

Graph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileFormatError("cannot open graph file: " + path);
    std::string line;
    long long n = -1, m = -1;
    std::vector<std::pair<int, int>> edges;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        if (n < 0) {
            if (!(ls >> n >> m) || n < 0 || m < 0)
                throw FileFormatError("graph file: bad header line");
            continue;
        }
        long long u, v;
        if (!(ls >> u >> v)) throw FileFormatError("graph file: bad edge line");
        edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
    }
    if (n < 0) throw FileFormatError("graph file: missing header");
    if (static_cast<long long>(edges.size()) != m)
        throw FileFormatError("graph file: edge count mismatch");
    try {
        return Graph(static_cast<int>(n), std::move(edges));
    } catch (const PreconditionError& e) {
        throw FileFormatError(std::string("graph file: ") + e.what());
    }
}

void save_graph(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FileFormatError("cannot write graph file: " + path);
    out << g.n() << ' ' << g.edge_count() << '\n';
    for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

} // namespace covertime
