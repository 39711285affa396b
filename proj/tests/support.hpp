#pragma once

// Shared generators and helpers for the test suites.

#include <algorithm>
#include <vector>

#include "covertime/chain.hpp"
#include "covertime/graph.hpp"
#include "covertime/rng.hpp"

namespace covertime::testing {

// Uniform random spanning-tree-plus-extra-edges graph, always connected.
inline Graph random_connected_graph(int n, double extra_edge_prob,
                                    std::uint64_t seed) {
    SplitStream rng(seed, 0);
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < n; ++v)
        edges.emplace_back((int)rng.next_below(v), v);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) {
            bool tree_edge = false;
            for (auto [a, b] : edges)
                if ((a == u && b == v) || (a == v && b == u)) {
                    tree_edge = true;
                    break;
                }
            if (!tree_edge && rng.next_unit() < extra_edge_prob)
                edges.emplace_back(u, v);
        }
    return Graph(n, edges);
}

// Random labeled tree from a uniform Pruefer-like attachment.
inline Graph random_tree(int n, std::uint64_t seed) {
    SplitStream rng(seed, 0);
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < n; ++v)
        edges.emplace_back((int)rng.next_below(v), v);
    return Graph(n, edges);
}

// Reversible chain from random symmetric positive weights on a connected
// graph (occasionally with self-loops).
inline MarkovChain random_reversible_chain(int n, std::uint64_t seed,
                                           bool self_loops = false) {
    auto g = random_connected_graph(n, 0.3, seed);
    SplitStream rng(seed, 1);
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (auto [u, v] : g.edges()) {
        double x = 0.2 + rng.next_unit();
        w[u][v] = x;
        w[v][u] = x;
    }
    if (self_loops)
        for (int v = 0; v < n; ++v)
            if (rng.next_unit() < 0.4) w[v][v] = 0.2 + rng.next_unit();
    std::vector<Row> rows(n);
    for (int u = 0; u < n; ++u) {
        double total = 0;
        for (int v = 0; v < n; ++v) total += w[u][v];
        for (int v = 0; v < n; ++v)
            if (w[u][v] > 0) rows[u].emplace_back(v, w[u][v] / total);
    }
    return MarkovChain(n, std::move(rows));
}

// Random irreducible (generally non-reversible) chain: random rows plus a
// small cycle component to guarantee irreducibility.
inline MarkovChain random_irreducible_chain(int n, std::uint64_t seed) {
    SplitStream rng(seed, 2);
    std::vector<Row> rows(n);
    for (int u = 0; u < n; ++u) {
        std::vector<double> mass(n, 0.0);
        mass[(u + 1) % n] = 0.2; // cycle backbone
        for (int v = 0; v < n; ++v)
            if (rng.next_unit() < 0.5) mass[v] += rng.next_unit();
        double total = 0;
        for (double x : mass) total += x;
        for (int v = 0; v < n; ++v)
            if (mass[v] > 0) rows[u].emplace_back(v, mass[v] / total);
    }
    return MarkovChain(n, std::move(rows));
}

// All connected labeled graphs on n vertices (n small).
inline std::vector<Graph> all_connected_graphs(int n) {
    std::vector<std::pair<int, int>> slots;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) slots.emplace_back(u, v);
    std::vector<Graph> out;
    for (unsigned mask = 0; mask < (1u << slots.size()); ++mask) {
        std::vector<std::pair<int, int>> edges;
        for (size_t i = 0; i < slots.size(); ++i)
            if (mask & (1u << i)) edges.push_back(slots[i]);
        Graph g(n, edges);
        bool ok = g.connected();
        for (int v = 0; v < n && ok; ++v)
            if (g.degree(v) == 0) ok = false;
        if (ok && g.connected()) out.push_back(std::move(g));
    }
    return out;
}

} // namespace covertime::testing
