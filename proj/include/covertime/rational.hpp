#pragma once

#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "covertime/graph.hpp"

namespace covertime {

using Rational = boost::multiprecision::cpp_rational;

/// Exact-rational twin of MarkovChain for small instances (n <= 12).
/// Used for bit-exact oracle comparisons against the float engine.
class RationalChain {
  public:
    RationalChain(int n, std::vector<std::vector<std::pair<int, Rational>>> rows);

    /// Uniform random walk on a graph, rows 1/deg exactly.
    static RationalChain rw_from_graph(const Graph& g);

    int n() const { return n_; }
    const std::vector<std::pair<int, Rational>>& row(int v) const {
        return rows_[v];
    }
    /// Closed-form stationary vector for a graph walk: d_v / (2|E|).
    static std::vector<Rational> rw_stationary(const Graph& g);

  private:
    int n_;
    std::vector<std::vector<std::pair<int, Rational>>> rows_;
};

/// Exact cover probability Pr(coverage of W by step `horizon`) via dynamic
/// programming over (state, covered-subset) pairs. With `include_start`, X_0
/// counts toward coverage; otherwise coverage is over X_1..X_horizon.
Rational cover_probability_exact(const RationalChain& m, int start,
                                 const std::vector<int>& W, long long horizon,
                                 bool include_start);

double to_double(const Rational& r);

} // namespace covertime
