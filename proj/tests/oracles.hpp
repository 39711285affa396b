#pragma once

// Independent oracles used to pin expected values. These deliberately avoid
// the library's DP/solver code paths: cover probabilities come from direct
// walk enumeration, stationary vectors from power iteration, and visit
// statistics from exhaustive path expansion.

#include <functional>
#include <map>
#include <vector>

#include "covertime/chain.hpp"
#include "covertime/rational.hpp"

namespace covertime::testing {

// Pr(cover W by step M') for every M' = 0..max_horizon at once, by depth-
// first enumeration of all positive-probability walks. A branch is pruned as
// soon as it covers W; its whole probability then counts for every later
// horizon.
inline std::vector<Rational> cover_profile_brute(const RationalChain& m,
                                                 int start,
                                                 const std::vector<int>& W,
                                                 int max_horizon,
                                                 bool include_start) {
    std::vector<int> bit_of(m.n(), -1);
    int w = 0;
    for (int v : W)
        if (bit_of[v] < 0) bit_of[v] = w++;
    const int full = (1 << w) - 1;
    std::vector<Rational> first_cover(max_horizon + 1, Rational(0));

    std::function<void(int, int, int, const Rational&)> dfs =
        [&](int v, int mask, int depth, const Rational& prob) {
            if (mask == full) {
                first_cover[depth] += prob;
                return;
            }
            if (depth == max_horizon) return;
            for (const auto& [t, p] : m.row(v)) {
                int nm = mask;
                if (bit_of[t] >= 0) nm |= 1 << bit_of[t];
                dfs(t, nm, depth + 1, prob * p);
            }
        };
    int mask0 = (include_start && bit_of[start] >= 0) ? (1 << bit_of[start]) : 0;
    dfs(start, full == 0 ? full : mask0, 0, Rational(1));

    std::vector<Rational> out(max_horizon + 1);
    Rational acc = 0;
    for (int h = 0; h <= max_horizon; ++h) {
        acc += first_cover[h];
        out[h] = acc;
    }
    return out;
}

// Same enumeration in plain double arithmetic (for chains without a rational
// twin).
inline std::vector<double> cover_profile_brute_double(
    const MarkovChain& m, int start, const std::vector<int>& W,
    int max_horizon, bool include_start) {
    std::vector<int> bit_of(m.n(), -1);
    int w = 0;
    for (int v : W)
        if (bit_of[v] < 0) bit_of[v] = w++;
    const int full = (1 << w) - 1;
    std::vector<double> first_cover(max_horizon + 1, 0.0);
    std::function<void(int, int, int, double)> dfs = [&](int v, int mask,
                                                         int depth,
                                                         double prob) {
        if (mask == full) {
            first_cover[depth] += prob;
            return;
        }
        if (depth == max_horizon) return;
        for (const auto& [t, p] : m.row(v)) {
            int nm = mask;
            if (bit_of[t] >= 0) nm |= 1 << bit_of[t];
            dfs(t, nm, depth + 1, prob * p);
        }
    };
    int mask0 = (include_start && bit_of[start] >= 0) ? (1 << bit_of[start]) : 0;
    dfs(start, full == 0 ? full : mask0, 0, 1.0);
    std::vector<double> out(max_horizon + 1);
    double acc = 0;
    for (int h = 0; h <= max_horizon; ++h) {
        acc += first_cover[h];
        out[h] = acc;
    }
    return out;
}

// Stationary vector by long power iteration (no linear solve involved).
inline std::vector<double> stationary_power_oracle(const MarkovChain& m,
                                                   int iterations = 200000,
                                                   double tol = 1e-14) {
    const int n = m.n();
    std::vector<double> pi(n, 1.0 / n), next(n);
    for (int it = 0; it < iterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int v = 0; v < n; ++v)
            for (const auto& [t, p] : m.row(v)) next[t] += pi[v] * p;
        double diff = 0;
        for (int v = 0; v < n; ++v) diff = std::max(diff, std::abs(next[v] - pi[v]));
        pi.swap(next);
        if (diff < tol) break;
    }
    return pi;
}

// Distribution of |{X_1..X_R} ∩ A| by exhaustive walk expansion.
inline std::map<int, double> visit_count_distribution_oracle(
    const MarkovChain& m, int start, long long R, const std::vector<int>& A) {
    std::vector<char> amask(m.n(), 0);
    for (int v : A) amask[v] = 1;
    std::map<int, double> dist;
    std::function<void(int, std::vector<char>&, int, long long, double)> dfs =
        [&](int v, std::vector<char>& seen, int count, long long depth,
            double prob) {
            if (depth == R) {
                dist[count] += prob;
                return;
            }
            for (const auto& [t, p] : m.row(v)) {
                bool fresh = amask[t] && !seen[t];
                if (fresh) seen[t] = 1;
                dfs(t, seen, count + (fresh ? 1 : 0), depth + 1, prob * p);
                if (fresh) seen[t] = 0;
            }
        };
    std::vector<char> seen(m.n(), 0);
    dfs(start, seen, 0, 0, 1.0);
    return dist;
}

// Expected value of xi_M by exhaustive walk enumeration; xi is evaluated by
// the caller-supplied functional so the oracle stays independent of the
// library's bookkeeping.
inline double expectation_over_walks(
    const MarkovChain& m, int start, int horizon,
    const std::function<double(const std::vector<int>&)>& value) {
    double total = 0;
    std::vector<int> states{start};
    std::function<void(double)> dfs = [&](double prob) {
        if ((int)states.size() == horizon + 1) {
            total += prob * value(states);
            return;
        }
        for (const auto& [t, p] : m.row(states.back())) {
            states.push_back(t);
            dfs(prob * p);
            states.pop_back();
        }
    };
    dfs(1.0);
    return total;
}

} // namespace covertime::testing
