#include "covertime/rational.hpp"

#include <algorithm>

#include "covertime/errors.hpp"

namespace covertime {

RationalChain::RationalChain(
    int n, std::vector<std::vector<std::pair<int, Rational>>> rows)
    : n_(n), rows_(std::move(rows)) {
    if (n_ <= 0 || n_ > 12)
        throw BudgetError("rational chain: supported for 1 <= n <= 12");
    if (static_cast<int>(rows_.size()) != n_)
        throw PreconditionError("rational chain: row count mismatch");
    for (auto& row : rows_) {
        std::sort(row.begin(), row.end());
        Rational sum = 0;
        for (auto& [t, p] : row) {
            if (t < 0 || t >= n_)
                throw PreconditionError("rational chain: target out of range");
            if (p < 0 || p > 1)
                throw PreconditionError("rational chain: probability outside [0,1]");
            sum += p;
        }
        if (sum != 1) throw PreconditionError("rational chain: row does not sum to 1");
    }
}

RationalChain RationalChain::rw_from_graph(const Graph& g) {
    std::vector<std::vector<std::pair<int, Rational>>> rows(g.n());
    for (int v = 0; v < g.n(); ++v) {
        if (g.degree(v) == 0)
            throw PreconditionError("rational chain: isolated vertex");
        Rational p(1, g.degree(v));
        for (int w : g.neighbors(v)) rows[v].emplace_back(w, p);
    }
    return RationalChain(g.n(), std::move(rows));
}

std::vector<Rational> RationalChain::rw_stationary(const Graph& g) {
    std::vector<Rational> pi(g.n());
    for (int v = 0; v < g.n(); ++v)
        pi[v] = Rational(g.degree(v), 2LL * g.edge_count());
    return pi;
}

Rational cover_probability_exact(const RationalChain& m, int start,
                                 const std::vector<int>& W, long long horizon,
                                 bool include_start) {
    const int n = m.n();
    if (start < 0 || start >= n)
        throw PreconditionError("cover: start out of range");
    if (horizon < 0) throw PreconditionError("cover: negative horizon");
    std::vector<int> bit_of(n, -1);
    int w = 0;
    for (int v : W) {
        if (v < 0 || v >= n) throw PreconditionError("cover: target out of range");
        if (bit_of[v] < 0) bit_of[v] = w++;
    }
    const int full = (1 << w) - 1;
    const size_t size = static_cast<size_t>(n) << w;
    std::vector<Rational> cur(size), next(size);
    int mask0 = (include_start && bit_of[start] >= 0) ? (1 << bit_of[start]) : 0;
    cur[(static_cast<size_t>(start) << w) | mask0] = 1;
    for (long long step = 0; step < horizon; ++step) {
        std::fill(next.begin(), next.end(), Rational(0));
        for (int v = 0; v < n; ++v)
            for (int mask = 0; mask <= full; ++mask) {
                const Rational& p = cur[(static_cast<size_t>(v) << w) | mask];
                if (p == 0) continue;
                for (const auto& [t, q] : m.row(v)) {
                    int nm = mask;
                    if (bit_of[t] >= 0) nm |= 1 << bit_of[t];
                    next[(static_cast<size_t>(t) << w) | nm] += p * q;
                }
            }
        cur.swap(next);
    }
    Rational out = 0;
    for (int v = 0; v < n; ++v) out += cur[(static_cast<size_t>(v) << w) | full];
    return out;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

} // namespace covertime
