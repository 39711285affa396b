#include "covertime/chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "covertime/errors.hpp"

namespace covertime {

namespace {

constexpr double kRowSumTol = 1e-9;
constexpr double kStationaryTol = 1e-9;
constexpr double kDistSumTol = 1e-12;

std::uint64_t fnv1a(std::uint64_t h, const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t chain_digest(int n, const std::vector<Row>& rows) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, &n, sizeof n);
    for (const auto& row : rows)
        for (const auto& [t, p] : row) {
            h = fnv1a(h, &t, sizeof t);
            h = fnv1a(h, &p, sizeof p);
        }
    return h;
}

} // namespace

MarkovChain::MarkovChain(int n, std::vector<Row> rows,
                         std::optional<std::vector<double>> stationary,
                         std::optional<bool> reversible)
    : n_(n), rows_(std::move(rows)), stationary_(std::move(stationary)),
      reversible_(reversible) {
    if (n_ <= 0) throw PreconditionError("chain: need at least one state");
    if (static_cast<int>(rows_.size()) != n_)
        throw PreconditionError("chain: row count mismatch");
    for (int v = 0; v < n_; ++v) {
        auto& row = rows_[v];
        std::sort(row.begin(), row.end());
        double sum = 0;
        int prev = -1;
        for (auto& [t, p] : row) {
            if (t < 0 || t >= n_) throw PreconditionError("chain: target out of range");
            if (t == prev) throw PreconditionError("chain: duplicate row entry");
            prev = t;
            if (p < 0.0 || p > 1.0 + kRowSumTol)
                throw PreconditionError("chain: probability outside [0,1]");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTol)
            throw PreconditionError("chain: row " + std::to_string(v) +
                                    " sums to " + std::to_string(sum));
    }
    if (stationary_) {
        if (static_cast<int>(stationary_->size()) != n_)
            throw PreconditionError("chain: stationary length mismatch");
        double total = 0;
        for (double x : *stationary_) {
            if (x < 0) throw PreconditionError("chain: negative stationary entry");
            total += x;
        }
        if (std::abs(total - 1.0) > kDistSumTol)
            throw PreconditionError("chain: stationary does not sum to 1");
        std::vector<double> flow(n_, 0.0);
        for (int v = 0; v < n_; ++v)
            for (const auto& [t, p] : rows_[v]) flow[t] += (*stationary_)[v] * p;
        for (int v = 0; v < n_; ++v)
            if (std::abs(flow[v] - (*stationary_)[v]) > kStationaryTol)
                throw PreconditionError("chain: stationary is not a fixed point");
    }
    digest_ = chain_digest(n_, rows_);
}

double MarkovChain::prob(int u, int v) const {
    const auto& row = rows_[u];
    auto it = std::lower_bound(row.begin(), row.end(), std::make_pair(v, -1.0));
    if (it != row.end() && it->first == v) return it->second;
    return 0.0;
}

StartRule StartRule::at(int v) {
    StartRule s;
    s.fixed_ = true;
    s.vertex_ = v;
    return s;
}

StartRule StartRule::from_distribution(std::vector<double> p) {
    double sum = 0;
    for (double x : p) {
        if (x < 0 || x > 1) throw PreconditionError("start rule: entry outside [0,1]");
        sum += x;
    }
    if (std::abs(sum - 1.0) > kDistSumTol)
        throw PreconditionError("start rule: distribution does not sum to 1");
    StartRule s;
    s.fixed_ = false;
    s.dist_ = std::move(p);
    return s;
}

int StartRule::vertex() const {
    if (!fixed_) throw PreconditionError("start rule: not a fixed vertex");
    return vertex_;
}

const std::vector<double>& StartRule::distribution() const {
    if (fixed_) throw PreconditionError("start rule: not a distribution");
    return dist_;
}

std::vector<double> StartRule::as_vector(int n) const {
    std::vector<double> v(n, 0.0);
    if (fixed_) {
        if (vertex_ < 0 || vertex_ >= n)
            throw PreconditionError("start rule: vertex out of range");
        v[vertex_] = 1.0;
    } else {
        if (static_cast<int>(dist_.size()) != n)
            throw PreconditionError("start rule: distribution length mismatch");
        v = dist_;
    }
    return v;
}

WalkTrace make_trace(const MarkovChain& m, std::vector<int> states,
                     std::uint64_t seed) {
    if (states.empty()) throw PreconditionError("trace: empty state sequence");
    for (int s : states)
        if (s < 0 || s >= m.n()) throw PreconditionError("trace: state out of range");
    for (size_t i = 0; i + 1 < states.size(); ++i)
        if (m.prob(states[i], states[i + 1]) <= 0.0)
            throw PreconditionError("trace: transition with zero probability");
    return WalkTrace{std::move(states), seed, m.digest()};
}

MarkovChain rw_from_graph(const Graph& g) {
    const int n = g.n();
    for (int v = 0; v < n; ++v)
        if (g.degree(v) == 0)
            throw PreconditionError("rw_from_graph: isolated vertex " +
                                    std::to_string(v));
    std::vector<Row> rows(n);
    for (int v = 0; v < n; ++v) {
        const double p = 1.0 / g.degree(v);
        for (int w : g.neighbors(v)) rows[v].emplace_back(w, p);
    }
    std::vector<double> pi(n);
    const double denom = 2.0 * g.edge_count();
    for (int v = 0; v < n; ++v) pi[v] = g.degree(v) / denom;
    return MarkovChain(n, std::move(rows), std::move(pi), true);
}

bool is_irreducible(const MarkovChain& m) {
    const int n = m.n();
    // Forward and backward reachability from state 0.
    std::vector<std::vector<int>> radj(n);
    for (int v = 0; v < n; ++v)
        for (const auto& [t, p] : m.row(v))
            if (p > 0) radj[t].push_back(v);
    auto reach = [&](bool backward) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            if (backward) {
                for (int w : radj[v])
                    if (!seen[w]) seen[w] = 1, stack.push_back(w);
            } else {
                for (const auto& [w, p] : m.row(v))
                    if (p > 0 && !seen[w]) seen[w] = 1, stack.push_back(w);
            }
        }
        return seen;
    };
    auto fwd = reach(false), bwd = reach(true);
    for (int v = 0; v < n; ++v)
        if (!fwd[v] || !bwd[v]) return false;
    return true;
}

std::vector<double> stationary(const MarkovChain& m, double tol) {
    if (!is_irreducible(m))
        throw PreconditionError("stationary: chain is not irreducible");
    const int n = m.n();
    if (n <= 2000) {
        // Solve (P^T - I) pi = 0 with the last equation replaced by sum = 1.
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (int v = 0; v < n; ++v)
            for (const auto& [t, p] : m.row(v)) a(t, v) += p;
        a -= Eigen::MatrixXd::Identity(n, n);
        a.row(n - 1).setOnes();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        b(n - 1) = 1.0;
        Eigen::VectorXd pi = a.partialPivLu().solve(b);
        std::vector<double> out(n);
        for (int v = 0; v < n; ++v) out[v] = pi(v);
        // Residual guard against an ill-conditioned solve.
        std::vector<double> flow(n, 0.0);
        for (int v = 0; v < n; ++v)
            for (const auto& [t, p] : m.row(v)) flow[t] += out[v] * p;
        for (int v = 0; v < n; ++v)
            if (std::abs(flow[v] - out[v]) > std::max(tol, 1e-9))
                throw InternalError("stationary: solve residual too large");
        return out;
    }
    // Power iteration at scale.
    std::vector<double> pi(n, 1.0 / n), next(n);
    for (int iter = 0; iter < 200000; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int v = 0; v < n; ++v)
            for (const auto& [t, p] : m.row(v)) next[t] += pi[v] * p;
        double diff = 0, sum = 0;
        for (int v = 0; v < n; ++v) sum += next[v];
        for (int v = 0; v < n; ++v) {
            next[v] /= sum;
            diff = std::max(diff, std::abs(next[v] - pi[v]));
        }
        pi.swap(next);
        if (diff < tol) return pi;
    }
    throw PreconditionError("stationary: power iteration did not converge");
}

bool is_reversible(const MarkovChain& m, double tol) {
    std::vector<double> pi;
    if (m.stationary_hint())
        pi = *m.stationary_hint();
    else
        pi = stationary(m);
    for (int u = 0; u < m.n(); ++u)
        for (const auto& [v, p] : m.row(u))
            if (std::abs(pi[u] * p - pi[v] * m.prob(v, u)) > tol) return false;
    return true;
}

PathReversibilityCheck check_path_reversibility(const MarkovChain& m,
                                                const std::vector<int>& path,
                                                double tol) {
    if (path.empty())
        throw PreconditionError("path reversibility: empty path");
    std::vector<double> pi =
        m.stationary_hint() ? *m.stationary_hint() : stationary(m);
    PathReversibilityCheck out;
    out.lhs = pi[path.front()];
    out.rhs = pi[path.back()];
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        out.lhs *= m.prob(path[i], path[i + 1]);
        out.rhs *= m.prob(path[path.size() - 1 - i], path[path.size() - 2 - i]);
    }
    const double scale = std::max({out.lhs, out.rhs, 1e-300});
    out.pass = std::abs(out.lhs - out.rhs) <= tol * scale;
    return out;
}

MarkovChain load_chain(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileFormatError("cannot open chain file: " + path);
    std::string line;
    long long n = -1;
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        if (n < 0) {
            if (!(ls >> n) || n <= 0) throw FileFormatError("chain file: bad header");
            rows.resize(n);
            continue;
        }
        long long u, v;
        double p;
        if (!(ls >> u >> v >> p)) throw FileFormatError("chain file: bad entry line");
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw FileFormatError("chain file: state out of range");
        rows[u].emplace_back(static_cast<int>(v), p);
    }
    if (n < 0) throw FileFormatError("chain file: missing header");
    try {
        return MarkovChain(static_cast<int>(n), std::move(rows));
    } catch (const PreconditionError& e) {
        throw FileFormatError(std::string("chain file: ") + e.what());
    }
}

void save_chain(const MarkovChain& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FileFormatError("cannot write chain file: " + path);
    out.precision(17);
    out << m.n() << '\n';
    for (int v = 0; v < m.n(); ++v)
        for (const auto& [t, p] : m.row(v)) out << v << ' ' << t << ' ' << p << '\n';
}

} // namespace covertime
