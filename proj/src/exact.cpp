#include "covertime/exact.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "covertime/errors.hpp"

namespace covertime {

namespace {

constexpr double kAliveEps = 1e-16;
constexpr int kDenseBudget = 2000;

std::vector<char> mask_of(int n, const std::vector<int>& states,
                          const char* what) {
    std::vector<char> mask(n, 0);
    for (int v : states) {
        if (v < 0 || v >= n)
            throw PreconditionError(std::string(what) + ": state out of range");
        mask[v] = 1;
    }
    return mask;
}

std::vector<double> require_stationary(const MarkovChain& m) {
    if (m.stationary_hint()) return *m.stationary_hint();
    return stationary(m);
}

void require_reversible(const MarkovChain& m, const char* what) {
    if (m.reversible_hint().value_or(false)) return;
    if (!is_reversible(m))
        throw PreconditionError(std::string(what) + ": chain is not reversible");
}

// Forward sweep with absorption: mass starting from `start` (time 0, not yet
// absorbed) walks until the horizon; mass landing on an absorbing state is
// recorded and removed. Stops early once the alive mass is below kAliveEps.
struct AbsorbSweep {
    std::vector<double> step_absorbed; // total mass absorbed at step t+1
    std::vector<double> absorbed_at;   // cumulative, per absorbing state
    double alive = 0;
};

AbsorbSweep absorb_sweep(const MarkovChain& m, const std::vector<double>& start,
                         const std::vector<char>& absorbing, long long horizon) {
    const int n = m.n();
    AbsorbSweep out;
    out.absorbed_at.assign(n, 0.0);
    std::vector<double> cur = start, next(n);
    double alive = 0;
    for (double x : cur) alive += x;
    for (long long step = 0; step < horizon && alive > kAliveEps; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int v = 0; v < n; ++v) {
            if (cur[v] == 0.0) continue;
            for (const auto& [t, p] : m.row(v)) next[t] += cur[v] * p;
        }
        double stepmass = 0;
        alive = 0;
        for (int v = 0; v < n; ++v) {
            if (absorbing[v] && next[v] > 0) {
                stepmass += next[v];
                out.absorbed_at[v] += next[v];
                next[v] = 0;
            } else {
                alive += next[v];
            }
        }
        out.step_absorbed.push_back(stepmass);
        cur.swap(next);
    }
    out.alive = std::max(alive, 0.0);
    return out;
}

std::vector<double> indicator(int n, int v) {
    std::vector<double> p(n, 0.0);
    p[v] = 1.0;
    return p;
}

} // namespace

std::vector<double> step_distribution(const MarkovChain& m,
                                      const std::vector<double>& p) {
    std::vector<double> next(m.n(), 0.0);
    for (int v = 0; v < m.n(); ++v) {
        if (p[v] == 0.0) continue;
        for (const auto& [t, q] : m.row(v)) next[t] += p[v] * q;
    }
    return next;
}

std::vector<double> transition_power(const MarkovChain& m, int v, long long t) {
    if (v < 0 || v >= m.n())
        throw PreconditionError("transition power: state out of range");
    if (t < 0) throw PreconditionError("transition power: negative exponent");
    std::vector<double> p = indicator(m.n(), v);
    for (long long i = 0; i < t; ++i) p = step_distribution(m, p);
    return p;
}

MarkovChain induced_chain(const MarkovChain& m, const std::vector<int>& W) {
    const int n = m.n();
    if (W.empty()) throw PreconditionError("induced chain: empty target set");
    if (n > kDenseBudget)
        throw BudgetError("induced chain: dense solve limited to n <= 2000");
    std::vector<int> ws(W);
    std::sort(ws.begin(), ws.end());
    ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
    auto wmask = mask_of(n, ws, "induced chain");

    // W must be reachable from every state; otherwise mass escapes.
    {
        std::vector<std::vector<int>> radj(n);
        for (int v = 0; v < n; ++v)
            for (const auto& [t, p] : m.row(v))
                if (p > 0) radj[t].push_back(v);
        std::vector<char> seen(n, 0);
        std::vector<int> stack(ws.begin(), ws.end());
        for (int v : ws) seen[v] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int u : radj[v])
                if (!seen[u]) seen[u] = 1, stack.push_back(u);
        }
        for (int v = 0; v < n; ++v)
            if (!seen[v])
                throw PreconditionError(
                    "induced chain: target set unreachable from state " +
                    std::to_string(v));
    }

    std::vector<int> free_states, free_index(n, -1);
    for (int v = 0; v < n; ++v)
        if (!wmask[v]) {
            free_index[v] = static_cast<int>(free_states.size());
            free_states.push_back(v);
        }
    const int f = static_cast<int>(free_states.size());
    const int k = static_cast<int>(ws.size());

    Eigen::MatrixXd h(std::max(f, 1), k); // h(x, j) = Pr_x(first W-hit = ws[j])
    if (f > 0) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(f, f);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(f, k);
        for (int i = 0; i < f; ++i)
            for (const auto& [t, p] : m.row(free_states[i])) {
                if (free_index[t] >= 0)
                    a(i, free_index[t]) -= p;
                else {
                    int j = static_cast<int>(
                        std::lower_bound(ws.begin(), ws.end(), t) - ws.begin());
                    b(i, j) += p;
                }
            }
        h = a.partialPivLu().solve(b);
    }

    std::vector<Row> rows(k);
    for (int i = 0; i < k; ++i) {
        const int u = ws[i];
        std::vector<double> dest(k, 0.0);
        for (const auto& [t, p] : m.row(u)) {
            if (free_index[t] < 0) {
                int j = static_cast<int>(
                    std::lower_bound(ws.begin(), ws.end(), t) - ws.begin());
                dest[j] += p;
            } else {
                for (int j = 0; j < k; ++j) dest[j] += p * h(free_index[t], j);
            }
        }
        double sum = 0;
        for (int j = 0; j < k; ++j) sum += dest[j];
        if (std::abs(sum - 1.0) > 1e-9)
            throw InternalError("induced chain: row escaped mass");
        for (int j = 0; j < k; ++j)
            if (dest[j] != 0.0)
                rows[i].emplace_back(j, std::min(dest[j], 1.0));
    }
    return MarkovChain(k, std::move(rows));
}

double cover_probability(const MarkovChain& m, const StartRule& start,
                         const std::vector<int>& W, long long horizon,
                         bool include_start) {
    const int n = m.n();
    if (horizon < 0) throw PreconditionError("cover: negative horizon");
    std::vector<int> bit_of(n, -1);
    int w = 0;
    for (int v : W) {
        if (v < 0 || v >= n) throw PreconditionError("cover: target out of range");
        if (bit_of[v] < 0) bit_of[v] = w++;
    }
    if (w > 24)
        throw BudgetError("cover: exact DP limited to |W| <= 24; use the "
                          "Monte Carlo estimator");
    if ((static_cast<long long>(n) << w) > (1LL << 24))
        throw BudgetError("cover: state budget n * 2^|W| exceeded; use the "
                          "Monte Carlo estimator");
    const int full = (1 << w) - 1;
    const size_t size = static_cast<size_t>(n) << w;
    std::vector<double> cur(size, 0.0), next(size);
    auto sv = start.as_vector(n);
    for (int v = 0; v < n; ++v)
        if (sv[v] > 0) {
            int mask0 = (include_start && bit_of[v] >= 0) ? (1 << bit_of[v]) : 0;
            cur[(static_cast<size_t>(v) << w) | mask0] += sv[v];
        }
    for (long long step = 0; step < horizon; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int v = 0; v < n; ++v) {
            const size_t base = static_cast<size_t>(v) << w;
            for (int mask = 0; mask <= full; ++mask) {
                const double p = cur[base | mask];
                if (p == 0.0) continue;
                for (const auto& [t, q] : m.row(v)) {
                    int nm = mask;
                    if (bit_of[t] >= 0) nm |= 1 << bit_of[t];
                    next[(static_cast<size_t>(t) << w) | nm] += p * q;
                }
            }
        }
        cur.swap(next);
    }
    double out = 0;
    for (int v = 0; v < n; ++v) out += cur[(static_cast<size_t>(v) << w) | full];
    return std::min(out, 1.0);
}

HittingReport hitting_stats(const MarkovChain& m, int v,
                            const std::vector<int>& targets, long long R) {
    const int n = m.n();
    if (R < 1) throw PreconditionError("hitting stats: horizon must be >= 1");
    if (v < 0 || v >= n) throw PreconditionError("hitting stats: bad source");
    auto bmask = mask_of(n, targets, "hitting stats");
    HittingReport rep;
    rep.source = v;
    rep.targets = targets;
    rep.horizon = R;

    auto plus = absorb_sweep(m, indicator(n, v), bmask, R);
    rep.tplus_atoms.assign(1, 0.0); // T^+ has no atom at 0
    rep.tplus_atoms.insert(rep.tplus_atoms.end(), plus.step_absorbed.begin(),
                           plus.step_absorbed.end());
    rep.tplus_tail = plus.alive;

    if (bmask[v]) {
        rep.t_atoms.assign(1, 1.0);
        rep.t_tail = 0.0;
    } else {
        rep.t_atoms = rep.tplus_atoms;
        rep.t_tail = rep.tplus_tail;
    }

    for (int w : targets) {
        if (w == v) {
            rep.before_return.emplace_back(w, 1.0); // T_v = 0 from v
            continue;
        }
        rep.before_return.emplace_back(w, prob_hit_before_return(m, v, w, R));
    }
    return rep;
}

double prob_hit_within(const MarkovChain& m, int v, int w, long long R) {
    std::vector<char> mask(m.n(), 0);
    mask[w] = 1;
    auto sweep = absorb_sweep(m, indicator(m.n(), v), mask, R);
    return sweep.absorbed_at[w];
}

double prob_hit_before_return(const MarkovChain& m, int v, int w, long long R) {
    if (v == w) throw PreconditionError("hit before return: v == w");
    std::vector<char> mask(m.n(), 0);
    mask[v] = 1;
    mask[w] = 1;
    auto sweep = absorb_sweep(m, indicator(m.n(), v), mask, R);
    return sweep.absorbed_at[w];
}

double prob_avoid_set(const MarkovChain& m, int v, const std::vector<int>& A,
                      long long R) {
    auto mask = mask_of(m.n(), A, "avoid set");
    auto sweep = absorb_sweep(m, indicator(m.n(), v), mask, R);
    return sweep.alive;
}

std::vector<double> return_time_cdf(const MarkovChain& m, int v,
                                    long long max_horizon) {
    std::vector<char> mask(m.n(), 0);
    mask[v] = 1;
    auto sweep = absorb_sweep(m, indicator(m.n(), v), mask, max_horizon);
    std::vector<double> cdf(sweep.step_absorbed.size() + 1, 0.0);
    for (size_t t = 0; t < sweep.step_absorbed.size(); ++t)
        cdf[t + 1] = cdf[t] + sweep.step_absorbed[t];
    return cdf;
}

double cdf_at(const std::vector<double>& cdf, long long t) {
    if (t < 0) return 0.0;
    if (t >= static_cast<long long>(cdf.size()))
        return cdf.empty() ? 0.0 : cdf.back();
    return cdf[t];
}

BallSets ball_sets(const MarkovChain& m, int v, long long R, double delta) {
    if (delta <= 0 || delta >= 2)
        throw PreconditionError("ball sets: delta outside (0, 2)");
    if (R < 1) throw PreconditionError("ball sets: horizon must be >= 1");
    BallSets out;
    out.center = v;
    out.radius = R;
    out.delta = delta;
    const double threshold = delta / 2.0;
    for (int w = 0; w < m.n(); ++w) {
        if (w == v) continue;
        if (prob_hit_within(m, v, w, R) > threshold) out.b.push_back(w);
        if (prob_hit_before_return(m, v, w, R) > threshold)
            out.bprime.push_back(w);
    }
    return out;
}

std::vector<int> classify_recurrent(const MarkovChain& m, double delta,
                                    long long R) {
    if (delta <= 0 || delta >= 1)
        throw PreconditionError("recurrence: delta outside (0, 1)");
    if (R < 1) throw PreconditionError("recurrence: horizon must be >= 1");
    std::vector<int> out;
    for (int v = 0; v < m.n(); ++v) {
        auto cdf = return_time_cdf(m, v, R);
        if (cdf_at(cdf, R) > 1.0 - delta) out.push_back(v);
    }
    return out;
}

ReturnInequalityReport check_return_inequalities(const MarkovChain& m, int v,
                                                 int w, int t, int s) {
    if (t < 0 || s < 0)
        throw PreconditionError("return inequalities: negative exponent");
    require_reversible(m, "return inequalities");
    auto pi = require_stationary(m);
    const int top = 2 * std::max(t, s) + 2;

    std::vector<double> returns_v, returns_w, from_v;
    {
        std::vector<double> p = indicator(m.n(), v);
        for (int i = 0; i <= top; ++i) {
            if (i == t + s) from_v = p;
            returns_v.push_back(p[v]);
            if (i < top) p = step_distribution(m, p);
        }
        p = indicator(m.n(), w);
        for (int i = 0; i <= top; ++i) {
            returns_w.push_back(p[w]);
            if (i < top) p = step_distribution(m, p);
        }
    }

    ReturnInequalityReport rep;
    rep.lhs_af = from_v[w] / pi[w];
    rep.rhs_af = std::sqrt((returns_v[2 * t] / pi[v]) * (returns_w[2 * s] / pi[w]));
    rep.pass_af = rep.lhs_af <= rep.rhs_af + 1e-9;
    rep.pass_mono = true;
    for (int i = 0; i + 2 <= top; i += 2) {
        if (returns_v[i + 2] > returns_v[i] + 1e-9) rep.pass_mono = false;
        if (returns_w[i + 2] > returns_w[i] + 1e-9) rep.pass_mono = false;
    }
    return rep;
}

SpectralReport spectral_gap(const MarkovChain& m) {
    const int n = m.n();
    if (n > kDenseBudget)
        throw BudgetError("spectrum: dense solve limited to n <= 2000");
    require_reversible(m, "spectrum");
    auto pi = require_stationary(m);
    Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(n, n);
    for (int u = 0; u < n; ++u)
        for (const auto& [t, p] : m.row(u))
            sym(u, t) = p * std::sqrt(pi[u] / pi[t]);
    sym = 0.5 * (sym + sym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success)
        throw InternalError("spectrum: eigensolver failed");
    SpectralReport rep;
    rep.eigenvalues.assign(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + n);
    std::sort(rep.eigenvalues.rbegin(), rep.eigenvalues.rend());
    if (std::abs(rep.eigenvalues.front() - 1.0) > 1e-9 ||
        rep.eigenvalues.back() < -1.0 - 1e-9)
        throw InternalError("spectrum: eigenvalues outside [-1, 1]");
    rep.gap_quantity = 0.0;
    if (n >= 2)
        rep.gap_quantity =
            std::max(std::abs(rep.eigenvalues[1]), std::abs(rep.eigenvalues[n - 1]));
    return rep;
}

bool is_eps_expander(const SpectralReport& report, double eps) {
    return report.gap_quantity < 1.0 - eps;
}

ExpanderBoundsReport expander_bounds(const MarkovChain& m,
                                     const std::vector<int>& S, long long t,
                                     double eps) {
    if (t < 0) throw PreconditionError("expander bounds: negative horizon");
    auto report = spectral_gap(m);
    if (!is_eps_expander(report, eps))
        throw PreconditionError("expander bounds: chain is not an eps-expander");
    const int n = m.n();
    auto smask = mask_of(n, S, "expander bounds");
    auto pi = require_stationary(m);
    double pi_s = 0;
    for (int v = 0; v < n; ++v)
        if (smask[v]) pi_s += pi[v];

    ExpanderBoundsReport out;
    out.t = t;
    out.eps = eps;
    out.pi_s = pi_s;
    out.pass_tail = true;
    const double decay = std::pow(1.0 - eps, static_cast<double>(t));
    for (int v = 0; v < n; ++v) {
        auto p = transition_power(m, v, t);
        double mass = 0;
        for (int x = 0; x < n; ++x)
            if (smask[x]) mass += p[x];
        const double dev = std::abs(mass - pi_s);
        const double bound = std::sqrt(pi_s / pi[v]) * decay;
        if (dev > bound + 1e-12) out.pass_tail = false;
        if (dev > out.max_deviation) {
            out.max_deviation = dev;
            out.max_deviation_state = v;
            out.tail_bound_at_max = bound;
        }
    }

    double worst_tail = 0;
    for (int v = 0; v < n; ++v) {
        if (smask[v]) continue;
        auto sweep = absorb_sweep(m, indicator(n, v), smask, t);
        worst_tail = std::max(worst_tail, sweep.alive);
    }
    out.exact_hitting_tail = worst_tail;
    if (t == 0 || n < 2)
        out.hitting_bound = 1.0;
    else
        out.hitting_bound = std::pow(1.0 - pi_s / 2.0,
                                     eps * static_cast<double>(t) /
                                         (2.0 * std::log(static_cast<double>(n))));
    out.pass_hitting = out.exact_hitting_tail <= out.hitting_bound + 1e-12;
    return out;
}

HeavyWitnessReport heavy_witness(const Graph& g, int big_degree,
                                 int small_degree) {
    if (small_degree < 1 || small_degree > big_degree)
        throw PreconditionError("heavy witness: need 1 <= small <= big");
    constexpr double kGamma = 0.1;
    HeavyWitnessReport rep;
    for (int v = 0; v < g.n(); ++v) {
        if (g.degree(v) > big_degree) rep.b.push_back(v);
        if (g.degree(v) <= small_degree) rep.s.push_back(v);
    }
    rep.horizon = static_cast<long long>(
        std::floor(kGamma * big_degree / (4.0 * small_degree)));
    if (rep.horizon == 0)
        throw PreconditionError("heavy witness: degenerate horizon (T = 0)");
    auto m = rw_from_graph(g);
    auto smask = mask_of(g.n(), rep.s, "heavy witness");
    for (int v : rep.b) {
        auto sweep = absorb_sweep(m, indicator(g.n(), v), smask, rep.horizon);
        double hit = 1.0 - sweep.alive;
        rep.hit_probs.emplace_back(v, hit);
        if (hit < 0.5) rep.witness.push_back(v);
    }
    rep.half_guarantee = 2 * rep.witness.size() >= rep.b.size();
    return rep;
}

} // namespace covertime
