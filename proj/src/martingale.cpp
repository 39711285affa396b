#include "covertime/martingale.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "covertime/errors.hpp"
#include "covertime/mc.hpp"
#include "covertime/rng.hpp"

namespace covertime {

namespace {

constexpr double kGamma = 0.1;
constexpr double kMaxK = 500.0;

std::vector<int> sorted_unique(const std::vector<int>& xs, int n,
                               const char* what) {
    std::vector<int> out(xs);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    for (int v : out)
        if (v < 0 || v >= n)
            throw PreconditionError(std::string(what) + ": state out of range");
    return out;
}

void fill_derived(MartingaleParams& p) {
    p.log_l = p.k;
    p.log_p = -p.k;
    p.log_eps = std::log(p.lambda / 5.0) + p.log_p;
    p.log_delta = p.log_eps - std::log(p.k);
    p.log_theta = 2.0 * p.log_delta;
    p.log_d = -p.log_delta;
    p.log_rho = std::log(kGamma / 160.0) + std::log(p.k) + p.log_p;
    p.log_degree_cutoff =
        std::log(16.0 * p.c) + 2.0 * p.log_d - std::log(kGamma) - p.log_rho;
}

} // namespace

MartingaleParams MartingaleParams::paper(double c, double beta, double lambda) {
    if (c < 1) throw PreconditionError("params: C must be >= 1");
    if (beta <= 0 || beta >= 1)
        throw PreconditionError("params: beta outside (0, 1)");
    if (lambda <= 0 || lambda > 1)
        throw PreconditionError("params: lambda outside (0, 1]");
    MartingaleParams p;
    p.c = c;
    p.beta = beta;
    p.lambda = lambda;
    const double base = 20.0 * std::exp(1.0) * (64.0 + c);
    p.k = std::max(base * base, std::log(1.0 / beta));
    fill_derived(p);
    return p;
}

MartingaleParams MartingaleParams::from_k(double k, double lambda, double c,
                                          double beta) {
    if (k <= 0) throw PreconditionError("params: K must be positive");
    if (lambda <= 0 || lambda > 1)
        throw PreconditionError("params: lambda outside (0, 1]");
    MartingaleParams p;
    p.c = c;
    p.beta = beta;
    p.lambda = lambda;
    p.k = k;
    fill_derived(p);
    return p;
}

double lambda_of(const MarkovChain& m, const std::vector<int>& W,
                 bool exclude_forced) {
    auto ws = sorted_unique(W, m.n(), "lambda");
    if (ws.empty()) throw PreconditionError("lambda: empty target set");
    std::vector<char> wmask(m.n(), 0);
    for (int v : ws) wmask[v] = 1;
    double maxp = 0;
    for (int v = 0; v < m.n(); ++v) {
        if (exclude_forced && m.support_size(v) < 2) continue;
        for (const auto& [t, p] : m.row(v))
            if (wmask[t] && t != v) maxp = std::max(maxp, p);
    }
    const double lambda = 1.0 - maxp;
    if (lambda <= 0 && !exclude_forced)
        throw PreconditionError(
            "lambda: degenerate (a transition into W has probability 1); "
            "consider excluding forced transitions");
    return lambda;
}

namespace {

// Per-target bookkeeping along a fixed state sequence.
struct TargetTrack {
    std::vector<double> h; // h[t], t = 0..M
    long long r = -1;
    long long hit = -1;

    // xi^v_s given the track.
    double xi(long long s) const {
        const long long rv = r < 0 ? std::numeric_limits<long long>::max() : r;
        const long long cap = std::min(s, rv);
        const bool alive = hit < 0 || hit > cap;
        if (!alive) return 0.0;
        return 1.0 / h_at(cap - 1);
    }

    double h_at(long long t) const {
        if (t < 0) return 1.0;
        return h[static_cast<size_t>(t)];
    }
};

TargetTrack track_target(const MarkovChain& m, const std::vector<int>& states,
                         int v, double threshold) {
    TargetTrack tr;
    tr.h.resize(states.size());
    double h = 1.0;
    for (size_t t = 0; t < states.size(); ++t) {
        h *= 1.0 - m.prob(states[t], v);
        tr.h[t] = h;
        if (tr.r < 0 && h < threshold) tr.r = static_cast<long long>(t);
        if (tr.hit < 0 && states[t] == v) tr.hit = static_cast<long long>(t);
    }
    return tr;
}

void require_valid_xi_input(const MarkovChain& m, const WalkTrace& trace,
                            const std::vector<int>& wmaskable, double K) {
    if (trace.chain_id != m.digest())
        throw PreconditionError("xi: trace was generated by a different chain");
    if (K <= 0 || K > kMaxK)
        throw PreconditionError("xi: K must lie in (0, 500]");
    if (trace.states.empty()) throw PreconditionError("xi: empty trace");
    for (int v : wmaskable)
        if (v == trace.states.front())
            throw PreconditionError("xi: the walk must start outside W");
}

} // namespace

MartingaleTrace build_xi(const MarkovChain& m, const WalkTrace& trace,
                         const std::vector<int>& W, double K) {
    auto ws = sorted_unique(W, m.n(), "xi");
    if (ws.empty()) throw PreconditionError("xi: empty target set");
    require_valid_xi_input(m, trace, ws, K);

    MartingaleTrace out;
    out.w = ws;
    out.m = static_cast<int>(ws.size());
    out.k = K;
    out.l = std::exp(K);
    out.lambda = lambda_of(m, ws, false);
    out.horizon = static_cast<long long>(trace.states.size()) - 1;
    const double threshold = out.lambda / out.l;

    const long long M = out.horizon;
    out.xi.assign(M + 1, 0.0);
    out.covered = true;
    for (int j = 0; j < out.m; ++j) {
        auto tr = track_target(m, trace.states, ws[j], threshold);
        out.h.push_back(tr.h);
        out.r.push_back(tr.r);
        out.hit.push_back(tr.hit);
        std::vector<double> xv(M + 1);
        for (long long s = 0; s <= M; ++s) {
            xv[s] = tr.xi(s);
            out.xi[s] += xv[s];
        }
        out.xi_v.push_back(std::move(xv));
        const bool has_r = tr.r >= 0, has_hit = tr.hit >= 0;
        const bool q = has_r && (!has_hit || tr.hit > tr.r);
        out.q.push_back(q);
        out.rv.push_back(has_r);
        out.qstar.push_back(q && has_r);
        out.frozen.push_back(has_r || has_hit);
        if (!has_hit) out.covered = false;
    }
    out.all_frozen =
        std::all_of(out.frozen.begin(), out.frozen.end(), [](bool b) { return b; });
    out.increment_bound = out.l / (out.lambda * out.lambda);
    for (long long s = 1; s <= M; ++s)
        out.max_abs_increment =
            std::max(out.max_abs_increment, std::abs(out.xi[s] - out.xi[s - 1]));
    return out;
}

namespace {

// xi at the last index of a state sequence, without building full arrays.
double xi_of_history(const MarkovChain& m, const std::vector<int>& states,
                     const std::vector<int>& ws, double lambda, double L) {
    const double threshold = lambda / L;
    const long long s = static_cast<long long>(states.size()) - 1;
    double total = 0;
    for (int v : ws) {
        auto tr = track_target(m, states, v, threshold);
        total += tr.xi(s);
    }
    return total;
}

} // namespace

StepCheck check_martingale_step(const MarkovChain& m,
                                const std::vector<int>& history,
                                const std::vector<int>& W, double K) {
    auto ws = sorted_unique(W, m.n(), "step check");
    if (ws.empty()) throw PreconditionError("step check: empty target set");
    if (history.empty()) throw PreconditionError("step check: empty history");
    if (K <= 0 || K > kMaxK)
        throw PreconditionError("step check: K must lie in (0, 500]");
    for (int v : ws)
        if (v == history.front())
            throw PreconditionError("step check: walk must start outside W");
    const double lambda = lambda_of(m, ws, false);
    const double L = std::exp(K);

    StepCheck out;
    out.current = xi_of_history(m, history, ws, lambda, L);
    std::vector<int> extended(history);
    extended.push_back(0);
    for (const auto& [t, p] : m.row(history.back())) {
        extended.back() = t;
        out.expected_next += p * xi_of_history(m, extended, ws, lambda, L);
    }
    out.pass = std::abs(out.expected_next - out.current) <=
               1e-9 * std::max(1.0, out.current);
    return out;
}

namespace {

double s_of_history(const MarkovChain& m, const std::vector<int>& states,
                    const std::vector<int>& is, double threshold) {
    const long long k = static_cast<long long>(states.size()) - 1;
    double value = 1.0;
    for (int v : is) {
        auto tr = track_target(m, states, v, threshold);
        const long long rv =
            tr.r < 0 ? std::numeric_limits<long long>::max() : tr.r;
        const long long cap = std::min(k, rv);
        if (tr.hit >= 0 && tr.hit <= cap) return 0.0;
        value /= tr.h_at(cap - 1);
    }
    return value;
}

} // namespace

SuperMartingaleReport super_martingale_s(const MarkovChain& m,
                                         const WalkTrace& trace,
                                         const std::vector<int>& W,
                                         const std::vector<int>& I, double K) {
    auto ws = sorted_unique(W, m.n(), "supermartingale");
    auto is = sorted_unique(I, m.n(), "supermartingale");
    if (is.empty()) throw PreconditionError("supermartingale: empty index set");
    for (int v : is)
        if (!std::binary_search(ws.begin(), ws.end(), v))
            throw PreconditionError("supermartingale: I must be a subset of W");
    require_valid_xi_input(m, trace, ws, K);
    const double lambda = lambda_of(m, ws, false);
    const double L = std::exp(K);
    const double threshold = lambda / L;
    const long long M = static_cast<long long>(trace.states.size()) - 1;

    SuperMartingaleReport rep;
    for (long long k = 0; k <= M; ++k) {
        std::vector<int> prefix(trace.states.begin(),
                                trace.states.begin() + k + 1);
        rep.s_values.push_back(s_of_history(m, prefix, is, threshold));
        int active = 0;
        for (int v : is) {
            auto tr = track_target(m, prefix, v, threshold);
            if (tr.r < 0 && (tr.hit < 0 || tr.hit > k)) ++active;
        }
        rep.active.push_back(active);
    }
    rep.pass = true;
    for (long long k = 0; k < M; ++k) {
        std::vector<int> prefix(trace.states.begin(),
                                trace.states.begin() + k + 1);
        prefix.push_back(0);
        double expected = 0;
        for (const auto& [t, p] : m.row(trace.states[k])) {
            prefix.back() = t;
            expected += p * s_of_history(m, prefix, is, threshold);
        }
        rep.expected_next.push_back(expected);
        rep.max_violation =
            std::max(rep.max_violation, expected - rep.s_values[k]);
        if (expected > rep.s_values[k] + 1e-9) rep.pass = false;
    }
    return rep;
}

AssocReport assoc_bound(const MarkovChain& m, int start,
                        const std::vector<int>& W, const std::vector<int>& I,
                        double K, int horizon) {
    const int n = m.n();
    auto ws = sorted_unique(W, n, "assoc");
    auto is = sorted_unique(I, n, "assoc");
    if (n > 8 || horizon > 16 || static_cast<int>(is.size()) > 3)
        throw BudgetError("assoc: exact enumeration limited to n <= 8, "
                          "horizon <= 16, |I| <= 3");
    if (horizon < 0) throw PreconditionError("assoc: negative horizon");
    if (K <= 0 || K > kMaxK)
        throw PreconditionError("assoc: K must lie in (0, 500]");
    if (start < 0 || start >= n)
        throw PreconditionError("assoc: start out of range");
    for (int v : is)
        if (!std::binary_search(ws.begin(), ws.end(), v))
            throw PreconditionError("assoc: I must be a subset of W");
    if (std::binary_search(ws.begin(), ws.end(), start))
        throw PreconditionError("assoc: the walk must start outside W");

    AssocReport rep;
    const int isize = static_cast<int>(is.size());
    rep.p_pow_i = std::exp(-K * isize);
    if (isize == 0) {
        rep.prob_all_q = rep.prob_all_q_star = 1.0;
        rep.pass = true;
        return rep;
    }
    const double lambda = lambda_of(m, ws, false);
    const double log_threshold = std::log(lambda) - K;

    // log(1 - p(x, v)) per state x and tracked v.
    std::vector<std::array<double, 3>> log1m(n);
    for (int x = 0; x < n; ++x)
        for (int j = 0; j < isize; ++j)
            log1m[x][j] = std::log1p(-m.prob(x, is[j]));

    const int count_bits = 5;
    auto count_of = [&](std::uint64_t key, int x) {
        return (key >> (x * count_bits)) & 0x1f;
    };
    auto log_h = [&](std::uint64_t key, int j) {
        double s = 0;
        for (int x = 0; x < n; ++x) {
            const auto c = count_of(key, x);
            if (c) s += static_cast<double>(c) * log1m[x][j];
        }
        return s;
    };
    const int pos_shift = 40, mask_shift = 43;
    const std::uint64_t full_mask = (1ULL << isize) - 1;

    std::unordered_map<std::uint64_t, double> level;
    {
        std::uint64_t key = (1ULL << (start * count_bits)) |
                            (static_cast<std::uint64_t>(start) << pos_shift);
        std::uint64_t tmask = 0;
        for (int j = 0; j < isize; ++j)
            if (log_h(key & ~(7ULL << mask_shift), j) < log_threshold)
                tmask |= 1ULL << j;
        if (tmask == full_mask) {
            rep.prob_all_q = 1.0;
        } else {
            key |= tmask << mask_shift;
            level[key] = 1.0;
        }
    }

    for (int step = 0; step < horizon && !level.empty(); ++step) {
        std::unordered_map<std::uint64_t, double> next;
        next.reserve(level.size() * 2);
        for (const auto& [key, prob] : level) {
            const int pos = static_cast<int>((key >> pos_shift) & 0x7);
            const std::uint64_t counts = key & ((1ULL << pos_shift) - 1);
            const std::uint64_t tmask = (key >> mask_shift) & 0x7;
            for (const auto& [y, p] : m.row(pos)) {
                // Resolution check: stepping onto an untracked-yet v decides
                // it false for the intersection.
                bool dead = false;
                std::uint64_t nmask = tmask;
                for (int j = 0; j < isize && !dead; ++j)
                    if (!(tmask & (1ULL << j)) && y == is[j]) dead = true;
                if (dead) continue;
                const std::uint64_t ncounts =
                    counts + (1ULL << (y * count_bits));
                for (int j = 0; j < isize; ++j)
                    if (!(nmask & (1ULL << j)) &&
                        log_h(ncounts, j) < log_threshold)
                        nmask |= 1ULL << j;
                const double mass = prob * p;
                if (nmask == full_mask) {
                    rep.prob_all_q += mass;
                } else {
                    const std::uint64_t nkey =
                        ncounts | (static_cast<std::uint64_t>(y) << pos_shift) |
                        (nmask << mask_shift);
                    next[nkey] += mass;
                }
            }
        }
        level.swap(next);
    }
    for (const auto& [key, prob] : level) rep.unresolved_mass += prob;
    rep.prob_all_q_star = rep.prob_all_q; // crossings happen within the horizon
    rep.pass = rep.prob_all_q <= rep.p_pow_i + 1e-12 &&
               rep.prob_all_q_star <= rep.prob_all_q + 1e-12;
    return rep;
}

double azuma_bound(long long k, double L, double eta) {
    if (k < 1 || L <= 0 || eta < 0)
        throw PreconditionError("azuma: need k >= 1, L > 0, eta >= 0");
    return std::exp(-eta * eta / (2.0 * static_cast<double>(k) * L * L));
}

double phi_delta(const MarkovChain& m, int y, int z, double delta) {
    if (delta < 0) throw PreconditionError("phi_delta: negative threshold");
    const double p = m.prob(y, z);
    return p <= delta ? p : 0.0;
}

double phi_delta_sum(const MarkovChain& m, const std::vector<int>& Y, int z,
                     double delta) {
    double s = 0;
    for (int y : Y) s += phi_delta(m, y, z, delta);
    return s;
}

NetSampleResult sample_net(const MarkovChain& m, const std::vector<int>& Y,
                           const std::vector<int>& Z, const std::vector<int>& W,
                           double delta, double K, long long M,
                           int max_retries, std::uint64_t seed) {
    const int n = m.n();
    auto ws = sorted_unique(W, n, "net");
    auto zs = sorted_unique(Z, n, "net");
    for (int z : zs)
        if (!std::binary_search(ws.begin(), ws.end(), z))
            throw PreconditionError("net: Z must be a subset of W");
    if (delta <= 0 || K <= 0)
        throw PreconditionError("net: delta and K must be positive");
    if (max_retries < 1) throw PreconditionError("net: need at least one retry");

    NetSampleResult out;
    out.lambda = lambda_of(m, ws, false);
    out.eps = out.lambda * std::exp(-K) / 5.0;
    const double msize = static_cast<double>(ws.size());
    out.size_bound = 33.0 * delta * static_cast<double>(M) / K;
    out.hood_bound = 64.0 * msize / std::sqrt(K);
    out.overlap_bound = out.eps * msize;
    for (int z : ws)
        if (phi_delta_sum(m, Y, z, delta) > std::sqrt(K)) out.w0.push_back(z);

    const double include_p = std::min(1.0, 32.0 * delta / K);
    for (int attempt = 0; attempt < max_retries; ++attempt) {
        SplitStream rng(seed, static_cast<std::uint64_t>(attempt));
        std::vector<int> yprime;
        for (int y : Y)
            if (rng.next_unit() < include_p) yprime.push_back(y);
        std::vector<int> hood;
        for (int z : ws)
            if (phi_delta_sum(m, yprime, z, delta) >= delta) hood.push_back(z);
        long long outside_w0 = 0, in_z = 0;
        for (int z : hood) {
            if (!std::binary_search(out.w0.begin(), out.w0.end(), z))
                ++outside_w0;
            if (std::binary_search(zs.begin(), zs.end(), z)) ++in_z;
        }
        const bool ok_size =
            static_cast<double>(yprime.size()) < out.size_bound;
        const bool ok_hood = static_cast<double>(outside_w0) < out.hood_bound;
        const bool ok_overlap = static_cast<double>(in_z) > out.overlap_bound;
        if (!ok_size) ++out.fail_size;
        if (!ok_hood) ++out.fail_hood;
        if (!ok_overlap) ++out.fail_overlap;
        out.y_prime = std::move(yprime);
        out.n_delta = std::move(hood);
        if (ok_size && ok_hood && ok_overlap) {
            out.success = true;
            out.attempts = attempt + 1;
            return out;
        }
    }
    // Failure keeps the last attempt's sample for diagnostics.
    out.attempts = max_retries;
    return out;
}

NetFamilySizeReport net_family_size(const MartingaleParams& params,
                                    double log_m, double log_t,
                                    double log_hood) {
    NetFamilySizeReport rep;
    const double log_eps_m = params.log_eps + log_m;
    // Entropy bound log C(a, b) <= b (1 + log a - log b) for both factors.
    const double log_pool = std::log(2.0) + log_m - std::log(params.beta);
    const double a_per_unit = 1.0 + log_pool - log_t;          // per t
    const double b_per_eps = 1.0 + log_hood - log_eps_m;       // per eps m
    rep.per_eps_binom =
        std::exp(log_t - log_eps_m) * a_per_unit + b_per_eps;
    rep.per_eps_target = -std::log(15.0) - params.log_eps;
    rep.bound_holds = rep.per_eps_binom <= rep.per_eps_target;
    const double eps_m = std::exp(log_eps_m); // may underflow to 0
    rep.log_binom_product = eps_m * rep.per_eps_binom;
    rep.log_target = eps_m * rep.per_eps_target;
    return rep;
}

ConcentrationReport concentration_report(const MarkovChain& m,
                                         const std::vector<WalkTrace>& traces,
                                         const std::vector<int>& W, double K,
                                         const std::vector<double>& thetas) {
    if (traces.empty())
        throw PreconditionError("concentration: need at least one trace");
    ConcentrationReport rep;
    std::vector<double> final_xi;
    long long horizon = -1;
    for (const auto& trace : traces) {
        auto mt = build_xi(m, trace, W, K);
        if (horizon < 0) {
            horizon = mt.horizon;
            rep.m = mt.m;
            rep.lambda = mt.lambda;
            rep.l = mt.l;
            rep.horizon = horizon;
            rep.mbound_value = 2.0 * mt.l * mt.m / (mt.lambda * mt.lambda);
        } else if (mt.horizon != horizon) {
            throw PreconditionError("concentration: traces must share a horizon");
        }
        double total = 0;
        for (long long i = 1; i <= mt.horizon; ++i) {
            const int x = trace.states[static_cast<size_t>(i) - 1];
            for (int j = 0; j < mt.m; ++j) {
                const bool live = (mt.hit[j] < 0 || mt.hit[j] > i - 1) &&
                                  (mt.r[j] < 0 || mt.r[j] > i - 1);
                if (live)
                    total += 2.0 * m.prob(x, mt.w[j]) * mt.xi_v[j][i - 1];
            }
        }
        rep.totals.push_back(total);
        rep.max_total = std::max(rep.max_total, total);
        final_xi.push_back(mt.xi.back());
    }
    rep.totals_pass = rep.max_total <= rep.mbound_value * (1.0 + 1e-9) + 1e-9;

    const double inc = rep.l / (rep.lambda * rep.lambda);
    for (double theta : thetas) {
        ConcentrationThetaRow row;
        row.theta = theta;
        row.azuma_two_sided =
            2.0 * azuma_bound(std::max<long long>(horizon, 1), inc,
                              theta * rep.m);
        row.alltime_bound =
            2.0 * std::exp(-theta * theta * std::pow(rep.lambda, 4.0) * rep.m /
                           (64.0 * rep.l * rep.l));
        auto check = empirical_tail_vs_bound(
            final_xi, static_cast<double>(rep.m), theta * rep.m,
            std::min(row.azuma_two_sided, row.alltime_bound));
        row.frequency = check.frequency;
        row.stderr_est = check.stderr_est;
        row.pass = check.pass;
        rep.rows.push_back(row);
    }
    return rep;
}

TechCheck tech_inequality(const std::vector<double>& p) {
    for (double x : p)
        if (x < 0 || x >= 1)
            throw PreconditionError("tech inequality: entries must lie in [0, 1)");
    TechCheck out;
    double running = 1.0; // prod_{j<i} (1 - p_j)^-1
    out.g = 1.0;
    for (double x : p) {
        out.f += x * running;
        running /= 1.0 - x;
        out.g = running;
    }
    out.pass = out.f <= out.g - 1.0 + 1e-12;
    return out;
}

} // namespace covertime
