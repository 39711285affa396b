#include "covertime/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "covertime/errors.hpp"
#include "covertime/rng.hpp"

namespace covertime {

namespace {

constexpr double kZ99 = 2.5758293035489004; // Phi^{-1}(0.995)

// Per-state cumulative rows for fast sampling.
struct SamplerRows {
    std::vector<std::vector<double>> cum;
    std::vector<std::vector<int>> target;

    explicit SamplerRows(const MarkovChain& m)
        : cum(m.n()), target(m.n()) {
        for (int v = 0; v < m.n(); ++v) {
            double acc = 0;
            for (const auto& [t, p] : m.row(v)) {
                acc += p;
                cum[v].push_back(acc);
                target[v].push_back(t);
            }
            if (!cum[v].empty()) cum[v].back() = 1.0; // swallow row-sum slack
        }
    }

    int step(int v, double u) const {
        const auto& c = cum[v];
        size_t i = std::lower_bound(c.begin(), c.end(), u) - c.begin();
        if (i >= c.size()) i = c.size() - 1;
        return target[v][i];
    }
};

int sample_start(const StartRule& start, const MarkovChain& m, SplitStream& rng) {
    if (start.fixed()) {
        int v = start.vertex();
        if (v < 0 || v >= m.n())
            throw PreconditionError("simulate: start out of range");
        return v;
    }
    const auto& d = start.distribution();
    if (static_cast<int>(d.size()) != m.n())
        throw PreconditionError("simulate: start distribution length mismatch");
    double u = rng.next_unit(), acc = 0;
    for (int v = 0; v < m.n(); ++v) {
        acc += d[v];
        if (u < acc) return v;
    }
    return m.n() - 1;
}

// Deterministic chunked parallelism: replication r always uses stream
// (seed, r) and per-chunk tallies are summed in chunk order.
template <typename PerRep>
void run_replications(long long reps, int threads, PerRep&& body) {
    threads = std::max(threads, 1);
    if (threads == 1) {
        for (long long r = 0; r < reps; ++r) body(r);
        return;
    }
    const long long chunk = 256;
    const long long nchunks = (reps + chunk - 1) / chunk;
    std::atomic<long long> next{0};
    auto worker = [&]() {
        for (;;) {
            long long c = next.fetch_add(1);
            if (c >= nchunks) return;
            const long long lo = c * chunk, hi = std::min(reps, lo + chunk);
            for (long long r = lo; r < hi; ++r) body(r);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

} // namespace

Estimate wilson_estimate(long long successes, long long reps,
                         std::uint64_t seed) {
    if (reps < 1) throw PreconditionError("estimate: need at least 1 replication");
    Estimate e;
    e.reps = reps;
    e.seed = seed;
    const double n = static_cast<double>(reps);
    const double p = static_cast<double>(successes) / n;
    e.p_hat = p;
    const double z2 = kZ99 * kZ99;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half =
        kZ99 * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // Clamp against rounding at the extremes so lo <= p_hat <= hi always.
    e.lo = std::min(std::max(0.0, center - half), p);
    e.hi = std::max(std::min(1.0, center + half), p);
    return e;
}

WalkTrace simulate_walk(const MarkovChain& m, const StartRule& start,
                        long long steps, std::uint64_t seed) {
    if (steps < 0) throw PreconditionError("simulate: negative step count");
    SamplerRows rows(m);
    SplitStream rng(seed, 0);
    WalkTrace trace;
    trace.seed = seed;
    trace.chain_id = m.digest();
    trace.states.reserve(steps + 1);
    int x = sample_start(start, m, rng);
    trace.states.push_back(x);
    for (long long t = 0; t < steps; ++t) {
        if (m.support_size(x) == 0)
            throw PreconditionError("simulate: walk entered a dead state");
        x = rows.step(x, rng.next_unit());
        trace.states.push_back(x);
    }
    return trace;
}

Estimate estimate_cover(const MarkovChain& m, const StartRule& start,
                        const std::vector<int>& W, long long horizon,
                        long long reps, std::uint64_t seed, bool include_start,
                        int threads) {
    if (reps < 1) throw PreconditionError("estimate: need at least 1 replication");
    if (horizon < 0) throw PreconditionError("estimate: negative horizon");
    const int n = m.n();
    std::vector<char> wmask(n, 0);
    int wsize = 0;
    for (int v : W) {
        if (v < 0 || v >= n)
            throw PreconditionError("estimate: target out of range");
        if (!wmask[v]) wmask[v] = 1, ++wsize;
    }
    SamplerRows rows(m);
    std::vector<std::atomic<long long>> hits(1);
    hits[0] = 0;
    run_replications(reps, threads, [&](long long r) {
        SplitStream rng(seed, static_cast<std::uint64_t>(r) + 1);
        std::vector<char> seen(n, 0);
        int covered = 0;
        int x = sample_start(start, m, rng);
        if (include_start && wmask[x]) seen[x] = 1, covered = 1;
        for (long long t = 0; t < horizon && covered < wsize; ++t) {
            x = rows.step(x, rng.next_unit());
            if (wmask[x] && !seen[x]) seen[x] = 1, ++covered;
        }
        if (covered == wsize) hits[0].fetch_add(1, std::memory_order_relaxed);
    });
    return wilson_estimate(hits[0].load(), reps, seed);
}

VisitStatsReport estimate_visit_stats(const MarkovChain& m,
                                      const StartRule& start, long long R,
                                      const std::vector<int>& A, long long reps,
                                      std::uint64_t seed,
                                      const std::vector<long long>& thresholds,
                                      int threads) {
    if (reps < 1) throw PreconditionError("estimate: need at least 1 replication");
    if (R < 0) throw PreconditionError("estimate: negative horizon");
    const int n = m.n();
    std::vector<char> amask(n, 0);
    long long asize = 0;
    for (int v : A) {
        if (v < 0 || v >= n)
            throw PreconditionError("estimate: target out of range");
        if (!amask[v]) amask[v] = 1, ++asize;
    }
    long long cap = std::min(R, asize);
    for (long long q : thresholds)
        if (q < 0) throw PreconditionError("estimate: negative threshold");
    if (!thresholds.empty())
        cap = std::min(cap, *std::max_element(thresholds.begin(), thresholds.end()));

    SamplerRows rows(m);
    std::vector<std::atomic<long long>> hist(cap + 1);
    for (auto& h : hist) h = 0;
    run_replications(reps, threads, [&](long long r) {
        SplitStream rng(seed, static_cast<std::uint64_t>(r) + 1);
        std::vector<char> seen(n, 0);
        long long count = 0;
        int x = sample_start(start, m, rng);
        for (long long t = 0; t < R && count < cap; ++t) {
            x = rows.step(x, rng.next_unit());
            if (amask[x] && !seen[x]) seen[x] = 1, ++count;
        }
        hist[count].fetch_add(1, std::memory_order_relaxed);
    });

    VisitStatsReport rep;
    rep.reps = reps;
    rep.seed = seed;
    rep.cap = cap;
    rep.histogram.resize(cap + 1);
    for (long long c = 0; c <= cap; ++c) rep.histogram[c] = hist[c].load();
    for (long long q : thresholds) {
        long long below = 0;
        for (long long c = 0; c < std::min(q, cap + 1); ++c)
            below += rep.histogram[c];
        rep.below.emplace_back(q, wilson_estimate(below, reps, seed));
    }
    return rep;
}

TailCheck empirical_tail_vs_bound(const std::vector<double>& samples,
                                  double center, double radius, double bound) {
    if (samples.empty())
        throw PreconditionError("tail check: empty sample set");
    long long exceed = 0;
    for (double x : samples)
        if (std::abs(x - center) > radius) ++exceed;
    TailCheck out;
    const double n = static_cast<double>(samples.size());
    out.frequency = static_cast<double>(exceed) / n;
    out.bound = bound;
    out.stderr_est = std::sqrt(out.frequency * (1.0 - out.frequency) / n);
    out.pass = out.frequency <= bound + 3.0 * out.stderr_est;
    return out;
}

} // namespace covertime
