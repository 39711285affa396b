#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "covertime/chain.hpp"

namespace covertime {

/// Binomial point estimate with a 99% Wilson interval.
struct Estimate {
    double p_hat = 0;
    long long reps = 0;
    double lo = 0;
    double hi = 1;
    std::uint64_t seed = 0;
};

Estimate wilson_estimate(long long successes, long long reps,
                         std::uint64_t seed);

/// Seeded walk of the given length; identical inputs give identical traces.
WalkTrace simulate_walk(const MarkovChain& m, const StartRule& start,
                        long long steps, std::uint64_t seed);

/// Fraction of replications whose visited set covers W. Replication r draws
/// from the stream (seed, r); results do not depend on the thread count.
Estimate estimate_cover(const MarkovChain& m, const StartRule& start,
                        const std::vector<int>& W, long long horizon,
                        long long reps, std::uint64_t seed, bool include_start,
                        int threads = 1);

/// Empirical distribution of |X_[R] ∩ A| plus below-threshold estimates.
/// Counting stops at `cap` (the largest query threshold when one is given),
/// so the top histogram bucket aggregates all counts >= cap.
struct VisitStatsReport {
    long long reps = 0;
    std::uint64_t seed = 0;
    long long cap = 0;
    std::vector<long long> histogram; // index = distinct-visit count
    std::vector<std::pair<long long, Estimate>> below; // Pr(count < q) per q
};

VisitStatsReport estimate_visit_stats(const MarkovChain& m,
                                      const StartRule& start, long long R,
                                      const std::vector<int>& A, long long reps,
                                      std::uint64_t seed,
                                      const std::vector<long long>& thresholds,
                                      int threads = 1);

/// Frequency of |sample - center| > radius against a probability bound;
/// passes when the frequency is within three binomial standard errors.
struct TailCheck {
    double frequency = 0;
    double bound = 0;
    double stderr_est = 0;
    bool pass = false;
};

TailCheck empirical_tail_vs_bound(const std::vector<double>& samples,
                                  double center, double radius, double bound);

} // namespace covertime
