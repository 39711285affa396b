#pragma once

#include <utility>
#include <vector>

#include "covertime/chain.hpp"

namespace covertime {

/// One step of the chain applied to a row vector.
std::vector<double> step_distribution(const MarkovChain& m,
                                      const std::vector<double>& p);

/// t-step distribution p^t(v, .) as a dense vector.
std::vector<double> transition_power(const MarkovChain& m, int v, long long t);

/// Chain watched on W: row u gives the distribution of the first
/// strictly-positive-time entry into W. States are reindexed by sorted W
/// order. Requires W reachable from every state.
MarkovChain induced_chain(const MarkovChain& m, const std::vector<int>& W);

/// Exact Pr(coverage of W by the horizon) by dynamic programming over
/// (state, covered-subset). Budget: |W| <= 24 and n * 2^|W| <= 2^24.
double cover_probability(const MarkovChain& m, const StartRule& start,
                         const std::vector<int>& W, long long horizon,
                         bool include_start);

/// Hitting-time distributions from a single source, truncated at horizon R.
/// Atom vectors are truncated once the remaining alive mass is negligible;
/// the ">R" atom absorbs whatever is left.
struct HittingReport {
    int source = 0;
    std::vector<int> targets;
    long long horizon = 0;
    std::vector<double> t_atoms;      // Pr(T_B = t), t = 0.. (truncated)
    double t_tail = 0;                // Pr(T_B > R)
    std::vector<double> tplus_atoms;  // Pr(T_B^+ = t)
    double tplus_tail = 0;            // Pr(T_B^+ > R)
    // Pr_v(T_w <= min{R, T_v^+}) per target w.
    std::vector<std::pair<int, double>> before_return;
};

HittingReport hitting_stats(const MarkovChain& m, int v,
                            const std::vector<int>& targets, long long R);

/// Pr_v(T_w^+ <= R): probability that w appears among X_1..X_R.
double prob_hit_within(const MarkovChain& m, int v, int w, long long R);

/// Pr_v(T_w <= min{R, T_v^+}) for w != v.
double prob_hit_before_return(const MarkovChain& m, int v, int w, long long R);

/// Pr_v(X_1..X_R avoids A entirely).
double prob_avoid_set(const MarkovChain& m, int v, const std::vector<int>& A,
                      long long R);

/// CDF of the return time T_v^+, truncated where the alive mass decays; use
/// cdf_at() to query arbitrary horizons.
std::vector<double> return_time_cdf(const MarkovChain& m, int v,
                                    long long max_horizon);
double cdf_at(const std::vector<double>& cdf, long long t);

/// B_v(R) = {w != v : Pr_v(w in X_[R]) > delta/2} and
/// B'_v(R) = {w != v : Pr_v(T_w <= min{R, T_v^+}) > delta/2}.
struct BallSets {
    int center = 0;
    long long radius = 0;
    double delta = 0;
    std::vector<int> b;
    std::vector<int> bprime;
};

BallSets ball_sets(const MarkovChain& m, int v, long long R, double delta);

/// States v with Pr_v(T_v^+ <= R) > 1 - delta (strict).
std::vector<int> classify_recurrent(const MarkovChain& m, double delta,
                                    long long R);

/// Return-probability inequalities for reversible chains:
/// p^{t+s}(v,w)/pi_w <= sqrt(p^{2t}(v,v)/pi_v * p^{2s}(w,w)/pi_w),
/// and monotonicity of the even return probabilities.
struct ReturnInequalityReport {
    double lhs_af = 0;
    double rhs_af = 0;
    bool pass_af = false;
    bool pass_mono = false;
};

ReturnInequalityReport check_return_inequalities(const MarkovChain& m, int v,
                                                 int w, int t, int s);

/// Full spectrum of the transition operator of a reversible chain
/// (eigenvalues sorted descending) plus the quantity max{|l_2|, |l_n|}.
struct SpectralReport {
    std::vector<double> eigenvalues;
    double gap_quantity = 0;
};

SpectralReport spectral_gap(const MarkovChain& m);
bool is_eps_expander(const SpectralReport& report, double eps);

/// Exact mixing/hitting quantities next to their expander bounds:
/// |p^t(v,S) - pi_S| vs sqrt(pi_S/pi_v) (1-eps)^t per state, and
/// max_v Pr_v(T_S > t) vs (1 - pi_S/2)^{eps t / (2 ln n)}.
struct ExpanderBoundsReport {
    long long t = 0;
    double eps = 0;
    double pi_s = 0;
    double max_deviation = 0;
    int max_deviation_state = 0;
    double tail_bound_at_max = 0;
    bool pass_tail = false;
    double exact_hitting_tail = 0;
    double hitting_bound = 0;
    bool pass_hitting = false;
};

ExpanderBoundsReport expander_bounds(const MarkovChain& m,
                                     const std::vector<int>& S, long long t,
                                     double eps);

/// Degree-split witness: B = {deg > big}, S = {deg <= small},
/// T = floor(0.1 * big / (4 * small)), and
/// W = {v in B : Pr_v(X_[T] meets S) < 1/2}.
struct HeavyWitnessReport {
    std::vector<int> b;
    std::vector<int> s;
    long long horizon = 0;
    std::vector<int> witness;
    std::vector<std::pair<int, double>> hit_probs; // per v in B
    bool half_guarantee = false;                   // |W| >= |B|/2
};

HeavyWitnessReport heavy_witness(const Graph& g, int big_degree,
                                 int small_degree);

} // namespace covertime
