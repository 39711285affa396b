#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "covertime/chain.hpp"
#include "covertime/graph.hpp"

namespace covertime {

/// Blocks V_1..V_k with designated subsets U_i and a discard pile V0.
/// validate_partition enforces: V0 and the blocks are pairwise disjoint and
/// cover 0..n-1, and U_i is a subset of V_i.
struct Partition {
    int n = 0;
    std::vector<int> v0;
    std::vector<std::vector<int>> blocks;
    std::vector<std::vector<int>> designated;
    std::string provenance;
    std::map<std::string, double> params;
    std::uint64_t seed = 0;
};

void validate_partition(const Partition& p);

/// Row test: v is good for W when its induced row into W \ {v} stays
/// strictly below delta.
bool is_good(const MarkovChain& m, int v, const std::vector<int>& W,
             double delta);

/// Column test defining the designated sets: targets w in W such that no
/// other v in W jumps to w with induced probability >= delta.
std::vector<int> good_targets(const MarkovChain& m, const std::vector<int>& W,
                              double delta);

/// Sufficient-condition check: certified good when W ∩ B'_v(R) is empty and
/// Pr_v(X_[R] misses W) < delta/2. Never reports "bad".
enum class GoodCheck { CertifiedGood, Inconclusive };

struct ObservationReport {
    GoodCheck verdict = GoodCheck::Inconclusive;
    double max_hit_before_return = 0; // over w in W \ {v}
    double avoid_prob = 0;            // Pr_v(X_[R] ∩ W = empty)
};

ObservationReport good_by_observation(const MarkovChain& m, int v,
                                      const std::vector<int>& W, long long R,
                                      double delta);

/// Per-condition verdicts for the partition requirements:
/// |V_i| > theta n, |V0| < (1-gamma) n, |U_i| > gamma |V_i|, and
/// max induced probability into the designated sets below the threshold.
/// `la_tol` absorbs linear-algebra residual on the induced comparison.
struct CorPReport {
    bool size_ok = false;
    bool v0_ok = false;
    bool designated_ok = false;
    bool induced_ok = false;
    double max_induced = 0;
    double delta_threshold = 0;
    double paper_log_delta = 0; // log-space value of the nominal threshold
    int k = 0;
    bool pass = false;
};

CorPReport verify_corp(const MarkovChain& m, const Partition& p, double C,
                       double theta, double delta_threshold,
                       double gamma = 0.1, double la_tol = 1e-9);

/// Staged safe coloring of a rooted tree: k <= (t+1) t^{t+1} classes with
/// every induced transition within a class at most delta (t = ceil(1/delta)).
/// Every class is re-verified exactly before returning.
Partition tree_safe_partition(const Graph& g, double delta, int root = 0);

/// Exact Pr_v(T_w < T_v^+) against 1/d(v, w) on a tree.
struct FarCheck {
    double exact = 0;
    double bound = 0;
    bool pass = false;
};

FarCheck far_bound(const Graph& g, int v, int w);

/// Conflict-graph coloring of the (delta,R)-recurrent vertices: v ~ w when
/// either lies in the other's B' ball; greedy coloring along descending
/// degree; classes at most theta_frac * n move to V0; surviving classes are
/// checked to satisfy max pairwise induced probability < 3 delta / 2.
Partition recurrent_partition(const Graph& g, double delta, long long R,
                              double theta_frac);

/// Random block partition of the low-degree vertices of an eps-expander,
/// with exact per-vertex goodness and the niceness filter.
Partition expander_partition(const Graph& g, double eps, double delta,
                             int degree_cutoff, std::uint64_t seed);

/// Return-time scale selection: the smallest index i (< 10 delta^{-k}) whose
/// window (R_{i-1}, R_i] is unlikely for at least 0.9 n vertices, together
/// with the derived quantities. N is incremented (up to twice) to make the
/// integer R' odd; when the schedule makes that impossible the minimal N is
/// kept and horizon_prime_odd records the outcome.
struct ScaleChoice {
    int index = 0;
    int n_steps = 0; // N
    int k_exp = 0;
    double r_prev = 0;  // R_{i-1}
    double r = 0;       // R_i
    double r_prime = 0; // N * R_{i-1}
    double q = 0;
    double q1 = 0;
    double q2 = 0;
    long long horizon = 0;       // floor(R_i)
    long long horizon_prev = 0;  // floor(R_{i-1})
    long long horizon_prime = 0; // floor(R')
    bool horizon_prime_odd = false;
    int qualifying = 0;
    bool identity_ok = false; // R == C Q2 / theta
};

ScaleChoice choose_scale(const MarkovChain& m, double delta, int k_exp,
                         double C);

/// End-to-end random-block construction over the transient low-degree
/// vertices. Never fails structurally; shortfalls land in the diagnostics.
struct GenericDiagnostics {
    ScaleChoice scale;
    long long t_size = 0;
    double t_target = 0; // 0.6 n
    long long d_size = 0;
    double d_target = 0; // 2 theta n
    long long blocks_nonempty = 0;
    long long blocks_nice = 0;
    double block_size_target = 0; // zeta n / 2
    long long blocks_below_size_target = 0;
    double bad_fraction_outside_d = 0;
    double bad_bound = 0; // 4 theta
    bool exact_ball_checks_ran = false;
    bool ball_bound_ok = true;     // |B_v(R) ∩ T| <= Q per v in T
    bool bprime_union_ok = true;   // zeta |B'_v(R) ∩ T| < theta per v in T
};

Partition generic_partition(const Graph& g, double C, double delta, int k_exp,
                            int degree_cutoff, std::uint64_t seed,
                            bool exact_checks, long long mc_reps,
                            GenericDiagnostics* diag);

/// Keep blocks larger than theta * n (strictly), move the rest to V0 and
/// designate each kept block fully. Used to turn a bare coloring into a
/// verifiable partition.
Partition to_corp_candidate(const Partition& p, double theta);

} // namespace covertime
