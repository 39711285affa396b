#pragma once

#include <cstdint>
#include <vector>

#include "covertime/chain.hpp"

namespace covertime {

/// Parameter pack kept in log space; the nominal K is around 1.2e7, which
/// makes L = e^K unrepresentable, so only derived logs are stored. from_k
/// builds the same pack from a small, runnable K.
struct MartingaleParams {
    double c = 1;
    double beta = 0.5;
    double lambda = 1;
    double k = 1;
    double log_l = 1;              // log L = K
    double log_p = -1;             // log p = -K
    double log_eps = 0;            // eps = lambda * p / 5
    double log_delta = 0;          // delta = eps / K
    double log_theta = 0;          // theta = delta^2
    double log_d = 0;              // d = 1 / delta
    double log_rho = 0;            // rho = gamma * K * p / 160
    double log_degree_cutoff = 0;  // 16 C d^2 / (gamma rho)

    static MartingaleParams paper(double c, double beta, double lambda);
    static MartingaleParams from_k(double k, double lambda = 1.0, double c = 1.0,
                                   double beta = 0.5);
};

/// lambda = 1 - max{p(v,w) : v in V, v != w in W}. With exclude_forced, only
/// rows with at least two positive entries contribute (transitions forced
/// onto their unique neighbor are ignored).
double lambda_of(const MarkovChain& m, const std::vector<int>& W,
                 bool exclude_forced = false);

/// Per-walk certificate data: H_v(t) = prod_{i<=t} (1 - p(X_i, v)),
/// r_v = first t with H_v(t) < lambda/L, and the martingale
/// xi_s^v = 1{T_v > s ^ r_v} / H_v(s ^ r_v - 1), xi_s = sum over W.
struct MartingaleTrace {
    std::vector<int> w;             // sorted target set
    int m = 0;                      // |W|
    double lambda = 0;
    double k = 0;
    double l = 0;                   // e^K
    long long horizon = 0;
    std::vector<std::vector<double>> h;     // h[j][t], t = 0..M
    std::vector<long long> r;               // r_v, -1 if not crossed by M
    std::vector<long long> hit;             // T_v, -1 if not hit by M
    std::vector<std::vector<double>> xi_v;  // xi^v_s, s = 0..M
    std::vector<double> xi;                 // xi_s, s = 0..M
    std::vector<bool> q, rv, qstar, frozen; // per-v event flags
    bool all_frozen = false;
    bool covered = false;                   // every v in W hit by M
    double increment_bound = 0;             // L / lambda^2
    double max_abs_increment = 0;
};

MartingaleTrace build_xi(const MarkovChain& m, const WalkTrace& trace,
                         const std::vector<int>& W, double K);

/// Exact one-step expectation of xi_{s+1} given the history against xi_s.
struct StepCheck {
    double expected_next = 0;
    double current = 0;
    bool pass = false;
};

StepCheck check_martingale_step(const MarkovChain& m,
                                const std::vector<int>& history,
                                const std::vector<int>& W, double K);

/// S_k = 1{T_v > k ^ r_v for all v in I} * prod_{v in I} H_v(k ^ r_v - 1)^-1,
/// with an exact one-step supermartingale inequality check at every step.
struct SuperMartingaleReport {
    std::vector<double> s_values;      // k = 0..M
    std::vector<double> expected_next; // k = 0..M-1
    std::vector<int> active;           // |{v in I : k < r_v, T_v > k}|
    double max_violation = 0;          // max E[S_{k+1}|F_k] - S_k
    bool pass = false;
};

SuperMartingaleReport super_martingale_s(const MarkovChain& m,
                                         const WalkTrace& trace,
                                         const std::vector<int>& W,
                                         const std::vector<int>& I, double K);

/// Exact Pr(every v in I crosses r_v before being hit, within the horizon),
/// computed by exact dynamic programming over (position, visit counts,
/// per-v status). Under the freeze-at-horizon semantics a resolution-true
/// implies r_v <= horizon, so the starred probability coincides.
/// Budget: n <= 8, horizon <= 16, |I| <= 3.
struct AssocReport {
    double prob_all_q = 0;
    double prob_all_q_star = 0;
    double unresolved_mass = 0; // walks with some v undecided at the horizon
    double p_pow_i = 0;         // e^{-K |I|}
    bool pass = false;
};

AssocReport assoc_bound(const MarkovChain& m, int start,
                        const std::vector<int>& W, const std::vector<int>& I,
                        double K, int horizon);

/// e^{-eta^2 / (2 k L^2)} for a martingale with increments bounded by L.
double azuma_bound(long long k, double L, double eta);

/// Small-entry transition mass: p(y,z) when p(y,z) <= delta, else 0.
double phi_delta(const MarkovChain& m, int y, int z, double delta);
/// Multiset sum of phi_delta over Y.
double phi_delta_sum(const MarkovChain& m, const std::vector<int>& Y, int z,
                     double delta);

/// Random subsample Y' of Y (inclusion probability 32 delta / K) retried
/// until the three net properties hold:
///   |Y'| < 33 delta M / K,
///   |N_delta(Y') \ W0| < 64 m / sqrt(K),
///   |N_delta(Y') ∩ Z| > eps m,
/// where W0 = {z in W : phi_delta(Y, z) > sqrt(K)} and
/// N_delta(Y') = {z in W : phi_delta(Y', z) >= delta}.
struct NetSampleResult {
    bool success = false;
    int attempts = 0;
    std::vector<int> y_prime;
    std::vector<int> n_delta;
    std::vector<int> w0;
    double size_bound = 0;
    double hood_bound = 0;
    double overlap_bound = 0;
    long long fail_size = 0;
    long long fail_hood = 0;
    long long fail_overlap = 0;
    double eps = 0;
    double lambda = 0;
};

NetSampleResult sample_net(const MarkovChain& m, const std::vector<int>& Y,
                           const std::vector<int>& Z, const std::vector<int>& W,
                           double delta, double K, long long M,
                           int max_retries, std::uint64_t seed);

/// Log-space size bookkeeping for the index-family bound: the product of the
/// two binomial factors (entropy form) against (15 eps)^{-eps m}. The scaled
/// per-(eps m) values stay representable even when eps m underflows.
struct NetFamilySizeReport {
    double log_binom_product = 0;
    double log_target = 0;
    double per_eps_binom = 0;
    double per_eps_target = 0;
    bool bound_holds = false;
};

NetFamilySizeReport net_family_size(const MartingaleParams& params,
                                    double log_m, double log_t,
                                    double log_hood);

/// Per-trace increment-mean totals sum_i sum_v 2 p(x_{i-1}, v) xi^v_{i-1}
/// against 2 L m / lambda^2, plus deviation-bound evaluations and empirical
/// tail comparisons for a grid of relative deviations.
struct ConcentrationThetaRow {
    double theta = 0;
    double azuma_two_sided = 0;
    double alltime_bound = 0;
    double frequency = 0;
    double stderr_est = 0;
    bool pass = false;
};

struct ConcentrationReport {
    int m = 0;
    double lambda = 0;
    double l = 0;
    long long horizon = 0;
    double mbound_value = 0;     // 2 L m / lambda^2
    std::vector<double> totals;  // per trace
    double max_total = 0;
    bool totals_pass = false;
    std::vector<ConcentrationThetaRow> rows;
};

ConcentrationReport concentration_report(const MarkovChain& m,
                                         const std::vector<WalkTrace>& traces,
                                         const std::vector<int>& W, double K,
                                         const std::vector<double>& thetas);

/// f(p) = sum_i p_i prod_{j<i} (1-p_j)^-1 against g(p) - 1 with
/// g = prod (1-p_i)^-1.
struct TechCheck {
    double f = 0;
    double g = 0;
    bool pass = false;
};

TechCheck tech_inequality(const std::vector<double>& p);

} // namespace covertime
