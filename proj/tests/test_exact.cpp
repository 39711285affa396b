#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "covertime/errors.hpp"
#include "covertime/exact.hpp"
#include "covertime/rational.hpp"

#include "oracles.hpp"
#include "support.hpp"

using namespace covertime;
namespace ct = covertime::testing;

namespace {
const MarkovChain kP3 = rw_from_graph(Graph::path(3));
const MarkovChain kK2 = rw_from_graph(Graph::complete(2));
const MarkovChain kK3 = rw_from_graph(Graph::complete(3));
const MarkovChain kK4 = rw_from_graph(Graph::complete(4));
} // namespace

TEST_CASE("transition power basics") {
    auto p0 = transition_power(kP3, 1, 0);
    CHECK(p0[1] == 1.0);
    auto p2 = transition_power(kP3, 1, 2);
    CHECK(p2[0] == doctest::Approx(0.0));
    CHECK(p2[1] == doctest::Approx(1.0));
    CHECK(p2[2] == doctest::Approx(0.0));
    // Parity on K2.
    auto odd = transition_power(kK2, 0, 7);
    CHECK(odd[1] == doctest::Approx(1.0));
    double sum = 0;
    for (double x : transition_power(kK4, 2, 9)) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("induced chain basics") {
    // Watching everything reproduces the chain.
    auto same = induced_chain(kP3, {0, 1, 2});
    for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 3; ++v)
            CHECK(same.prob(u, v) == doctest::Approx(kP3.prob(u, v)));
    // P3 watched on the endpoints.
    auto ends = induced_chain(kP3, {0, 2});
    CHECK(ends.prob(0, 0) == doctest::Approx(0.5));
    CHECK(ends.prob(0, 1) == doctest::Approx(0.5));
    // K3 watched on two vertices: 1/2 + 1/2 * 1/2.
    auto pair = induced_chain(kK3, {0, 1});
    CHECK(pair.prob(0, 1) == doctest::Approx(0.75));
    CHECK(pair.prob(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("induced chain row stochasticity and escaping mass") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        auto m = ct::random_irreducible_chain(7, seed);
        auto sub = induced_chain(m, {0, 3, 5});
        for (int u = 0; u < sub.n(); ++u) {
            double sum = 0;
            for (const auto& [t, p] : sub.row(u)) sum += p;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    // A state that never reaches W raises the escaping-mass error.
    MarkovChain trap(3, {{{0, 1.0}}, {{0, 0.5}, {2, 0.5}}, {{2, 1.0}}});
    CHECK_THROWS_AS(induced_chain(trap, {0}), PreconditionError);
}

TEST_CASE("induced chain of a reversible chain is reversible on the trace") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = ct::random_reversible_chain(7, seed, true);
        auto pi = stationary(m);
        std::vector<int> W{0, 2, 4, 6};
        auto sub = induced_chain(m, W);
        double total = 0;
        for (int v : W) total += pi[v];
        for (size_t i = 0; i < W.size(); ++i)
            for (size_t j = 0; j < W.size(); ++j) {
                double lhs = pi[W[i]] / total * sub.prob((int)i, (int)j);
                double rhs = pi[W[j]] / total * sub.prob((int)j, (int)i);
                CHECK(std::abs(lhs - rhs) <= 1e-9);
            }
    }
}

TEST_CASE("watched transition probabilities shrink as the set grows") {
    // Enlarging the watched set absorbs the walk earlier, so for fixed v, w
    // the watched transition probability can only go down.
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        auto m = ct::random_reversible_chain(8, seed);
        std::vector<int> small{1, 4}, big{1, 2, 4, 6};
        auto sub_small = induced_chain(m, small);
        auto sub_big = induced_chain(m, big);
        CHECK(sub_big.prob(0, 2) <= sub_small.prob(0, 1) + 1e-9);
        CHECK(sub_big.prob(2, 0) <= sub_small.prob(1, 0) + 1e-9);
    }
    // Sharp case on the path: watching the middle vertex blocks the ends.
    auto ends = induced_chain(kP3, {0, 2});
    auto all = induced_chain(kP3, {0, 1, 2});
    CHECK(all.prob(0, 2) <= ends.prob(0, 1));
    CHECK(ends.prob(0, 1) == doctest::Approx(0.5));
    CHECK(all.prob(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("cover probability on tiny fixtures") {
    CHECK(cover_probability(kK2, StartRule::at(0), {0, 1}, 1, true) ==
          doctest::Approx(1.0));
    CHECK(cover_probability(kP3, StartRule::at(1), {0, 1, 2}, 2, true) ==
          doctest::Approx(0.0));
    CHECK(cover_probability(kP3, StartRule::at(1), {0, 1, 2}, 3, true) ==
          doctest::Approx(0.5));
    // Empty target set is vacuously covered.
    CHECK(cover_probability(kP3, StartRule::at(0), {}, 0, false) ==
          doctest::Approx(1.0));
}

TEST_CASE("cover probability equals rational DP and brute enumeration") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto g = ct::random_connected_graph(4, 0.5, seed);
        auto m = rw_from_graph(g);
        auto rc = RationalChain::rw_from_graph(g);
        std::vector<int> W{0, 1, 2, 3};
        auto brute = ct::cover_profile_brute(rc, 0, W, 6, true);
        for (int h = 0; h <= 6; ++h) {
            auto exact_rational = cover_probability_exact(rc, 0, W, h, true);
            CHECK(exact_rational == brute[h]);
            double dp = cover_probability(m, StartRule::at(0), W, h, true);
            CHECK(std::abs(dp - to_double(exact_rational)) <= 1e-12);
        }
    }
}

TEST_CASE("cover probability is nondecreasing in the horizon") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto g = ct::random_connected_graph(6, 0.3, seed);
        auto m = rw_from_graph(g);
        double prev = -1;
        for (int h = 0; h <= 12; ++h) {
            double p = cover_probability(m, StartRule::at(0), {1, 3, 5}, h, false);
            CHECK(p >= prev - 1e-12);
            prev = p;
        }
    }
}

TEST_CASE("cover budget errors") {
    auto g = ct::random_connected_graph(30, 0.2, 1);
    auto m = rw_from_graph(g);
    std::vector<int> big;
    for (int v = 0; v < 25; ++v) big.push_back(v);
    CHECK_THROWS_AS(cover_probability(m, StartRule::at(0), big, 5, true),
                    BudgetError);
}

TEST_CASE("hitting stats on the path") {
    // From a, target c, R = 2: forced to b, then 1/2 to c.
    auto rep = hitting_stats(kP3, 0, {2}, 2);
    CHECK(rep.before_return.front().second == doctest::Approx(0.5));
    // Source inside the target set: T_B = 0.
    auto inside = hitting_stats(kP3, 0, {0, 2}, 3);
    CHECK(inside.t_atoms[0] == doctest::Approx(1.0));
    CHECK(inside.t_tail == doctest::Approx(0.0));
    // K2: hit the other vertex in one step.
    auto k2 = hitting_stats(kK2, 0, {1}, 1);
    CHECK(k2.tplus_atoms[1] == doctest::Approx(1.0));
    CHECK(k2.before_return.front().second == doctest::Approx(1.0));
}

TEST_CASE("hitting distributions sum to one with the tail atom") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = ct::random_irreducible_chain(6, seed);
        auto rep = hitting_stats(m, 0, {2, 4}, 9);
        double total = rep.t_tail;
        for (double x : rep.t_atoms) total += x;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        double total_plus = rep.tplus_tail;
        for (double x : rep.tplus_atoms) total_plus += x;
        CHECK(total_plus == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("ball sets on the path center") {
    auto balls = ball_sets(kP3, 1, 1, 0.6);
    CHECK(balls.b == std::vector<int>{0, 2});
    CHECK(balls.bprime == std::vector<int>{0, 2});
    // Threshold at or above 1 empties both sets.
    auto none = ball_sets(kP3, 1, 1, 1.999999);
    CHECK(none.b.empty());
    CHECK(none.bprime.empty());
}

TEST_CASE("inner ball is contained in the outer ball") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto m = ct::random_irreducible_chain(3 + (int)(seed % 6), seed);
        auto balls = ball_sets(m, (int)(seed % m.n()), 4, 0.4);
        for (int w : balls.bprime)
            CHECK(std::binary_search(balls.b.begin(), balls.b.end(), w));
    }
}

TEST_CASE("recurrence classification") {
    // K2: guaranteed return at time 2.
    auto k2 = classify_recurrent(kK2, 0.1, 2);
    CHECK(k2 == std::vector<int>{0, 1});
    // P3 endpoint: return probability 1/2 within 2 steps -> transient.
    auto p3 = classify_recurrent(kP3, 0.1, 2);
    CHECK(std::find(p3.begin(), p3.end(), 0) == p3.end());
    // Nearly-sure recurrence at long horizons on a connected walk.
    auto all = classify_recurrent(kP3, 0.999, 4000);
    CHECK(all.size() == 3);
}

TEST_CASE("return CDF matches direct hitting computation") {
    auto cdf = return_time_cdf(kP3, 0, 1000000);
    // Return to an endpoint of P3: T+ = 2 w.p. 1/2, T+ = 4 w.p. 1/4, ...
    CHECK(cdf_at(cdf, 2) == doctest::Approx(0.5));
    CHECK(cdf_at(cdf, 4) == doctest::Approx(0.75));
    CHECK(cdf_at(cdf, 1) == doctest::Approx(0.0));
    CHECK(cdf_at(cdf, 1000000) == doctest::Approx(1.0).epsilon(1e-9));
    // The sweep exits once the alive mass has decayed, well before 10^6.
    CHECK(cdf.size() < 500);
}

TEST_CASE("return inequality report on K2") {
    auto rep = check_return_inequalities(kK2, 0, 1, 1, 1);
    CHECK(rep.lhs_af == doctest::Approx(0.0));
    CHECK(rep.rhs_af == doctest::Approx(2.0));
    CHECK(rep.pass_af);
    CHECK(rep.pass_mono);
}

TEST_CASE("return inequalities over random reversible chains") {
    SplitStream rng(2024, 0);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto m = ct::random_reversible_chain(3 + (int)(seed % 6), seed,
                                             seed % 3 == 0);
        const int n = m.n();
        int v = (int)rng.next_below(n);
        int w = (int)rng.next_below(n);
        int t = (int)rng.next_below(8);
        int s = (int)rng.next_below(8);
        auto rep = check_return_inequalities(m, v, w, t, s);
        CHECK(rep.pass_af);
        CHECK(rep.pass_mono);
    }
}

TEST_CASE("non-reversible chain rejected by the inequality checker") {
    MarkovChain biased(3, {{{1, 0.9}, {2, 0.1}},
                           {{2, 0.9}, {0, 0.1}},
                           {{0, 0.9}, {1, 0.1}}});
    CHECK_THROWS_AS(check_return_inequalities(biased, 0, 1, 1, 1),
                    PreconditionError);
}

TEST_CASE("spectra of small walks") {
    auto k4 = spectral_gap(kK4);
    CHECK(k4.eigenvalues[0] == doctest::Approx(1.0));
    for (int i = 1; i < 4; ++i)
        CHECK(k4.eigenvalues[i] == doctest::Approx(-1.0 / 3).epsilon(1e-9));
    CHECK(is_eps_expander(k4, 0.5));
    CHECK(!is_eps_expander(k4, 0.67)); // gap 1/3 certifies only eps < 2/3

    auto p3 = spectral_gap(kP3);
    CHECK(p3.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(p3.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(p3.eigenvalues[2] == doctest::Approx(-1.0));
    CHECK(!is_eps_expander(p3, 0.01)); // bipartite walk

    auto k2 = spectral_gap(kK2);
    CHECK(k2.gap_quantity == doctest::Approx(1.0));
    CHECK(!is_eps_expander(k2, 0.1));
}

TEST_CASE("expander test is strict at the boundary") {
    SpectralReport synthetic;
    synthetic.eigenvalues = {1.0, 0.5, -0.25};
    synthetic.gap_quantity = 0.5;
    CHECK(is_eps_expander(synthetic, 0.49));
    CHECK(!is_eps_expander(synthetic, 0.5)); // 0.5 < 1 - 0.5 is false
}

TEST_CASE("eigenvalues of reversible chains stay in [-1, 1]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto m = ct::random_reversible_chain(8, seed, seed % 2 == 0);
        auto rep = spectral_gap(m);
        CHECK(rep.eigenvalues.front() == doctest::Approx(1.0).epsilon(1e-9));
        for (double ev : rep.eigenvalues) {
            CHECK(ev <= 1.0 + 1e-9);
            CHECK(ev >= -1.0 - 1e-9);
        }
    }
}

TEST_CASE("expander bounds on K4") {
    // eps just below the certifiable 2/3 keeps the closed-form values.
    const double eps = 2.0 / 3 - 1e-9;
    auto rep = expander_bounds(kK4, {1}, 2, eps);
    CHECK(rep.pi_s == doctest::Approx(0.25));
    CHECK(rep.max_deviation == doctest::Approx(1.0 / 12));
    CHECK(rep.pass_tail);
    CHECK(rep.pass_hitting);
    // t = 0: the hitting bound is the vacuous 1.
    auto zero = expander_bounds(kK4, {1}, 0, eps);
    CHECK(zero.hitting_bound == doctest::Approx(1.0));
    CHECK(zero.pass_hitting);
    CHECK_THROWS_AS(expander_bounds(kP3, {0}, 3, 0.5), PreconditionError);
}

TEST_CASE("expander bounds dominate exact values on a random expander") {
    auto g = ct::random_connected_graph(50, 0.12, 7);
    auto m = rw_from_graph(g);
    auto spec = spectral_gap(m);
    const double eps = 0.99 * (1.0 - spec.gap_quantity);
    REQUIRE(eps > 0);
    std::vector<int> S{0, 1, 2, 3, 4};
    // The mixing bound holds at every horizon.
    for (long long t : {1, 2, 4, 8, 16, 32, 60})
        CHECK(expander_bounds(m, S, t, eps).pass_tail);
    // The hitting bound is a windowed argument with window ~ 2 ln n / eps;
    // below one window the exact tail can sit at 1 while the smooth bound
    // dips under it, so it is checked from one window onward.
    const long long window =
        (long long)std::ceil(2.0 * std::log((double)g.n()) / eps);
    for (long long t : {window, 2 * window, 3 * window, 6 * window}) {
        auto rep = expander_bounds(m, S, t, eps);
        CHECK(rep.pass_tail);
        CHECK(rep.pass_hitting);
    }
}

TEST_CASE("heavy witness splits") {
    // No vertex above the cutoff: B and W empty.
    auto none = heavy_witness(Graph::path(6), 50, 1);
    CHECK(none.b.empty());
    CHECK(none.witness.empty());
    CHECK(none.half_guarantee);

    // Star with a small cutoff: the horizon rounds down to zero.
    CHECK_THROWS_AS(heavy_witness(Graph::star(5), 4, 1), PreconditionError);

    // Star scaled so the horizon is positive: every step from the center
    // lands on a leaf, so the center cannot be a witness.
    auto star = heavy_witness(Graph::star(50), 40, 1);
    CHECK(star.horizon == 1);
    CHECK(star.b == std::vector<int>{0});
    CHECK(star.witness.empty());
    CHECK(star.hit_probs.front().second == doctest::Approx(1.0));
    CHECK(!star.half_guarantee);
}

TEST_CASE("degree-split mass inequality on random graphs") {
    // sum_{v in B} p^t(v, S) <= (small/big) |S| for walk chains.
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        auto g = ct::random_connected_graph(18, 0.25, seed);
        auto m = rw_from_graph(g);
        const int big = 5, small = 3;
        std::vector<int> b, s;
        for (int v = 0; v < g.n(); ++v) {
            if (g.degree(v) > big) b.push_back(v);
            if (g.degree(v) <= small) s.push_back(v);
        }
        const double rhs = (double)small / big * (double)s.size();
        for (long long t : {0, 1, 2, 3, 5, 8, 13}) {
            double lhs = 0;
            for (int v : b) {
                auto p = transition_power(m, v, t);
                for (int x : s) lhs += p[x];
            }
            CHECK(lhs <= rhs + 1e-9);
        }
    }
}

TEST_CASE("degree-ordered ball symmetry on walk chains") {
    // If deg(w) >= deg(v) and v in B'_w(R) then w in B'_v(R).
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        auto g = ct::random_connected_graph(10 + (int)(seed % 8), 0.25, seed);
        auto m = rw_from_graph(g);
        const long long R = 3 + (long long)(seed % 5);
        const double delta = seed % 2 == 0 ? 0.3 : 0.7;
        std::vector<BallSets> balls;
        for (int v = 0; v < g.n(); ++v)
            balls.push_back(ball_sets(m, v, R, delta));
        for (int w = 0; w < g.n(); ++w)
            for (int v : balls[w].bprime)
                if (g.degree(w) >= g.degree(v)) {
                    const auto& bv = balls[v].bprime;
                    CHECK(std::binary_search(bv.begin(), bv.end(), w));
                }
    }
}
