#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "covertime/chain.hpp"
#include "covertime/errors.hpp"
#include "covertime/graph.hpp"
#include "covertime/mc.hpp"
#include "covertime/rational.hpp"

#include "oracles.hpp"
#include "support.hpp"

using namespace covertime;
namespace ct = covertime::testing;

TEST_CASE("graph invariants") {
    CHECK_THROWS_AS(Graph(3, {{0, 0}}), PreconditionError);
    CHECK_THROWS_AS(Graph(3, {{0, 1}, {1, 0}}), PreconditionError);
    CHECK_THROWS_AS(Graph(3, {{0, 5}}), PreconditionError);
    Graph p3 = Graph::path(3);
    CHECK(p3.degree(1) == 2);
    CHECK(p3.connected());
    CHECK(p3.is_tree());
    CHECK(!Graph::cycle(4).is_tree());
    CHECK(Graph::star(5).degree(0) == 5);
    CHECK(Graph::complete(4).edge_count() == 6);
    CHECK(p3.distance(0, 2) == 2);
}

TEST_CASE("graph file round trip and comments") {
    const char* path = "p3_test.edges";
    {
        std::ofstream out(path);
        out << "# a comment\n3 2\n0 1\n# another\n1 2\n";
    }
    Graph g = load_graph(path);
    CHECK(g.n() == 3);
    CHECK(g.edge_count() == 2);
    std::remove(path);
    CHECK_THROWS_AS(load_graph("missing_file.edges"), FileFormatError);
}

TEST_CASE("random walk chain on a path") {
    auto m = rw_from_graph(Graph::path(3));
    CHECK(m.prob(0, 1) == doctest::Approx(1.0));
    CHECK(m.prob(1, 0) == doctest::Approx(0.5));
    const auto& pi = *m.stationary_hint();
    CHECK(pi[0] == doctest::Approx(0.25));
    CHECK(pi[1] == doctest::Approx(0.5));
    CHECK(pi[2] == doctest::Approx(0.25));
    CHECK(m.reversible_hint() == true);
}

TEST_CASE("triangle and K2 walks") {
    auto k3 = rw_from_graph(Graph::complete(3));
    for (double x : *k3.stationary_hint()) CHECK(x == doctest::Approx(1.0 / 3));
    auto k2 = rw_from_graph(Graph::complete(2));
    CHECK(k2.prob(0, 1) == 1.0);
    CHECK(k2.prob(1, 0) == 1.0);
    CHECK((*k2.stationary_hint())[0] == doctest::Approx(0.5));
}

TEST_CASE("isolated vertex rejected") {
    Graph g(3, {{0, 1}});
    CHECK_THROWS_AS(rw_from_graph(g), PreconditionError);
}

TEST_CASE("chain constructor validation") {
    // Row sums off by more than 1e-9 must throw.
    CHECK_THROWS_AS(MarkovChain(2, {{{0, 0.5}, {1, 0.4}}, {{0, 1.0}}}),
                    PreconditionError);
    CHECK_THROWS_AS(MarkovChain(2, {{{0, -0.1}, {1, 1.1}}, {{0, 1.0}}}),
                    PreconditionError);
    // Self-loops are fine in chains.
    MarkovChain loop(1, {{{0, 1.0}}});
    CHECK(loop.prob(0, 0) == 1.0);
    // Bad stationary hint rejected.
    CHECK_THROWS_AS(MarkovChain(2, {{{1, 1.0}}, {{0, 1.0}}},
                                std::vector<double>{0.9, 0.1}),
                    PreconditionError);
}

TEST_CASE("stationary solves the path walk to the closed form") {
    auto m = rw_from_graph(Graph::path(3));
    auto pi = stationary(m);
    CHECK(pi[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(pi[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pi[2] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("stationary on graphs matches closed form within 1e-12") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = ct::random_connected_graph(4 + (int)(seed % 9), 0.3, seed);
        auto m = rw_from_graph(g);
        auto pi = stationary(m);
        for (int v = 0; v < g.n(); ++v)
            CHECK(std::abs(pi[v] - g.degree(v) / (2.0 * g.edge_count())) <=
                  1e-12);
    }
}

TEST_CASE("doubly stochastic chain has uniform stationary") {
    MarkovChain m(3, {{{0, 0.2}, {1, 0.3}, {2, 0.5}},
                      {{0, 0.5}, {1, 0.2}, {2, 0.3}},
                      {{0, 0.3}, {1, 0.5}, {2, 0.2}}});
    auto pi = stationary(m);
    for (double x : pi) CHECK(x == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("stationary matches the power-iteration oracle") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = ct::random_irreducible_chain(6, seed);
        auto pi = stationary(m);
        auto oracle = ct::stationary_power_oracle(m);
        for (int v = 0; v < m.n(); ++v)
            CHECK(std::abs(pi[v] - oracle[v]) <= 1e-9);
    }
}

TEST_CASE("reducible chain rejected") {
    MarkovChain m(2, {{{0, 1.0}}, {{1, 1.0}}});
    CHECK_THROWS_AS(stationary(m), PreconditionError);
}

TEST_CASE("reversibility checks") {
    CHECK(is_reversible(rw_from_graph(Graph::path(4))));
    CHECK(is_reversible(rw_from_graph(Graph::complete(2))));
    // Clockwise-biased cycle is not reversible.
    MarkovChain biased(3, {{{1, 0.9}, {2, 0.1}},
                           {{2, 0.9}, {0, 0.1}},
                           {{0, 0.9}, {1, 0.1}}});
    CHECK(!is_reversible(biased));
}

TEST_CASE("path reversibility products") {
    auto m = rw_from_graph(Graph::path(3));
    auto check = check_path_reversibility(m, {0, 1, 2});
    CHECK(check.lhs == doctest::Approx(0.125));
    CHECK(check.rhs == doctest::Approx(0.125));
    CHECK(check.pass);

    auto trivial = check_path_reversibility(m, {1});
    CHECK(trivial.lhs == doctest::Approx(0.5));
    CHECK(trivial.rhs == doctest::Approx(0.5));
    CHECK(trivial.pass);
}

TEST_CASE("path reversibility property over sampled paths") {
    long long paths_checked = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto g = ct::random_connected_graph(3 + (int)(seed % 8), 0.4, seed);
        auto m = rw_from_graph(g);
        for (std::uint64_t rep = 0; rep < 25; ++rep) {
            auto trace = simulate_walk(m, StartRule::at((int)(seed % g.n())),
                                       6, seed * 100 + rep);
            auto check = check_path_reversibility(m, trace.states);
            CHECK(check.pass);
            ++paths_checked;
        }
    }
    CHECK(paths_checked >= 1000);
}

TEST_CASE("trace validation") {
    auto m = rw_from_graph(Graph::path(3));
    CHECK_THROWS_AS(make_trace(m, {0, 2}, 0), PreconditionError);
    auto ok = make_trace(m, {0, 1, 2, 1}, 7);
    CHECK(ok.seed == 7);
    CHECK(ok.chain_id == m.digest());
}

TEST_CASE("start rules") {
    CHECK_THROWS_AS(StartRule::from_distribution({0.5, 0.4}),
                    PreconditionError);
    auto rule = StartRule::from_distribution({0.25, 0.75});
    auto vec = rule.as_vector(2);
    CHECK(vec[1] == doctest::Approx(0.75));
    CHECK(StartRule::at(1).as_vector(3)[1] == 1.0);
}

TEST_CASE("chain file round trip") {
    auto m = rw_from_graph(Graph::path(3));
    const char* path = "p3_test.chain";
    save_chain(m, path);
    auto loaded = load_chain(path);
    CHECK(loaded.n() == 3);
    CHECK(loaded.prob(1, 2) == doctest::Approx(0.5));
    std::remove(path);
    {
        std::ofstream bad("bad_test.chain");
        bad << "2\n0 0 0.5\n1 0 1.0\n"; // row 0 does not sum to 1
    }
    CHECK_THROWS_AS(load_chain("bad_test.chain"), FileFormatError);
    std::remove("bad_test.chain");
}

TEST_CASE("rational walk chain matches float") {
    auto g = Graph::path(3);
    auto rc = RationalChain::rw_from_graph(g);
    CHECK(rc.row(1).size() == 2);
    CHECK(rc.row(1)[0].second == Rational(1, 2));
    auto pi = RationalChain::rw_stationary(g);
    CHECK(pi[1] == Rational(1, 2));
    CHECK(to_double(pi[0]) == doctest::Approx(0.25));
}
