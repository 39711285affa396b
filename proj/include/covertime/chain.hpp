#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "covertime/graph.hpp"

namespace covertime {

/// One sparse row: (target, probability) pairs sorted by target.
using Row = std::vector<std::pair<int, double>>;

/// Finite Markov chain with sparse row-stochastic transition matrix.
/// Self-loops are allowed (induced chains produce them). Rows must sum to 1
/// within 1e-9; a provided stationary vector must satisfy pi*P = pi within
/// 1e-9 and sum to 1 within 1e-12. Immutable after construction.
class MarkovChain {
  public:
    MarkovChain(int n, std::vector<Row> rows,
                std::optional<std::vector<double>> stationary = std::nullopt,
                std::optional<bool> reversible = std::nullopt);

    int n() const { return n_; }
    const Row& row(int v) const { return rows_[v]; }
    /// Transition probability, 0 when the entry is absent.
    double prob(int u, int v) const;
    /// Number of positive entries in row v.
    int support_size(int v) const { return static_cast<int>(rows_[v].size()); }

    const std::optional<std::vector<double>>& stationary_hint() const {
        return stationary_;
    }
    std::optional<bool> reversible_hint() const { return reversible_; }

    /// Structural fingerprint used to tie walk traces to their chain.
    std::uint64_t digest() const { return digest_; }

  private:
    int n_;
    std::vector<Row> rows_;
    std::optional<std::vector<double>> stationary_;
    std::optional<bool> reversible_;
    std::uint64_t digest_;
};

/// How X_0 is chosen: a fixed vertex or a fixed distribution.
class StartRule {
  public:
    static StartRule at(int v);
    /// Distribution entries must be in [0,1] and sum to 1 within 1e-12.
    static StartRule from_distribution(std::vector<double> p);

    bool fixed() const { return fixed_; }
    int vertex() const;
    const std::vector<double>& distribution() const;
    /// Dense start vector of length n.
    std::vector<double> as_vector(int n) const;

  private:
    StartRule() = default;
    bool fixed_ = true;
    int vertex_ = 0;
    std::vector<double> dist_;
};

/// A realized trajectory X_0..X_s with seed provenance.
struct WalkTrace {
    std::vector<int> states;
    std::uint64_t seed = 0;
    std::uint64_t chain_id = 0;
};

/// Validates that every consecutive pair has positive transition probability.
WalkTrace make_trace(const MarkovChain& m, std::vector<int> states,
                     std::uint64_t seed);

/// Random walk on a simple graph: uniform over neighbors, with the closed-form
/// stationary vector d_v / (2|E|) attached and the reversibility certificate
/// set. Isolated vertices are rejected.
MarkovChain rw_from_graph(const Graph& g);

/// Solves for the stationary distribution of an irreducible chain.
/// Direct dense solve for n <= 2000, power iteration above.
std::vector<double> stationary(const MarkovChain& m, double tol = 1e-12);

/// Detailed balance check pi_u p(u,v) = pi_v p(v,u) for all pairs.
bool is_reversible(const MarkovChain& m, double tol = 1e-9);

struct PathReversibilityCheck {
    double lhs = 0;
    double rhs = 0;
    bool pass = false;
};

/// Compares the stationary-weighted path product against its reversal.
PathReversibilityCheck check_path_reversibility(const MarkovChain& m,
                                                const std::vector<int>& path,
                                                double tol = 1e-9);

/// True iff the positive-probability digraph is strongly connected.
bool is_irreducible(const MarkovChain& m);

/// Text format: first non-comment line "n", then lines "u v p" for the
/// nonzero entries. The loader validates row sums.
MarkovChain load_chain(const std::string& path);
void save_chain(const MarkovChain& m, const std::string& path);

} // namespace covertime
