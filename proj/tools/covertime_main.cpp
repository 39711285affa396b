// covertime: exact and Monte Carlo cover/hitting analysis of finite Markov
// chains, martingale certificates, and safe-partition constructions.
//
// JSON goes to stdout, a human summary to stderr. Exit codes: 0 ok, 2 usage,
// 3 budget, 4 precondition, 5 internal verification failure.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "covertime/errors.hpp"
#include "covertime/exact.hpp"
#include "covertime/json_io.hpp"
#include "covertime/martingale.hpp"
#include "covertime/mc.hpp"
#include "covertime/partition.hpp"
#include "covertime/rational.hpp"
#include "covertime/rng.hpp"

namespace {

using namespace covertime;

constexpr const char* kVersion = "covertime 0.1.0";

struct Io {
    bool quiet = false;
    json manifest;
    std::chrono::steady_clock::time_point t0 =
        std::chrono::steady_clock::now();

    void begin(const std::string& command, const json& params,
               const std::vector<std::string>& inputs) {
        manifest["command"] = command;
        manifest["parameters"] = params;
        manifest["version"] = kVersion;
        json digests = json::object();
        for (const auto& path : inputs) digests[path] = file_digest(path);
        manifest["input_digests"] = digests;
    }

    void emit(const json& result, const std::string& summary) {
        manifest["duration_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();
        json out{{"manifest", manifest}, {"result", result}};
        std::cout << out.dump(2) << std::endl;
        if (!quiet) std::cerr << summary << std::endl;
    }
};

MarkovChain load_model(const std::string& graph_path,
                       const std::string& chain_path,
                       std::optional<Graph>* graph_out) {
    if (!graph_path.empty() && !chain_path.empty())
        throw FileFormatError("pass either --graph or --chain, not both");
    if (!graph_path.empty()) {
        Graph g = load_graph(graph_path);
        if (graph_out) *graph_out = g;
        return rw_from_graph(g);
    }
    if (!chain_path.empty()) return load_chain(chain_path);
    throw FileFormatError("need --graph or --chain");
}

std::vector<int> parse_targets(const std::string& spec, int n) {
    std::vector<int> out;
    if (spec == "all") {
        for (int v = 0; v < n; ++v) out.push_back(v);
        return out;
    }
    std::string token;
    std::istringstream in(spec);
    while (std::getline(in, token, ','))
        if (!token.empty()) out.push_back(std::stoi(token));
    return out;
}

int threads_default() {
    if (const char* env = std::getenv("COVERTIME_THREADS"))
        return std::max(1, std::atoi(env));
    return 1;
}

// ---------------------------------------------------------------------------

int cmd_cover(Io& io, const std::string& graph_path,
              const std::string& chain_path, int start,
              const std::string& target_spec, long long horizon, bool exact,
              long long mc_reps, bool include_start, std::uint64_t seed,
              int threads) {
    auto m = load_model(graph_path, chain_path, nullptr);
    auto W = parse_targets(target_spec, m.n());
    json result;
    std::ostringstream summary;
    if (exact) {
        double p = cover_probability(m, StartRule::at(start), W, horizon,
                                     include_start);
        result = json{{"mode", "exact"}, {"probability", p}};
        summary << "cover probability " << p;
    } else {
        auto est = estimate_cover(m, StartRule::at(start), W, horizon, mc_reps,
                                  seed, include_start, threads);
        result = json{{"mode", "mc"}, {"estimate", to_json(est)}};
        summary << "cover estimate " << est.p_hat << " [" << est.lo << ", "
                << est.hi << "] (" << est.reps << " reps)";
    }
    io.emit(result, summary.str());
    return 0;
}

int cmd_spectral(Io& io, const std::string& graph_path,
                 const std::string& chain_path, double eps,
                 const std::string& target_spec, long long t_max) {
    auto m = load_model(graph_path, chain_path, nullptr);
    auto report = spectral_gap(m);
    json result{{"spectrum", to_json(report)}};
    const double max_eps = 1.0 - report.gap_quantity;
    result["max_certifiable_eps"] = max_eps;
    if (eps > 0) result["is_expander"] = is_eps_expander(report, eps);
    if (!target_spec.empty() && eps > 0 && is_eps_expander(report, eps)) {
        auto S = parse_targets(target_spec, m.n());
        json rows = json::array();
        for (long long t = 0; t <= t_max; ++t)
            rows.push_back(to_json(expander_bounds(m, S, t, eps)));
        result["bound_table"] = rows;
    }
    std::ostringstream summary;
    summary << "gap quantity " << report.gap_quantity << ", eps-expander up to "
            << max_eps;
    io.emit(result, summary.str());
    return 0;
}

int cmd_params(Io& io, double c, double beta, double lambda) {
    auto params = MartingaleParams::paper(c, beta, lambda);
    io.emit(to_json(params),
            "K = " + std::to_string(params.k) +
                ", log p = " + std::to_string(params.log_p));
    return 0;
}

int cmd_martingale(Io& io, const std::string& graph_path,
                   const std::string& chain_path,
                   const std::string& target_spec, double K, int start,
                   long long horizon, long long walks, std::uint64_t seed) {
    auto m = load_model(graph_path, chain_path, nullptr);
    auto W = parse_targets(target_spec, m.n());
    std::vector<WalkTrace> traces;
    long long step_checks = 0, step_failures = 0;
    double max_increment = 0, increment_bound = 0;
    json first_trace;
    for (long long i = 0; i < walks; ++i) {
        auto trace = simulate_walk(m, StartRule::at(start), horizon,
                                   SplitStream::mix(seed + (std::uint64_t)i));
        auto mt = build_xi(m, trace, W, K);
        max_increment = std::max(max_increment, mt.max_abs_increment);
        increment_bound = mt.increment_bound;
        if (i == 0) first_trace = to_json(mt);
        traces.push_back(std::move(trace));
    }
    // Martingale one-step checks along the first walk's prefixes.
    if (!traces.empty()) {
        const auto& states = traces.front().states;
        for (size_t len = 1; len < states.size(); ++len) {
            std::vector<int> history(states.begin(), states.begin() + len);
            auto check = check_martingale_step(m, history, W, K);
            ++step_checks;
            if (!check.pass) ++step_failures;
        }
    }
    auto conc = concentration_report(m, traces, W, K, {0.5, 1.0, 2.0});
    json result{{"walks", walks},
                {"first_trace", first_trace},
                {"step_checks", step_checks},
                {"step_failures", step_failures},
                {"max_abs_increment", max_increment},
                {"increment_bound", increment_bound},
                {"concentration", to_json(conc)}};
    std::ostringstream summary;
    summary << walks << " walks, " << step_failures << "/" << step_checks
            << " step-check failures, max increment " << max_increment
            << " <= " << increment_bound;
    io.emit(result, summary.str());
    return 0;
}

int cmd_partition(Io& io, const std::string& mode,
                  const std::string& graph_path,
                  const std::string& chain_path,
                  const std::string& partition_path, double delta, int root,
                  long long R, double theta, double eps, int cutoff, double C,
                  int k_exp, std::uint64_t seed, bool exact_checks,
                  long long mc_reps, double delta_fun, double corp_theta,
                  const std::string& out_path) {
    json result;
    std::ostringstream summary;
    if (mode == "verify") {
        std::ifstream in(partition_path);
        if (!in)
            throw FileFormatError("cannot open partition: " + partition_path);
        json j = json::parse(in, nullptr, true, true);
        auto p = partition_from_json(j);
        auto m = load_model(graph_path, chain_path, nullptr);
        auto rep = verify_corp(m, p, C, corp_theta, delta_fun);
        result = to_json(rep);
        summary << "verify: " << (rep.pass ? "pass" : "fail") << " (max induced "
                << rep.max_induced << ")";
        io.emit(result, summary.str());
        return rep.pass ? 0 : 0; // verdicts are data, not an error
    }

    std::optional<Graph> graph;
    load_model(graph_path, "", &graph); // partitions are defined on graphs
    const Graph& g = *graph;
    Partition p;
    if (mode == "tree") {
        p = tree_safe_partition(g, delta, root);
    } else if (mode == "recurrent") {
        p = recurrent_partition(g, delta, R, theta);
    } else if (mode == "expander") {
        p = expander_partition(g, eps, delta, cutoff, seed);
    } else if (mode == "generic") {
        GenericDiagnostics diag;
        p = generic_partition(g, C, delta, k_exp, cutoff, seed, exact_checks,
                              mc_reps, &diag);
        result["diagnostics"] = to_json(diag);
    } else {
        throw FileFormatError("unknown partition mode: " + mode);
    }
    result["partition"] = to_json(p);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << to_json(p).dump(2) << std::endl;
        result["written_to"] = out_path;
    }
    summary << mode << " partition: " << p.blocks.size() << " blocks, |V0| = "
            << p.v0.size();
    io.emit(result, summary.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cover-time analysis toolkit"};
    app.require_subcommand(1);
    Io io;

    std::string graph_path, chain_path, target_spec = "all";
    std::string partition_path, out_path, mode;
    int start = 0, root = 0, cutoff = 1 << 30, k_exp = 5, threads = threads_default();
    long long horizon = 1, mc_reps = 100000, walks = 1000, R = 1, t_max = -1;
    double delta = 0.5, theta = 0.01, eps = 0, C = 1, beta = 0.1, lambda = 1,
           K = 1, delta_fun = 0.5, corp_theta = 0.01;
    bool exact = false, include_start = false, exact_checks = false;
    std::uint64_t seed = 0;
    long long reps_flag = -1;

    auto add_model_flags = [&](CLI::App* cmd) {
        cmd->add_option("--graph", graph_path, "graph file (edge list)");
        cmd->add_option("--chain", chain_path, "chain file (sparse triplets)");
        cmd->add_flag("--quiet", io.quiet, "suppress the stderr summary");
        cmd->add_option("--threads", threads, "worker threads (results do not depend on it)");
    };

    auto* cover = app.add_subcommand("cover", "cover probability of a target set");
    add_model_flags(cover);
    cover->add_option("--start", start);
    cover->add_option("--target", target_spec, "comma list or 'all'");
    cover->add_option("--horizon", horizon)->required();
    cover->add_flag("--exact", exact, "exact DP instead of Monte Carlo");
    cover->add_option("--mc", reps_flag, "Monte Carlo replication count");
    cover->add_flag("--include-start", include_start);
    cover->add_option("--seed", seed);

    auto* spectral = app.add_subcommand("spectral", "spectrum and expander bounds");
    add_model_flags(spectral);
    spectral->add_option("--eps", eps, "expander parameter to certify");
    spectral->add_option("--target", target_spec, "target set for bound tables")->expected(1);
    spectral->add_option("--t-max", t_max, "bound table horizon");

    auto* params = app.add_subcommand("params", "nominal parameter pack in log space");
    params->add_option("--C", C)->required();
    params->add_option("--beta", beta)->required();
    params->add_option("--lambda", lambda);
    params->add_flag("--quiet", io.quiet);

    auto* mart = app.add_subcommand("martingale", "walk certificates and concentration");
    add_model_flags(mart);
    mart->add_option("--W", target_spec, "target set (comma list)")->required();
    mart->add_option("--K", K);
    mart->add_option("--start", start);
    mart->add_option("--horizon", horizon);
    mart->add_option("--walks", walks);
    mart->add_option("--seed", seed);

    auto* part = app.add_subcommand("partition", "partition constructions and verification");
    add_model_flags(part);
    part->add_option("mode", mode, "tree|recurrent|expander|generic|verify")->required();
    part->add_option("--partition", partition_path, "partition file for verify");
    part->add_option("--delta", delta);
    part->add_option("--root", root);
    part->add_option("--R", R);
    part->add_option("--theta", theta, "small-class threshold (fraction of n)");
    part->add_option("--eps", eps);
    part->add_option("--cutoff", cutoff, "degree cutoff");
    part->add_option("--C", C);
    part->add_option("--k-exp", k_exp);
    part->add_option("--seed", seed);
    part->add_flag("--exact-checks", exact_checks);
    part->add_option("--mc-reps", mc_reps);
    part->add_option("--delta-fun", delta_fun, "threshold for the induced condition");
    part->add_option("--corp-theta", corp_theta, "theta for verification");
    part->add_option("--out", out_path, "write the partition json here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        json flag_params;
        for (const auto* opt_app : app.get_subcommands()) {
            for (const auto* opt : opt_app->get_options()) {
                if (opt->count() > 0 && !opt->get_name().empty())
                    flag_params[opt->get_name()] = opt->results().size() == 1
                                                       ? json(opt->results()[0])
                                                       : json(opt->results());
            }
        }
        flag_params["seed"] = seed;
        std::vector<std::string> inputs;
        if (!graph_path.empty()) inputs.push_back(graph_path);
        if (!chain_path.empty()) inputs.push_back(chain_path);
        if (!partition_path.empty()) inputs.push_back(partition_path);

        if (cover->parsed()) {
            if (!exact && reps_flag < 0)
                throw FileFormatError("cover: pass --exact or --mc <reps>");
            io.begin("cover", flag_params, inputs);
            return cmd_cover(io, graph_path, chain_path, start, target_spec,
                             horizon, exact, reps_flag < 0 ? mc_reps : reps_flag,
                             include_start, seed, threads);
        }
        if (spectral->parsed()) {
            io.begin("spectral", flag_params, inputs);
            return cmd_spectral(io, graph_path, chain_path, eps,
                                t_max >= 0 ? target_spec : "", t_max);
        }
        if (params->parsed()) {
            io.begin("params", flag_params, {});
            return cmd_params(io, C, beta, lambda);
        }
        if (mart->parsed()) {
            io.begin("martingale", flag_params, inputs);
            return cmd_martingale(io, graph_path, chain_path, target_spec, K,
                                  start, horizon, walks, seed);
        }
        if (part->parsed()) {
            io.begin("partition", flag_params, inputs);
            return cmd_partition(io, mode, graph_path, chain_path,
                                 partition_path, delta, root, R, theta, eps,
                                 cutoff, C, k_exp, seed, exact_checks, mc_reps,
                                 delta_fun, corp_theta, out_path);
        }
        return 2;
    } catch (const FileFormatError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    } catch (const BudgetError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 3;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 4;
    } catch (const InternalError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 5;
    }
}
