#include "covertime/json_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "covertime/errors.hpp"

namespace covertime {

json to_json(const Estimate& e) {
    return json{{"p_hat", e.p_hat},
                {"reps", e.reps},
                {"ci99", {e.lo, e.hi}},
                {"seed", e.seed}};
}

json to_json(const HittingReport& r) {
    return json{{"source", r.source},
                {"targets", r.targets},
                {"horizon", r.horizon},
                {"t_atoms", r.t_atoms},
                {"t_tail", r.t_tail},
                {"tplus_atoms", r.tplus_atoms},
                {"tplus_tail", r.tplus_tail},
                {"before_return", r.before_return}};
}

json to_json(const BallSets& b) {
    return json{{"center", b.center},
                {"radius", b.radius},
                {"delta", b.delta},
                {"b", b.b},
                {"b_prime", b.bprime}};
}

json to_json(const SpectralReport& r) {
    return json{{"eigenvalues", r.eigenvalues}, {"gap", r.gap_quantity}};
}

json to_json(const ExpanderBoundsReport& r) {
    return json{{"t", r.t},
                {"eps", r.eps},
                {"pi_s", r.pi_s},
                {"max_deviation", r.max_deviation},
                {"max_deviation_state", r.max_deviation_state},
                {"tail_bound_at_max", r.tail_bound_at_max},
                {"pass_tail", r.pass_tail},
                {"exact_hitting_tail", r.exact_hitting_tail},
                {"hitting_bound", r.hitting_bound},
                {"pass_hitting", r.pass_hitting}};
}

json to_json(const HeavyWitnessReport& r) {
    return json{{"b", r.b},
                {"s", r.s},
                {"horizon", r.horizon},
                {"witness", r.witness},
                {"hit_probs", r.hit_probs},
                {"half_guarantee", r.half_guarantee}};
}

json to_json(const MartingaleParams& p) {
    json out{{"C", p.c},
             {"beta", p.beta},
             {"lambda", p.lambda},
             {"K", p.k},
             {"log_l", p.log_l},
             {"log_p", p.log_p},
             {"log_eps", p.log_eps},
             {"log_delta", p.log_delta},
             {"log_theta", p.log_theta},
             {"log_d", p.log_d},
             {"log_rho", p.log_rho},
             {"log_degree_cutoff", p.log_degree_cutoff}};
    if (p.k <= 500) {
        out["l"] = std::exp(p.log_l);
        out["p"] = std::exp(p.log_p);
        out["eps"] = std::exp(p.log_eps);
        out["delta"] = std::exp(p.log_delta);
        out["theta"] = std::exp(p.log_theta);
    }
    return out;
}

json to_json(const MartingaleTrace& t) {
    return json{{"w", t.w},
                {"m", t.m},
                {"lambda", t.lambda},
                {"k", t.k},
                {"horizon", t.horizon},
                {"xi", t.xi},
                {"r", t.r},
                {"hit", t.hit},
                {"q", t.q},
                {"r_within_horizon", t.rv},
                {"q_star", t.qstar},
                {"frozen", t.frozen},
                {"all_frozen", t.all_frozen},
                {"covered", t.covered},
                {"increment_bound", t.increment_bound},
                {"max_abs_increment", t.max_abs_increment}};
}

json to_json(const AssocReport& r) {
    return json{{"prob_all_q", r.prob_all_q},
                {"prob_all_q_star", r.prob_all_q_star},
                {"unresolved_mass", r.unresolved_mass},
                {"p_pow_i", r.p_pow_i},
                {"pass", r.pass}};
}

json to_json(const ConcentrationReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back(json{{"theta", row.theta},
                            {"azuma_two_sided", row.azuma_two_sided},
                            {"alltime_bound", row.alltime_bound},
                            {"frequency", row.frequency},
                            {"stderr", row.stderr_est},
                            {"pass", row.pass}});
    return json{{"m", r.m},
                {"lambda", r.lambda},
                {"l", r.l},
                {"horizon", r.horizon},
                {"mbound_value", r.mbound_value},
                {"max_total", r.max_total},
                {"totals_pass", r.totals_pass},
                {"tail_rows", rows}};
}

json to_json(const Partition& p) {
    return json{{"n", p.n},
                {"v0", p.v0},
                {"blocks", p.blocks},
                {"designated", p.designated},
                {"provenance",
                 json{{"construction", p.provenance},
                      {"parameters", p.params},
                      {"seed", p.seed}}}};
}

json to_json(const CorPReport& r) {
    return json{{"block_sizes_ok", r.size_ok},
                {"v0_ok", r.v0_ok},
                {"designated_ok", r.designated_ok},
                {"induced_ok", r.induced_ok},
                {"max_induced", r.max_induced},
                {"delta_threshold", r.delta_threshold},
                {"paper_log_delta", r.paper_log_delta},
                {"k", r.k},
                {"pass", r.pass}};
}

json to_json(const ScaleChoice& s) {
    return json{{"index", s.index},
                {"n_steps", s.n_steps},
                {"k_exp", s.k_exp},
                {"r_prev", s.r_prev},
                {"r", s.r},
                {"r_prime", s.r_prime},
                {"q", s.q},
                {"q1", s.q1},
                {"q2", s.q2},
                {"horizon", s.horizon},
                {"horizon_prev", s.horizon_prev},
                {"horizon_prime", s.horizon_prime},
                {"horizon_prime_odd", s.horizon_prime_odd},
                {"qualifying", s.qualifying},
                {"identity_ok", s.identity_ok}};
}

json to_json(const GenericDiagnostics& d) {
    return json{{"scale", to_json(d.scale)},
                {"t_size", d.t_size},
                {"t_target", d.t_target},
                {"d_size", d.d_size},
                {"d_target", d.d_target},
                {"blocks_nonempty", d.blocks_nonempty},
                {"blocks_nice", d.blocks_nice},
                {"block_size_target", d.block_size_target},
                {"blocks_below_size_target", d.blocks_below_size_target},
                {"bad_fraction_outside_d", d.bad_fraction_outside_d},
                {"bad_bound", d.bad_bound},
                {"exact_ball_checks_ran", d.exact_ball_checks_ran},
                {"ball_bound_ok", d.ball_bound_ok},
                {"bprime_union_ok", d.bprime_union_ok}};
}

Partition partition_from_json(const json& j) {
    Partition p;
    try {
        p.n = j.at("n").get<int>();
        p.v0 = j.at("v0").get<std::vector<int>>();
        p.blocks = j.at("blocks").get<std::vector<std::vector<int>>>();
        p.designated =
            j.at("designated").get<std::vector<std::vector<int>>>();
        if (j.contains("provenance")) {
            const auto& prov = j.at("provenance");
            p.provenance = prov.value("construction", "");
            p.seed = prov.value("seed", 0ULL);
            if (prov.contains("parameters"))
                for (const auto& [k, v] : prov.at("parameters").items())
                    p.params[k] = v.get<double>();
        }
    } catch (const json::exception& e) {
        throw FileFormatError(std::string("partition json: ") + e.what());
    }
    validate_partition(p);
    return p;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileFormatError("cannot open for digest: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

} // namespace covertime
