#include "covertime/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "covertime/errors.hpp"
#include "covertime/exact.hpp"
#include "covertime/martingale.hpp"
#include "covertime/mc.hpp"
#include "covertime/rng.hpp"

namespace covertime {

namespace {

constexpr double kGamma = 0.1;
constexpr double kLaTol = 1e-9;

std::vector<int> sorted_unique(std::vector<int> xs) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

std::vector<char> mask_of(int n, const std::vector<int>& xs, const char* what) {
    std::vector<char> mask(n, 0);
    for (int v : xs) {
        if (v < 0 || v >= n)
            throw PreconditionError(std::string(what) + ": state out of range");
        mask[v] = 1;
    }
    return mask;
}

// Max induced transition probability into members of `targets` (subset of W)
// from other members of W, via one induced-chain solve.
double max_induced_into(const MarkovChain& m, const std::vector<int>& block,
                        const std::vector<int>& targets) {
    if (block.size() <= 1) return 0.0;
    auto ws = sorted_unique(block);
    auto sub = induced_chain(m, ws);
    double best = 0;
    for (int w : targets) {
        const int j = (int)(std::lower_bound(ws.begin(), ws.end(), w) - ws.begin());
        for (size_t i = 0; i < ws.size(); ++i) {
            if ((int)i == j) continue;
            best = std::max(best, sub.prob((int)i, j));
        }
    }
    return best;
}

} // namespace

void validate_partition(const Partition& p) {
    if (p.n <= 0) throw PreconditionError("partition: empty state space");
    if (p.designated.size() != p.blocks.size())
        throw PreconditionError("partition: designated/block count mismatch");
    std::vector<int> owner(p.n, -2);
    for (int v : p.v0) {
        if (v < 0 || v >= p.n)
            throw PreconditionError("partition: vertex out of range");
        if (owner[v] != -2) throw PreconditionError("partition: overlap in V0");
        owner[v] = -1;
    }
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        if (p.blocks[i].empty())
            throw PreconditionError("partition: empty block");
        for (int v : p.blocks[i]) {
            if (v < 0 || v >= p.n)
                throw PreconditionError("partition: vertex out of range");
            if (owner[v] != -2)
                throw PreconditionError("partition: blocks overlap");
            owner[v] = (int)i;
        }
        for (int v : p.designated[i])
            if (v < 0 || v >= p.n || owner[v] != (int)i)
                throw PreconditionError(
                    "partition: designated vertex outside its block");
    }
    for (int v = 0; v < p.n; ++v)
        if (owner[v] == -2)
            throw PreconditionError("partition: vertex " + std::to_string(v) +
                                    " not covered");
}

bool is_good(const MarkovChain& m, int v, const std::vector<int>& W,
             double delta) {
    auto ws = sorted_unique(W);
    if (!std::binary_search(ws.begin(), ws.end(), v))
        throw PreconditionError("is_good: v must lie in W");
    if (ws.size() == 1) return true;
    auto sub = induced_chain(m, ws);
    const int i =
        (int)(std::lower_bound(ws.begin(), ws.end(), v) - ws.begin());
    for (size_t j = 0; j < ws.size(); ++j) {
        if ((int)j == i) continue;
        if (sub.prob(i, (int)j) >= delta) return false;
    }
    return true;
}

std::vector<int> good_targets(const MarkovChain& m, const std::vector<int>& W,
                              double delta) {
    auto ws = sorted_unique(W);
    if (ws.empty()) return {};
    if (ws.size() == 1) return ws;
    auto sub = induced_chain(m, ws);
    std::vector<int> out;
    for (size_t j = 0; j < ws.size(); ++j) {
        double worst = 0;
        for (size_t i = 0; i < ws.size(); ++i) {
            if (i == j) continue;
            worst = std::max(worst, sub.prob((int)i, (int)j));
        }
        if (worst < delta) out.push_back(ws[j]);
    }
    return out;
}

ObservationReport good_by_observation(const MarkovChain& m, int v,
                                      const std::vector<int>& W, long long R,
                                      double delta) {
    auto ws = sorted_unique(W);
    if (!std::binary_search(ws.begin(), ws.end(), v))
        throw PreconditionError("good_by_observation: v must lie in W");
    if (R < 1) throw PreconditionError("good_by_observation: horizon >= 1");
    ObservationReport rep;
    for (int w : ws) {
        if (w == v) continue;
        rep.max_hit_before_return = std::max(
            rep.max_hit_before_return, prob_hit_before_return(m, v, w, R));
    }
    rep.avoid_prob = prob_avoid_set(m, v, ws, R);
    const bool ball_clear = rep.max_hit_before_return <= delta / 2.0;
    const bool visits = rep.avoid_prob < delta / 2.0;
    rep.verdict = (ball_clear && visits) ? GoodCheck::CertifiedGood
                                         : GoodCheck::Inconclusive;
    return rep;
}

CorPReport verify_corp(const MarkovChain& m, const Partition& p, double C,
                       double theta, double delta_threshold, double gamma,
                       double la_tol) {
    validate_partition(p);
    if (p.n != m.n())
        throw PreconditionError("verify: partition and chain disagree on n");
    CorPReport rep;
    rep.k = (int)p.blocks.size();
    rep.delta_threshold = delta_threshold;
    rep.size_ok = true;
    rep.designated_ok = true;
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        if (!((double)p.blocks[i].size() > theta * p.n)) rep.size_ok = false;
        if (!((double)p.designated[i].size() > gamma * p.blocks[i].size()))
            rep.designated_ok = false;
    }
    rep.v0_ok = (double)p.v0.size() < (1.0 - gamma) * p.n;
    rep.induced_ok = true;
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        auto block = sorted_unique(p.blocks[i]);
        auto targets = sorted_unique(p.designated[i]);
        const double worst = max_induced_into(m, block, targets);
        rep.max_induced = std::max(rep.max_induced, worst);
        if (worst >= delta_threshold + la_tol) rep.induced_ok = false;
    }
    // Log-space value of the nominal threshold delta(C / gamma^2, gamma).
    rep.paper_log_delta =
        MartingaleParams::paper(std::max(1.0, C / (gamma * gamma)), gamma, 1.0)
            .log_delta;
    rep.pass = rep.size_ok && rep.v0_ok && rep.designated_ok && rep.induced_ok;
    return rep;
}

// ---------------------------------------------------------------------------
// Trees

namespace {

struct RootedTree {
    int root = 0;
    std::vector<int> parent;
    std::vector<int> depth;
    std::vector<std::vector<int>> children;
    std::vector<std::vector<int>> levels;
};

RootedTree root_tree(const Graph& g, int root) {
    RootedTree t;
    t.root = root;
    t.parent.assign(g.n(), -1);
    t.depth = g.bfs_depths(root);
    t.children.assign(g.n(), {});
    int max_depth = 0;
    for (int v = 0; v < g.n(); ++v) max_depth = std::max(max_depth, t.depth[v]);
    t.levels.assign(max_depth + 1, {});
    for (int v = 0; v < g.n(); ++v) t.levels[t.depth[v]].push_back(v);
    for (int v = 0; v < g.n(); ++v)
        for (int w : g.neighbors(v))
            if (t.depth[w] == t.depth[v] + 1) {
                t.parent[w] = v;
                t.children[v].push_back(w);
            }
    return t;
}

int ancestor_at_level(const RootedTree& t, int v, int level) {
    while (t.depth[v] > level) v = t.parent[v];
    return v;
}

// First-hit split on a tree walk: h[x] = Pr_x(first visit to the absorbing
// set lands on `target`), solved by leaf elimination on the free forest.
std::vector<double> tree_hit_split(const Graph& g,
                                   const std::vector<char>& absorbing,
                                   int target) {
    const int n = g.n();
    std::vector<double> h(n, 0.0), c(n, 0.0), up(n, 0.0);
    std::vector<char> free_node(n, 0);
    for (int v = 0; v < n; ++v) free_node[v] = !absorbing[v];
    h[target] = 1.0;

    std::vector<int> order; // free vertices in BFS order per component
    std::vector<int> parent(n, -1);
    std::vector<char> seen(n, 0);
    for (int s = 0; s < n; ++s) {
        if (!free_node[s] || seen[s]) continue;
        size_t head = order.size();
        order.push_back(s);
        seen[s] = 1;
        parent[s] = -1;
        while (head < order.size()) {
            int v = order[head++];
            for (int w : g.neighbors(v))
                if (free_node[w] && !seen[w]) {
                    seen[w] = 1;
                    parent[w] = v;
                    order.push_back(w);
                }
        }
    }
    // Upward elimination: h_v = c_v + up_v * h_parent after processing.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        const double step = 1.0 / g.degree(v);
        double cv = 0.0, self = 0.0, par = 0.0;
        for (int w : g.neighbors(v)) {
            if (w == target) cv += step;
            if (!free_node[w]) continue;
            if (w == parent[v])
                par = step;
            else { // child in the free forest
                cv += step * c[w];
                self += step * up[w];
            }
        }
        const double denom = 1.0 - self;
        c[v] = cv / denom;
        up[v] = par / denom;
    }
    for (int v : order)
        h[v] = c[v] + (parent[v] >= 0 ? up[v] * h[parent[v]] : 0.0);
    return h;
}

// Max induced transition within a class of a tree walk, O(|W| n).
double tree_class_max_induced(const Graph& g, const MarkovChain& m,
                              const std::vector<int>& klass) {
    if (klass.size() <= 1) return 0.0;
    auto amask = mask_of(g.n(), klass, "tree class");
    double best = 0;
    for (int w : klass) {
        auto h = tree_hit_split(g, amask, w);
        for (int v : klass) {
            if (v == w) continue;
            double prob = 0;
            for (int y : g.neighbors(v)) {
                if (y == w)
                    prob += 1.0 / g.degree(v);
                else if (!amask[y])
                    prob += h[y] / g.degree(v);
            }
            best = std::max(best, prob);
        }
    }
    return best;
}

} // namespace

FarCheck far_bound(const Graph& g, int v, int w) {
    if (!g.is_tree()) throw PreconditionError("far bound: input is not a tree");
    if (v == w) throw PreconditionError("far bound: need distinct vertices");
    std::vector<char> amask(g.n(), 0);
    amask[v] = 1;
    amask[w] = 1;
    auto h = tree_hit_split(g, amask, w);
    FarCheck out;
    for (int y : g.neighbors(v)) {
        if (y == w)
            out.exact += 1.0 / g.degree(v);
        else if (!amask[y])
            out.exact += h[y] / g.degree(v);
    }
    out.bound = 1.0 / g.distance(v, w);
    out.pass = out.exact <= out.bound + 1e-12;
    return out;
}

Partition tree_safe_partition(const Graph& g, double delta, int root) {
    if (!g.is_tree())
        throw PreconditionError("tree partition: input is not a tree");
    if (delta <= 0 || delta > 1)
        throw PreconditionError("tree partition: delta outside (0, 1]");
    if (root < 0 || root >= g.n())
        throw PreconditionError("tree partition: root out of range");
    const int t = (int)std::ceil(1.0 / delta);
    // Saturating t^t, only used as the residual-set cutoff.
    long long t_pow_t = 1;
    for (int i = 0; i < t; ++i) {
        if (t_pow_t > (1LL << 50)) break;
        t_pow_t *= t;
    }

    const auto tree = root_tree(g, root);
    const int n = g.n();
    // Colors are (q, kind, index) with kind in 0..t-1 for staged palettes and
    // kind = t for the residual palette; palettes are shared across scopes.
    std::map<std::tuple<int, int, long long>, int> color_ids;
    std::vector<int> color(n, -1);
    auto assign = [&](int v, int q, int kind, long long idx) {
        auto key = std::make_tuple(q, kind, idx);
        auto it = color_ids.try_emplace(key, (int)color_ids.size()).first;
        color[v] = it->second;
    };

    // Colors one target level within one scope following the staged process.
    auto run_scope = [&](const std::vector<int>& target, int level, int lo,
                         int q) {
        std::vector<int> uncolored(target);
        auto count_under = [&](int anc_level) {
            // |U_v| per ancestor at anc_level.
            std::map<int, long long> cnt;
            for (int u : uncolored) cnt[ancestor_at_level(tree, u, anc_level)]++;
            return cnt;
        };
        while ((long long)uncolored.size() > t_pow_t) {
            int chosen = -1, chosen_level = -1;
            for (int j = level - 1; j >= lo && chosen < 0; --j) {
                double need = std::pow((double)t, (double)(level - j));
                auto cnt = count_under(j);
                for (const auto& [v, c] : cnt)
                    if ((double)c > need && (chosen < 0 || v < chosen)) chosen = v;
                if (chosen >= 0) chosen_level = j;
            }
            if (chosen < 0)
                throw InternalError("tree partition: no stage vertex found");
            // Group the uncolored descendants of `chosen` by child subtree.
            std::map<int, std::vector<int>> groups;
            std::vector<int> rest;
            for (int u : uncolored) {
                if (ancestor_at_level(tree, u, chosen_level) == chosen)
                    groups[ancestor_at_level(tree, u, chosen_level + 1)]
                        .push_back(u);
                else
                    rest.push_back(u);
            }
            for (auto& [child, members] : groups)
                std::sort(members.begin(), members.end());
            const int kind = t - (level - chosen_level);
            long long idx = 0;
            while ((long long)groups.size() >= t) {
                for (auto it = groups.begin(); it != groups.end();) {
                    assign(it->second.front(), q, kind, idx);
                    it->second.erase(it->second.begin());
                    it = it->second.empty() ? groups.erase(it) : std::next(it);
                }
                ++idx;
            }
            for (auto& [child, members] : groups)
                rest.insert(rest.end(), members.begin(), members.end());
            uncolored = std::move(rest);
        }
        long long idx = 0;
        std::sort(uncolored.begin(), uncolored.end());
        for (int u : uncolored) assign(u, q, t, idx++);
    };

    for (int level = 0; level < (int)tree.levels.size(); ++level) {
        const int q = level % t;
        if (level >= t) {
            for (int scope_root : tree.levels[level - t]) {
                std::vector<int> target;
                for (int u : tree.levels[level])
                    if (ancestor_at_level(tree, u, level - t) == scope_root)
                        target.push_back(u);
                if (!target.empty()) run_scope(target, level, level - t, q);
            }
        } else {
            run_scope(tree.levels[level], level, 0, q);
        }
    }

    std::vector<std::vector<int>> classes(color_ids.size());
    for (int v = 0; v < n; ++v) classes[color[v]].push_back(v);
    classes.erase(std::remove_if(classes.begin(), classes.end(),
                                 [](const auto& c) { return c.empty(); }),
                  classes.end());

    if (n >= 2) {
        const auto m = rw_from_graph(g);
        for (const auto& klass : classes)
            if (tree_class_max_induced(g, m, klass) > delta + kLaTol)
                throw InternalError("tree partition: safety verification failed");
    }

    Partition p;
    p.n = n;
    p.blocks = classes;
    p.designated = classes;
    p.provenance = "tree";
    p.params = {{"delta", delta}, {"t", (double)t}, {"root", (double)root}};
    validate_partition(p);
    return p;
}

// ---------------------------------------------------------------------------
// Recurrent vertices

Partition recurrent_partition(const Graph& g, double delta, long long R,
                              double theta_frac) {
    const auto m = rw_from_graph(g);
    const int n = g.n();
    auto recurrent = classify_recurrent(m, delta, R);
    std::vector<char> in_s = mask_of(n, recurrent, "recurrent partition");

    // Conflict edges: v ~ w when either lies in the other's B' ball.
    const double threshold = delta / 2.0;
    const int s = (int)recurrent.size();
    std::vector<std::vector<int>> conflict(n);
    for (int a = 0; a < s; ++a)
        for (int b = a + 1; b < s; ++b) {
            const int v = recurrent[a], w = recurrent[b];
            if (prob_hit_before_return(m, v, w, R) > threshold ||
                prob_hit_before_return(m, w, v, R) > threshold) {
                conflict[v].push_back(w);
                conflict[w].push_back(v);
            }
        }

    // Descending-degree greedy: every already-colored neighbor of v has
    // degree >= deg(v), so it lies in B'_v and the palette stays small.
    std::vector<int> order(recurrent);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return g.degree(a) != g.degree(b) ? g.degree(a) < g.degree(b) : a < b;
    });
    std::reverse(order.begin(), order.end());
    std::vector<int> color(n, -1);
    int colors_used = 0;
    for (int v : order) {
        std::vector<char> used(s + 1, 0);
        for (int w : conflict[v])
            if (color[w] >= 0) used[color[w]] = 1;
        int c = 0;
        while (used[c]) ++c;
        color[v] = c;
        colors_used = std::max(colors_used, c + 1);
    }

    std::vector<std::vector<int>> classes(colors_used);
    for (int v : recurrent) classes[color[v]].push_back(v);

    Partition p;
    p.n = n;
    p.provenance = "recurrent";
    p.seed = 0;
    p.params = {{"delta", delta},
                {"R", (double)R},
                {"theta", theta_frac},
                {"colors_used", (double)colors_used},
                {"color_bound", 2.0 * R / delta},
                {"recurrent_count", (double)s}};
    std::vector<char> placed(n, 0);
    for (auto& klass : classes) {
        if ((double)klass.size() > theta_frac * n) {
            for (int v : klass) placed[v] = 1;
            p.blocks.push_back(klass);
            p.designated.push_back(klass);
        }
    }
    for (int v = 0; v < n; ++v)
        if (!placed[v]) p.v0.push_back(v);
    validate_partition(p);

    for (const auto& block : p.blocks)
        if (max_induced_into(m, block, block) >= 1.5 * delta + kLaTol)
            throw InternalError(
                "recurrent partition: induced check failed on a class");
    return p;
}

// ---------------------------------------------------------------------------
// Random block constructions

namespace {

struct BlockBuild {
    std::vector<std::vector<int>> blocks; // nonempty only
    long long nonempty = 0;
};

BlockBuild random_blocks(const std::vector<int>& members, long long nblocks,
                         std::uint64_t seed) {
    std::vector<std::vector<int>> all((size_t)nblocks);
    for (int v : members) {
        SplitStream stream(seed, (std::uint64_t)v);
        all[stream.next_below((std::uint64_t)nblocks)].push_back(v);
    }
    BlockBuild out;
    for (auto& b : all)
        if (!b.empty()) {
            out.blocks.push_back(std::move(b));
            ++out.nonempty;
        }
    return out;
}

// Exact bad set of a block: positions of vertices whose induced row reaches
// delta. Aligned with the input order.
std::vector<char> bad_in_block(const MarkovChain& m,
                               const std::vector<int>& block, double delta) {
    std::vector<char> bad(block.size(), 0);
    if (block.size() <= 1) return bad;
    auto ws = sorted_unique(block);
    auto sub = induced_chain(m, ws);
    std::vector<char> bad_sorted(ws.size(), 0);
    for (size_t i = 0; i < ws.size(); ++i)
        for (size_t j = 0; j < ws.size(); ++j) {
            if (i == j) continue;
            if (sub.prob((int)i, (int)j) >= delta) {
                bad_sorted[i] = 1;
                break;
            }
        }
    for (size_t k = 0; k < block.size(); ++k) {
        const size_t i =
            std::lower_bound(ws.begin(), ws.end(), block[k]) - ws.begin();
        bad[k] = bad_sorted[i];
    }
    return bad;
}

} // namespace

Partition expander_partition(const Graph& g, double eps, double delta,
                             int degree_cutoff, std::uint64_t seed) {
    const auto m = rw_from_graph(g);
    const int n = g.n();
    auto spec = spectral_gap(m);
    if (!is_eps_expander(spec, eps))
        throw PreconditionError("expander partition: not an eps-expander");
    if (delta <= 0 || delta >= 1)
        throw PreconditionError("expander partition: delta outside (0, 1)");
    const double theta = delta * delta;
    const long long R = (long long)std::ceil(std::sqrt((double)n));

    std::vector<int> t_set;
    double pi_max = 0;
    const auto& pi = *m.stationary_hint();
    for (int v = 0; v < n; ++v)
        if (g.degree(v) <= degree_cutoff) {
            t_set.push_back(v);
            pi_max = std::max(pi_max, pi[v]);
        }

    // Fixed horizon T' with sqrt(cutoff)/eps (1-eps)^T' + R pi_max < delta/4.
    const double margin = delta / 4.0 - (double)R * pi_max;
    const double front = std::sqrt((double)std::max(degree_cutoff, 1)) / eps;
    if (margin <= 0 || front <= 0)
        throw PreconditionError(
            "expander partition: no mixing horizon exists at this scale "
            "(R * pi exceeds delta/4)");
    long long tprime =
        (long long)std::ceil(std::log(margin / front) / std::log(1.0 - eps));
    tprime = std::max<long long>(tprime, 1);
    while (front * std::pow(1.0 - eps, (double)tprime) >= margin) ++tprime;

    const double q_cap = 4.0 * (double)tprime / delta;
    const long long nblocks = (long long)std::ceil(q_cap / theta);
    auto built = random_blocks(t_set, nblocks, seed);

    Partition p;
    p.n = n;
    p.provenance = "expander";
    p.seed = seed;
    std::vector<char> placed(n, 0);
    long long obs_certified = 0, nice_blocks = 0;
    for (auto& block : built.blocks) {
        auto bad = bad_in_block(m, block, delta);
        long long bad_count = 0;
        for (char b : bad) bad_count += b;
        const bool nice = (double)bad_count < delta * (double)block.size() / 2.0;
        if (!nice) continue;
        ++nice_blocks;
        for (int v : block) placed[v] = 1;
        for (int v : block)
            if (good_by_observation(m, v, block, R, delta).verdict ==
                GoodCheck::CertifiedGood)
                ++obs_certified;
        p.designated.push_back(good_targets(m, block, delta));
        p.blocks.push_back(std::move(block));
    }
    for (int v = 0; v < n; ++v)
        if (!placed[v]) p.v0.push_back(v);
    p.params = {{"eps", eps},
                {"delta", delta},
                {"theta", theta},
                {"R", (double)R},
                {"mix_horizon", (double)tprime},
                {"q", q_cap},
                {"blocks", (double)nblocks},
                {"nice_blocks", (double)nice_blocks},
                {"obs_certified", (double)obs_certified}};
    validate_partition(p);
    return p;
}

ScaleChoice choose_scale(const MarkovChain& m, double delta, int k_exp,
                         double C) {
    if (delta <= 0 || delta >= 1)
        throw PreconditionError("scale: delta outside (0, 1)");
    if (k_exp < 1) throw PreconditionError("scale: k exponent must be >= 1");
    if (C <= 0) throw PreconditionError("scale: C must be positive");
    const int n = m.n();
    const double dk = std::pow(delta, (double)k_exp);
    const double cap = 10.0 / dk;
    constexpr double kScheduleClamp = 1e15;

    int base_n = 1;
    while (std::pow(1.0 - delta, (double)base_n) >= dk) ++base_n;

    // Return CDFs are horizon-independent once the alive mass has decayed, so
    // compute them once per vertex.
    std::vector<std::vector<double>> cdfs(n);
    for (int v = 0; v < n; ++v)
        cdfs[v] = return_time_cdf(m, v, (long long)1e9);

    auto attempt = [&](int N) -> ScaleChoice {
        const double factor = 4.0 * C * N * std::pow(delta, -10.0);
        double r_prev = 1.0;
        for (int i = 1; (double)i < cap; ++i) {
            const double r = std::min(r_prev * factor, kScheduleClamp);
            const long long h_prev = (long long)std::floor(r_prev);
            const long long h = (long long)std::floor(r);
            int qualifying = 0;
            for (int v = 0; v < n; ++v)
                if (cdf_at(cdfs[v], h) - cdf_at(cdfs[v], h_prev) < dk)
                    ++qualifying;
            if ((double)qualifying >= 0.9 * n) {
                ScaleChoice sc;
                sc.index = i;
                sc.n_steps = N;
                sc.k_exp = k_exp;
                sc.r_prev = r_prev;
                sc.r = r;
                sc.r_prime = (double)N * r_prev;
                sc.q = 4.0 / delta * sc.r_prime;
                sc.q1 = sc.q * std::pow(delta, -3.0);
                sc.q2 = sc.q1 * std::pow(delta, -4.0);
                sc.horizon = h;
                sc.horizon_prev = h_prev;
                sc.horizon_prime = (long long)std::floor(sc.r_prime);
                sc.horizon_prime_odd = sc.horizon_prime % 2 == 1;
                sc.qualifying = qualifying;
                const double theta = delta * delta;
                sc.identity_ok =
                    std::abs(C * sc.q2 / theta - r) <= 1e-9 * std::max(1.0, r);
                return sc;
            }
            r_prev = r;
        }
        throw PreconditionError("scale: no qualifying index below the cap");
    };

    // The schedule wants an odd R'. Incrementing N fixes the parity at the
    // first scale; at later scales R_{i-1} carries a factor of 4, so when no
    // increment works the minimal N is kept and the parity recorded.
    ScaleChoice first = attempt(base_n);
    if (first.horizon_prime_odd) return first;
    for (int bump = 1; bump <= 2; ++bump) {
        ScaleChoice sc = attempt(base_n + bump);
        if (sc.horizon_prime_odd) return sc;
    }
    return first;
}

Partition generic_partition(const Graph& g, double C, double delta, int k_exp,
                            int degree_cutoff, std::uint64_t seed,
                            bool exact_checks, long long mc_reps,
                            GenericDiagnostics* diag) {
    const auto m = rw_from_graph(g);
    const int n = g.n();
    const double theta = delta * delta;
    auto scale = choose_scale(m, delta, k_exp, C);
    const long long R = scale.horizon;
    const double dk = std::pow(delta, (double)k_exp);

    // T: transient, low degree, and quiet in the chosen return window.
    std::vector<int> t_set;
    for (int v = 0; v < n; ++v) {
        auto cdf = return_time_cdf(m, v, R);
        const bool transient = !(cdf_at(cdf, R) > 1.0 - delta);
        const bool window_ok =
            cdf_at(cdf, scale.horizon) - cdf_at(cdf, scale.horizon_prev) < dk;
        if (transient && g.degree(v) < degree_cutoff && window_ok)
            t_set.push_back(v);
    }

    // D: members of T likely to see few distinct T-vertices within R.
    std::vector<int> d_set;
    long long q1_int = (long long)std::ceil(scale.q1);
    if (scale.q1 == std::floor(scale.q1)) q1_int = (long long)scale.q1;
    for (int v : t_set) {
        if (scale.q1 > (double)t_set.size()) {
            d_set.push_back(v); // the count can never reach Q1
            continue;
        }
        auto stats =
            estimate_visit_stats(m, StartRule::at(v), R, t_set, mc_reps,
                                 SplitStream::mix(seed ^ (std::uint64_t)v),
                                 {q1_int});
        // Straddling intervals land in D.
        if (stats.below.front().second.hi > theta * delta) d_set.push_back(v);
    }
    std::vector<char> in_d = mask_of(n, d_set, "generic partition");

    const long long nblocks = (long long)std::ceil(scale.q / theta);
    auto built = random_blocks(t_set, nblocks, seed);

    Partition p;
    p.n = n;
    p.provenance = "generic";
    p.seed = seed;
    std::vector<char> placed(n, 0);
    long long nice_blocks = 0, below_size = 0;
    long long bad_outside_d = 0, outside_d = 0;
    const double size_target = (double)n / (double)nblocks / 2.0;
    for (auto& block : built.blocks) {
        auto bad = bad_in_block(m, block, delta);
        long long bad_count = 0;
        for (size_t i = 0; i < block.size(); ++i) {
            bad_count += bad[i];
            if (!in_d[block[i]]) {
                ++outside_d;
                bad_outside_d += bad[i];
            }
        }
        if ((double)block.size() < size_target) ++below_size;
        const bool nice = (double)bad_count < delta * (double)block.size() / 2.0;
        if (!nice) continue;
        ++nice_blocks;
        for (int v : block) placed[v] = 1;
        p.designated.push_back(good_targets(m, block, delta));
        p.blocks.push_back(std::move(block));
    }
    for (int v = 0; v < n; ++v)
        if (!placed[v]) p.v0.push_back(v);
    p.params = {{"C", C},
                {"delta", delta},
                {"theta", theta},
                {"k_exp", (double)k_exp},
                {"R", (double)R},
                {"q", scale.q},
                {"q1", scale.q1},
                {"blocks", (double)nblocks},
                {"nice_blocks", (double)nice_blocks}};
    validate_partition(p);

    if (diag) {
        diag->scale = scale;
        diag->t_size = (long long)t_set.size();
        diag->t_target = 0.6 * n;
        diag->d_size = (long long)d_set.size();
        diag->d_target = 2.0 * theta * n;
        diag->blocks_nonempty = built.nonempty;
        diag->blocks_nice = nice_blocks;
        diag->block_size_target = size_target;
        diag->blocks_below_size_target = below_size;
        diag->bad_fraction_outside_d =
            outside_d > 0 ? (double)bad_outside_d / (double)outside_d : 0.0;
        diag->bad_bound = 4.0 * theta;
        diag->exact_ball_checks_ran = exact_checks;
        diag->ball_bound_ok = true;
        diag->bprime_union_ok = true;
        if (exact_checks) {
            std::vector<char> in_t = mask_of(n, t_set, "generic partition");
            const double zeta = theta / scale.q;
            for (int v : t_set) {
                auto balls = ball_sets(m, v, R, delta);
                long long b_in_t = 0, bp_in_t = 0;
                for (int w : balls.b) b_in_t += in_t[w];
                for (int w : balls.bprime) bp_in_t += in_t[w];
                if ((double)b_in_t > scale.q) diag->ball_bound_ok = false;
                if (!(zeta * (double)bp_in_t < theta))
                    diag->bprime_union_ok = false;
            }
        }
    }
    return p;
}

Partition to_corp_candidate(const Partition& p, double theta) {
    Partition out;
    out.n = p.n;
    out.provenance = p.provenance + "+filtered";
    out.params = p.params;
    out.params["theta_filter"] = theta;
    out.seed = p.seed;
    out.v0 = p.v0;
    for (const auto& block : p.blocks) {
        if ((double)block.size() > theta * p.n) {
            out.blocks.push_back(block);
            out.designated.push_back(block);
        } else {
            out.v0.insert(out.v0.end(), block.begin(), block.end());
        }
    }
    std::sort(out.v0.begin(), out.v0.end());
    validate_partition(out);
    return out;
}

} // namespace covertime
