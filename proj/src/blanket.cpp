#include "lsbn/blanket.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

namespace lsbn {

CiTest ci_test(const DiscreteDataset& data, NodeId x, NodeId y, const NodeSet& z, std::size_t max_cells) {
    const std::size_t kx = data.cardinality(x);
    const std::size_t ky = data.cardinality(y);
    std::size_t qz = 1;
    for (NodeId v : z) {
        const std::size_t k = data.cardinality(v);
        if (qz > max_cells / k / (kx * ky)) {
            std::string names;
            for (NodeId u : z) names += (names.empty() ? "" : ",") + data.name(u);
            throw Error(ErrorKind::ConditioningSetTooLarge, "conditioning set {" + names + "} exceeds " +
                                                                std::to_string(max_cells) + " cells");
        }
        qz *= k;
    }

    const std::size_t n = data.num_rows();
    std::vector<std::size_t> zconf(n, 0);
    for (NodeId v : z) {
        auto col = data.column(v);
        const std::size_t k = data.cardinality(v);
        for (std::size_t r = 0; r < n; ++r) zconf[r] = zconf[r] * k + col[r];
    }
    std::vector<std::size_t> nxyz(qz * kx * ky, 0), nxz(qz * kx, 0), nyz(qz * ky, 0), nz(qz, 0);
    auto cx = data.column(x);
    auto cy = data.column(y);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t c = zconf[r];
        ++nxyz[(c * kx + cx[r]) * ky + cy[r]];
        ++nxz[c * kx + cx[r]];
        ++nyz[c * ky + cy[r]];
        ++nz[c];
    }

    CiTest t;
    if (n == 0) return t;
    double cmi = 0.0;
    for (std::size_t c = 0; c < qz; ++c) {
        if (nz[c] == 0) continue;
        for (std::size_t a = 0; a < kx; ++a) {
            const std::size_t na = nxz[c * kx + a];
            if (na == 0) continue;
            for (std::size_t b = 0; b < ky; ++b) {
                const std::size_t nab = nxyz[(c * kx + a) * ky + b];
                if (nab == 0) continue;
                cmi += static_cast<double>(nab) *
                       std::log(static_cast<double>(nab) * static_cast<double>(nz[c]) /
                                (static_cast<double>(na) * static_cast<double>(nyz[c * ky + b])));
            }
        }
    }
    t.cmi = std::max(0.0, cmi / static_cast<double>(n));
    t.g_stat = 2.0 * static_cast<double>(n) * t.cmi;
    t.df = static_cast<double>((kx - 1) * (ky - 1) * qz);
    boost::math::chi_squared dist(t.df);
    t.p_value = t.g_stat <= 0.0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, t.g_stat));
    return t;
}

NodeSet mb_candidates(const WeightedGraph& g, NodeId x) {
    const auto& nb = g.neighbors(x);
    if (nb.empty()) return {};
    double mean = 0.0;
    for (const auto& [y, w] : nb) mean += w;
    mean /= static_cast<double>(nb.size());
    NodeSet out;
    for (const auto& [y, w] : nb)
        if (w >= mean) out.push_back(y);
    return out;
}

BlanketResult iamb(const DiscreteDataset& data, NodeId x, const NodeSet& candidates, double alpha,
                   std::size_t max_cells) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must be in (0, 1)");
    if (contains(candidates, x)) throw Error(ErrorKind::InvalidInput, "candidates must exclude the target");

    BlanketResult result;
    result.target = x;
    NodeSet cmb;
    NodeSet remaining = candidates;
    while (!remaining.empty()) {
        NodeId best = remaining.front();
        CiTest best_test;
        bool have = false;
        for (NodeId y : remaining) {
            CiTest t = ci_test(data, x, y, cmb, max_cells);
            if (!have || t.cmi > best_test.cmi) {
                best = y;
                best_test = t;
                have = true;
            }
        }
        if (best_test.p_value >= alpha) break;
        result.forward.push_back(best);
        cmb = set_union(cmb, {best});
        remaining = set_difference(remaining, {best});
    }

    // Backward phase in admission order.
    for (NodeId y : result.forward) {
        if (!contains(cmb, y)) continue;
        const NodeSet rest = set_difference(cmb, {y});
        if (ci_test(data, x, y, rest, max_cells).p_value >= alpha) cmb = rest;
    }
    result.blanket = std::move(cmb);
    return result;
}

CommunityBlanket community_blanket(const DiscreteDataset& data, const WeightedGraph& g, const NodeSet& community,
                                   double alpha) {
    if (community.empty()) throw Error(ErrorKind::InvalidInput, "community_blanket on an empty community");
    CommunityBlanket out;
    out.community = community;
    out.expanded = community;
    for (NodeId x : community) {
        NodeSet candidates = set_union(mb_candidates(g, x), community);
        candidates = set_difference(candidates, {x});
        BlanketResult b = iamb(data, x, candidates, alpha);
        out.expanded = set_union(out.expanded, b.blanket);
        out.blankets.emplace(x, std::move(b));
    }
    return out;
}

WeightedGraph inner_markov_graph(const NodeSet& community, const std::map<NodeId, BlanketResult>& blankets,
                                 std::size_t n) {
    WeightedGraph img(n);
    for (NodeId x : community) {
        auto it = blankets.find(x);
        if (it == blankets.end())
            throw Error(ErrorKind::InvalidInput, "no blanket for community member " + std::to_string(x));
        for (NodeId y : it->second.blanket)
            if (y != x && contains(community, y)) img.set_weight(x, y, 1.0);
    }
    return img;
}

std::size_t default_sample_count(std::size_t community_size, std::size_t max_learn_size) {
    return std::max<std::size_t>(1, (2 * community_size + max_learn_size - 1) / max_learn_size);
}

namespace {

/// Blanket of a core set, in a fixed preference order: members' blankets are
/// visited node by node in admission order.
std::vector<NodeId> ordered_outer(const NodeSet& core, const std::map<NodeId, BlanketResult>& blankets) {
    std::vector<NodeId> out;
    std::set<NodeId> seen(core.begin(), core.end());
    std::size_t depth = 0;
    bool more = true;
    while (more) {
        more = false;
        for (NodeId x : core) {
            auto it = blankets.find(x);
            if (it == blankets.end()) continue;
            const auto& fwd = it->second.forward;
            std::vector<NodeId> kept;
            for (NodeId y : fwd)
                if (contains(it->second.blanket, y)) kept.push_back(y);
            if (depth < kept.size()) {
                more = true;
                if (seen.insert(kept[depth]).second) out.push_back(kept[depth]);
            }
        }
        ++depth;
    }
    return out;
}

}  // namespace

std::vector<SubCommunity> rnn_sample(const WeightedGraph& img, const NodeSet& community,
                                     const std::map<NodeId, BlanketResult>& blankets, std::size_t k,
                                     std::size_t max_learn_size, std::uint64_t seed) {
    if (k < 1) throw Error(ErrorKind::InvalidInput, "sample count must be >= 1");
    if (max_learn_size < 2) throw Error(ErrorKind::InvalidInput, "max_learn_size must be >= 2");
    if (community.empty()) return {};

    Rng rng(seed);
    std::vector<SubCommunity> samples;
    NodeSet visited;
    while (visited.size() < community.size() || samples.size() < k) {
        const NodeSet unvisited = set_difference(community, visited);
        const NodeSet& pool = unvisited.empty() ? community : unvisited;
        const NodeId start = pool[rng.below(pool.size())];

        std::vector<NodeId> core{start};
        for (const auto& [y, w] : img.neighbors(start))
            if (contains(community, y)) core.push_back(y);
        NodeSet core_set = make_set(core);

        auto members_of = [&](const NodeSet& c) {
            std::vector<NodeId> outer = ordered_outer(c, blankets);
            NodeSet members = c;
            for (NodeId y : outer) members = set_union(members, {y});
            return std::make_pair(members, outer);
        };

        auto [members, outer] = members_of(core_set);
        while (members.size() > max_learn_size && core_set.size() > 1) {
            // Drop the neighbor with the smallest inner-graph degree.
            NodeId victim = 0;
            bool have = false;
            for (NodeId y : core_set) {
                if (y == start) continue;
                if (!have || img.degree(y) < img.degree(victim)) {
                    victim = y;
                    have = true;
                }
            }
            core_set = set_difference(core_set, {victim});
            std::tie(members, outer) = members_of(core_set);
        }
        if (members.size() > max_learn_size) {
            // A single start node whose blanket alone is too large: keep the
            // earliest-admitted blanket members.
            members = core_set;
            for (NodeId y : outer) {
                if (members.size() >= max_learn_size) break;
                members = set_union(members, {y});
            }
        }

        visited = set_union(visited, core_set);
        samples.push_back({core_set, members});
    }
    return samples;
}

}  // namespace lsbn
