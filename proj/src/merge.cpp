#include "lsbn/merge.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "lsbn/ropart.hpp"

namespace lsbn {

namespace {

/// Adds arcs of `from` into `into`; opposite arcs are settled by weight.
void absorb(LocalStructure& into, const LocalStructure& from, std::vector<Conflict>& conflicts,
            const std::string& stage) {
    for (const auto& e : from.edges) {
        if (const DirectedEdge* same = into.find(e.from, e.to)) {
            into.add_edge(e.from, e.to, std::max(same->weight, e.weight));
        } else if (const DirectedEdge* opposite = into.find(e.to, e.from)) {
            if (e.weight > opposite->weight) {
                conflicts.push_back({e.from, e.to, e.weight, opposite->weight, stage});
                into.edges.erase(into.edges.begin() + (opposite - into.edges.data()));
                into.add_edge(e.from, e.to, e.weight);
            } else {
                conflicts.push_back({opposite->from, opposite->to, opposite->weight, e.weight, stage});
            }
        } else {
            into.add_edge(e.from, e.to, e.weight);
        }
    }
    into.nodes = set_union(into.nodes, from.nodes);
}

}  // namespace

EnsembleResult ensemble_subcommunities(const std::vector<LocalStructure>& subs) {
    if (subs.empty()) throw Error(ErrorKind::InvalidInput, "ensemble needs at least one structure");
    std::map<std::pair<NodeId, NodeId>, std::pair<double, std::size_t>> arcs;
    EnsembleResult out;
    out.structure.community = subs.front().community;
    for (const auto& s : subs) {
        out.structure.nodes = set_union(out.structure.nodes, s.nodes);
        for (const auto& e : s.edges) {
            auto& [sum, count] = arcs[{e.from, e.to}];
            sum += e.weight;
            ++count;
        }
    }
    for (const auto& [key, acc] : arcs) {
        const auto [u, v] = key;
        const double mean = acc.first / static_cast<double>(acc.second);
        auto rev = arcs.find({v, u});
        if (rev == arcs.end()) {
            out.structure.add_edge(u, v, mean);
            continue;
        }
        if (u > v) continue;  // handled from the (v, u) side
        const double rmean = rev->second.first / static_cast<double>(rev->second.second);
        if (mean >= rmean) {
            out.structure.add_edge(u, v, mean);
            out.conflicts.push_back({u, v, mean, rmean, "ensemble"});
        } else {
            out.structure.add_edge(v, u, rmean);
            out.conflicts.push_back({v, u, rmean, mean, "ensemble"});
        }
    }
    return out;
}

WeightedGraph collect_triplets(const WeightedGraph& g, double t_tri) {
    if (!(t_tri >= 0.0)) throw Error(ErrorKind::InvalidInput, "triplet threshold must be >= 0");
    const std::size_t n = g.num_nodes();
    WeightedGraph out(n);
    for (NodeId u = 0; u < n; ++u) {
        for (const auto& [v, wuv] : g.neighbors(u)) {
            if (v <= u || !(wuv > t_tri)) continue;
            for (const auto& [w, wvw] : g.neighbors(v)) {
                if (w <= v || !(wvw > t_tri)) continue;
                auto wuw = g.weight(u, w);
                if (!wuw || !(*wuw > t_tri)) continue;
                out.set_weight(u, v, 1.0);
                out.set_weight(v, w, 1.0);
                out.set_weight(u, w, 1.0);
            }
        }
    }
    return out;
}

ResolveResult resolve(const LocalStructure& structure, const NodeSet& scope, const ResolveContext& ctx) {
    if (!ctx.scorer || !ctx.weights) throw Error(ErrorKind::InvalidInput, "resolve needs a scorer and weights");
    ResolveResult result;
    result.structure = structure;
    if (scope.size() < 3) return result;

    const WeightedGraph sub = ctx.weights->induced(scope);
    if (sub.num_edges() == 0) return result;
    result.t_tri = ctx.t_tri >= 0.0 ? ctx.t_tri : elbow_truncate(sub).threshold;
    const WeightedGraph triplets = collect_triplets(sub, result.t_tri);
    if (triplets.num_edges() == 0) return result;

    for (const auto& c : link_communities(triplets, ctx.max_learn_size).communities)
        if (c.size() >= 2) result.clusters.push_back(c);

    // Per pair inside some cluster: how many clusters cover it and what they learned.
    struct Verdict {
        std::size_t covers = 0;
        std::size_t present = 0;
        double forward = 0.0;   // summed weight of min -> max
        double backward = 0.0;  // summed weight of max -> min
    };
    std::map<std::pair<NodeId, NodeId>, Verdict> verdicts;
    for (std::size_t ci = 0; ci < result.clusters.size(); ++ci) {
        const NodeSet& c = result.clusters[ci];
        const LocalStructure learned =
            learn_structure(*ctx.scorer, c, ctx.learner, Rng::derive(ctx.seed, ci).next());
        for (std::size_t a = 0; a < c.size(); ++a)
            for (std::size_t b = a + 1; b < c.size(); ++b) {
                auto& v = verdicts[{c[a], c[b]}];
                ++v.covers;
                if (const auto* e = learned.find(c[a], c[b])) {
                    ++v.present;
                    v.forward += e->weight;
                } else if (const auto* r = learned.find(c[b], c[a])) {
                    ++v.present;
                    v.backward += r->weight;
                }
            }
    }

    LocalStructure out;
    out.nodes = structure.nodes;
    out.community = structure.community;
    for (const auto& e : structure.edges) {
        const auto key = std::make_pair(std::min(e.from, e.to), std::max(e.from, e.to));
        if (!verdicts.count(key)) out.add_edge(e.from, e.to, e.weight);
    }
    for (const auto& [key, v] : verdicts) {
        if (2 * v.present <= v.covers) continue;
        const std::size_t agree = v.present;
        if (v.forward >= v.backward)
            out.add_edge(key.first, key.second, v.forward / static_cast<double>(agree));
        else
            out.add_edge(key.second, key.first, v.backward / static_cast<double>(agree));
        out.nodes = set_union(out.nodes, {key.first, key.second});
    }
    result.structure = std::move(out);
    return result;
}

double jaccard(const NodeSet& a, const NodeSet& b) {
    if (a.empty() || b.empty()) throw Error(ErrorKind::InvalidInput, "jaccard of an empty set");
    const std::size_t inter = set_intersection(a, b).size();
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

namespace {

struct PairKey {
    double j;
    NodeSet uni;
    std::size_t a;
    std::size_t b;
};

/// True when x should be merged before y.
bool precedes(const PairKey& x, const PairKey& y) {
    if (x.j != y.j) return x.j > y.j;
    if (x.uni.size() != y.uni.size()) return x.uni.size() > y.uni.size();
    if (x.uni != y.uni) return x.uni < y.uni;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
}

struct Precedes {
    bool operator()(const PairKey& x, const PairKey& y) const { return precedes(x, y); }
};

}  // namespace

MergeOrder plan_merges(const std::vector<NodeSet>& communities) {
    MergeOrder order;
    std::map<std::size_t, NodeSet> active;
    for (std::size_t i = 0; i < communities.size(); ++i) {
        if (communities[i].empty()) throw Error(ErrorKind::InvalidInput, "empty community in merge pool");
        active.emplace(i, communities[i]);
    }
    std::set<PairKey, Precedes> queue;
    std::map<std::pair<std::size_t, std::size_t>, std::set<PairKey, Precedes>::iterator> handles;

    auto insert = [&](std::size_t a, std::size_t b) {
        const NodeSet& x = active.at(a);
        const NodeSet& y = active.at(b);
        ++order.jaccard_evaluations;
        ++order.cache_operations;
        auto it = queue.insert(PairKey{jaccard(x, y), set_union(x, y), a, b}).first;
        handles.emplace(std::make_pair(a, b), it);
    };

    for (auto i = active.begin(); i != active.end(); ++i)
        for (auto j = std::next(i); j != active.end(); ++j) insert(i->first, j->first);

    std::size_t next_id = communities.size();
    while (active.size() > 1) {
        const PairKey best = *queue.begin();
        // Drop every cached pair that involves either merged entry.
        for (const auto& [id, nodes] : active) {
            for (std::size_t gone : {best.a, best.b}) {
                if (id == gone) continue;
                auto h = handles.find({std::min(id, gone), std::max(id, gone)});
                if (h == handles.end()) continue;
                queue.erase(h->second);
                handles.erase(h);
                ++order.cache_operations;
            }
        }
        order.steps.push_back({best.a, best.b, next_id, best.j});
        active.erase(best.a);
        active.erase(best.b);
        active.emplace(next_id, best.uni);
        for (const auto& [id, nodes] : active)
            if (id != next_id) insert(id, next_id);
        ++next_id;
    }
    return order;
}

MergeResult merge_all(const std::vector<CommunityEntry>& pool, const ResolveContext& ctx) {
    if (pool.empty()) throw Error(ErrorKind::InvalidInput, "merge_all needs a nonempty pool");
    MergeResult result;
    std::vector<NodeSet> sets;
    for (const auto& e : pool) sets.push_back(e.nodes);
    result.order = plan_merges(sets);

    std::map<std::size_t, CommunityEntry> entries;
    for (std::size_t i = 0; i < pool.size(); ++i) entries.emplace(i, pool[i]);

    for (const auto& step : result.order.steps) {
        CommunityEntry left = std::move(entries.at(step.left));
        CommunityEntry right = std::move(entries.at(step.right));
        entries.erase(step.left);
        entries.erase(step.right);

        CommunityEntry merged;
        merged.nodes = set_union(left.nodes, right.nodes);
        merged.structure = std::move(left.structure);
        merged.structure.nodes = set_union(merged.structure.nodes, left.nodes);
        merged.structure.community = -1;
        absorb(merged.structure, right.structure, result.conflicts, "merge");
        merged.structure.nodes = set_union(merged.structure.nodes, merged.nodes);

        const NodeSet overlap = set_intersection(left.nodes, right.nodes);
        if (!overlap.empty()) {
            std::vector<NodeId> scope(overlap.begin(), overlap.end());
            for (const auto& e : merged.structure.edges) {
                if (contains(overlap, e.from)) scope.push_back(e.to);
                if (contains(overlap, e.to)) scope.push_back(e.from);
            }
            ResolveContext local = ctx;
            local.seed = Rng::derive(ctx.seed, step.merged).next();
            ResolveResult r = resolve(merged.structure, make_set(std::move(scope)), local);
            merged.structure = r.structure;
            result.resolutions.push_back(std::move(r));
        }
        entries.emplace(step.merged, std::move(merged));
    }
    result.structure = std::move(entries.begin()->second.structure);
    result.structure.nodes = set_union(result.structure.nodes, entries.begin()->second.nodes);
    return result;
}

}  // namespace lsbn
