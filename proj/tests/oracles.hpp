#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "lsbn/averaging.hpp"
#include "lsbn/common.hpp"
#include "lsbn/dataset.hpp"
#include "lsbn/weights.hpp"

namespace oracle {

using lsbn::NodeId;
using lsbn::NodeSet;

/// MI from a joint frequency table, summed by triple loop.
inline double mutual_information(const lsbn::DiscreteDataset& d, NodeId i, NodeId j) {
    const std::size_t ki = d.cardinality(i), kj = d.cardinality(j);
    std::vector<std::vector<double>> joint(ki, std::vector<double>(kj, 0.0));
    const double n = static_cast<double>(d.num_rows());
    for (std::size_t r = 0; r < d.num_rows(); ++r) joint[d.at(r, i)][d.at(r, j)] += 1.0 / n;
    double mi = 0.0;
    for (std::size_t a = 0; a < ki; ++a)
        for (std::size_t b = 0; b < kj; ++b) {
            if (joint[a][b] == 0.0) continue;
            double pa = 0.0, pb = 0.0;
            for (std::size_t c = 0; c < kj; ++c) pa += joint[a][c];
            for (std::size_t c = 0; c < ki; ++c) pb += joint[c][b];
            mi += joint[a][b] * std::log(joint[a][b] / (pa * pb));
        }
    return mi;
}

/// Dense power iteration; dangling nodes spread uniformly.
inline std::vector<double> pagerank(const lsbn::WeightedGraph& g, double damping, int iterations = 10000) {
    const std::size_t n = g.num_nodes();
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (const auto& e : g.edges()) w[e.u][e.v] = w[e.v][e.u] = e.weight;
    std::vector<double> out(n, 0.0);
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v) out[u] += w[u][v];
    std::vector<double> p(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> q(n, (1.0 - damping) / static_cast<double>(n));
        for (std::size_t u = 0; u < n; ++u)
            for (std::size_t v = 0; v < n; ++v) {
                const double t = out[u] > 0.0 ? w[u][v] / out[u] : 1.0 / static_cast<double>(n);
                q[v] += damping * p[u] * t;
            }
        p = q;
    }
    return p;
}

/// Threshold picked by scanning every point of the descending curve for the
/// largest normalized distance to the chord.
inline double elbow_threshold(std::vector<double> weights) {
    std::sort(weights.rbegin(), weights.rend());
    const double n = static_cast<double>(weights.size() - 1);
    const double hi = weights.front(), lo = weights.back();
    double best = -1.0, threshold = hi;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double x = static_cast<double>(k) / n;
        const double y = (weights[k] - lo) / (hi - lo);
        // point-to-line distance from the chord (x0, y0) = (0, 1) to (x1, y1) = (1, 0)
        const double x0 = 0.0, y0 = 1.0, x1 = 1.0, y1 = 0.0;
        const double dist = std::fabs((x1 - x0) * (y0 - y) - (x0 - x) * (y1 - y0)) / std::hypot(x1 - x0, y1 - y0);
        if (dist > best) {
            best = dist;
            threshold = weights[k];
        }
    }
    return threshold;
}

/// Markov blanket as the neighborhood of v in the moral graph.
inline NodeSet moral_blanket(const lsbn::GroundTruthNet& net, NodeId v) {
    const std::size_t n = net.num_variables();
    std::vector<std::set<NodeId>> moral(n);
    std::vector<std::vector<NodeId>> parents(n);
    for (const auto& [a, b] : net.arcs()) {
        moral[a].insert(b);
        moral[b].insert(a);
        parents[b].push_back(a);
    }
    for (NodeId c = 0; c < n; ++c)
        for (NodeId a : parents[c])
            for (NodeId b : parents[c])
                if (a != b) moral[a].insert(b);
    return NodeSet(moral[v].begin(), moral[v].end());
}

/// Joint BDeu log marginal likelihood computed row by row from the Dirichlet
/// posterior predictive, which telescopes to the Gamma-ratio form.
inline double bdeu_sequential(const lsbn::DiscreteDataset& d, const std::vector<std::vector<NodeId>>& parents,
                              const NodeSet& nodes, double ess) {
    double total = 0.0;
    for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
        const NodeId child = nodes[idx];
        const auto& pa = parents[idx];
        double q = 1.0;
        for (NodeId p : pa) q *= static_cast<double>(d.cardinality(p));
        const double r = static_cast<double>(d.cardinality(child));
        std::map<std::vector<std::size_t>, std::vector<double>> counts;
        for (std::size_t row = 0; row < d.num_rows(); ++row) {
            std::vector<std::size_t> key;
            for (NodeId p : pa) key.push_back(d.at(row, p));
            auto& c = counts[key];
            if (c.empty()) c.assign(d.cardinality(child), 0.0);
            const double nj = std::accumulate(c.begin(), c.end(), 0.0);
            const double nk = c[d.at(row, child)];
            total += std::log((nk + ess / (q * r)) / (nj + ess / q));
            c[d.at(row, child)] += 1.0;
        }
    }
    return total;
}

inline bool is_acyclic(std::size_t m, const std::vector<std::pair<std::size_t, std::size_t>>& arcs) {
    std::vector<std::size_t> indeg(m, 0);
    for (const auto& a : arcs) ++indeg[a.second];
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < m; ++v)
        if (indeg[v] == 0) ready.push_back(v);
    std::size_t seen = 0;
    while (!ready.empty()) {
        const std::size_t v = ready.back();
        ready.pop_back();
        ++seen;
        for (const auto& a : arcs)
            if (a.first == v && --indeg[a.second] == 0) ready.push_back(a.second);
    }
    return seen == m;
}

/// Number of permutations of 0..m-1 consistent with the arcs.
inline double linear_extensions(std::size_t m, const std::vector<std::pair<std::size_t, std::size_t>>& arcs) {
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    double count = 0.0;
    do {
        std::vector<std::size_t> pos(m);
        for (std::size_t k = 0; k < m; ++k) pos[perm[k]] = k;
        bool ok = true;
        for (const auto& a : arcs) ok = ok && pos[a.first] < pos[a.second];
        if (ok) count += 1.0;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return count;
}

/// Edge posterior by enumerating every DAG on the local indices of `nodes`,
/// weighting each by exp(BDeu) times its number of linear extensions.
inline std::vector<std::vector<double>> dag_enumeration_posterior(const lsbn::DiscreteDataset& d,
                                                                  const NodeSet& nodes, double ess,
                                                                  std::size_t max_parents) {
    const std::size_t m = nodes.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            if (a != b) pairs.emplace_back(a, b);
    std::vector<double> logw;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> dags;
    const std::size_t total = std::size_t{1} << pairs.size();
    for (std::size_t mask = 0; mask < total; ++mask) {
        std::vector<std::pair<std::size_t, std::size_t>> arcs;
        bool ok = true;
        for (std::size_t k = 0; k < pairs.size() && ok; ++k)
            if (mask >> k & 1) {
                const auto [a, b] = pairs[k];
                if (mask >> (std::find(pairs.begin(), pairs.end(), std::make_pair(b, a)) - pairs.begin()) & 1)
                    ok = false;
                arcs.push_back(pairs[k]);
            }
        if (!ok || !is_acyclic(m, arcs)) continue;
        std::vector<std::vector<NodeId>> parents(m);
        for (const auto& [a, b] : arcs) parents[b].push_back(nodes[a]);
        bool within = true;
        for (auto& p : parents) {
            std::sort(p.begin(), p.end());
            within = within && p.size() <= max_parents;
        }
        if (!within) continue;
        logw.push_back(bdeu_sequential(d, parents, nodes, ess) + std::log(linear_extensions(m, arcs)));
        dags.push_back(arcs);
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    double z = 0.0;
    std::vector<std::vector<double>> post(m, std::vector<double>(m, 0.0));
    for (std::size_t g = 0; g < dags.size(); ++g) {
        const double w = std::exp(logw[g] - top);
        z += w;
        for (const auto& [a, b] : dags[g]) post[a][b] += w;
    }
    for (auto& row : post)
        for (auto& x : row) x /= z;
    return post;
}

/// Link communities by recomputing the edge clustering from scratch at every
/// distinct similarity height and keeping the densest cut (coarser on ties).
inline std::vector<NodeSet> link_communities(const lsbn::WeightedGraph& g) {
    const std::size_t n = g.num_nodes();
    const auto edges = g.edges();
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (const auto& e : edges) a[e.u][e.v] = a[e.v][e.u] = e.weight;
    for (NodeId v = 0; v < n; ++v) {
        double sum = 0.0;
        std::size_t deg = 0;
        for (NodeId u = 0; u < n; ++u)
            if (u != v && g.has_edge(u, v)) {
                sum += a[v][u];
                ++deg;
            }
        if (deg > 0) a[v][v] = sum / static_cast<double>(deg);
    }
    auto tanimoto = [&](NodeId i, NodeId j) {
        double dot = 0.0, ni = 0.0, nj = 0.0;
        for (NodeId x = 0; x < n; ++x) ni += a[i][x] * a[i][x];
        for (NodeId x = 0; x < n; ++x) nj += a[j][x] * a[j][x];
        for (NodeId x = 0; x < n; ++x) dot += a[i][x] * a[j][x];
        return dot / (ni + nj - dot);
    };
    struct Link {
        std::size_t e, f;
        double s;
    };
    std::vector<Link> links;
    std::set<double> heights;
    for (std::size_t e = 0; e < edges.size(); ++e)
        for (std::size_t f = e + 1; f < edges.size(); ++f) {
            const NodeId eu = edges[e].u, ev = edges[e].v, fu = edges[f].u, fv = edges[f].v;
            NodeId shared, i, j;
            if (eu == fu) shared = eu, i = ev, j = fv;
            else if (eu == fv) shared = eu, i = ev, j = fu;
            else if (ev == fu) shared = ev, i = eu, j = fv;
            else if (ev == fv) shared = ev, i = eu, j = fu;
            else continue;
            (void)shared;
            links.push_back({e, f, tanimoto(i, j)});
            heights.insert(links.back().s);
        }

    auto clusters_at = [&](double h, bool none) {
        std::vector<std::size_t> label(edges.size());
        std::iota(label.begin(), label.end(), 0);
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& l : links)
                if (!none && l.s >= h && label[l.e] != label[l.f]) {
                    const std::size_t m = std::min(label[l.e], label[l.f]);
                    label[l.e] = label[l.f] = m;
                    changed = true;
                }
        }
        std::map<std::size_t, std::vector<std::size_t>> groups;
        for (std::size_t e = 0; e < edges.size(); ++e) groups[label[e]].push_back(e);
        return groups;
    };
    auto density = [&](const std::map<std::size_t, std::vector<std::size_t>>& groups) {
        double d = 0.0;
        for (const auto& [k, es] : groups) {
            std::set<NodeId> nodes;
            for (auto e : es) nodes.insert({edges[e].u, edges[e].v});
            const double m = static_cast<double>(es.size()), nc = static_cast<double>(nodes.size());
            if (nodes.size() > 2) d += m * (m - nc + 1.0) / ((nc - 2.0) * (nc - 1.0));
        }
        return 2.0 / static_cast<double>(edges.size()) * d;
    };

    auto best = clusters_at(0.0, true);
    double best_d = density(best);
    for (auto it = heights.rbegin(); it != heights.rend(); ++it) {
        auto groups = clusters_at(*it, false);
        const double d = density(groups);
        if (d >= best_d - 1e-12) {
            best_d = std::max(best_d, d);
            best = groups;
        }
    }
    std::set<NodeSet> out;
    for (const auto& [k, es] : best) {
        std::set<NodeId> nodes;
        for (auto e : es) nodes.insert({edges[e].u, edges[e].v});
        out.insert(NodeSet(nodes.begin(), nodes.end()));
    }
    std::set<NodeId> in_large;
    for (const auto& c : out)
        if (c.size() > 2) in_large.insert(c.begin(), c.end());
    for (auto it = out.begin(); it != out.end();)
        it = it->size() == 2 && in_large.count((*it)[0]) && in_large.count((*it)[1]) ? out.erase(it) : std::next(it);
    for (NodeId v = 0; v < n; ++v)
        if (g.degree(v) == 0) out.insert({v});
    return std::vector<NodeSet>(out.begin(), out.end());
}

struct NaiveMerge {
    struct Step {
        std::size_t left, right, merged;
        double jaccard;
    };
    std::vector<Step> steps;
    std::size_t evaluations = 0;
};

/// Rescans every active pair before each merge; same preference rules as the
/// library (max Jaccard, larger union, smaller union, smaller ids).
inline NaiveMerge naive_merge(const std::vector<NodeSet>& sets) {
    NaiveMerge out;
    std::map<std::size_t, NodeSet> active;
    for (std::size_t i = 0; i < sets.size(); ++i) active[i] = sets[i];
    std::size_t next = sets.size();
    while (active.size() > 1) {
        bool have = false;
        std::size_t ba = 0, bb = 0;
        double bj = 0.0;
        NodeSet bu;
        for (auto i = active.begin(); i != active.end(); ++i)
            for (auto j = std::next(i); j != active.end(); ++j) {
                NodeSet inter, uni;
                std::set_intersection(i->second.begin(), i->second.end(), j->second.begin(), j->second.end(),
                                      std::back_inserter(inter));
                std::set_union(i->second.begin(), i->second.end(), j->second.begin(), j->second.end(),
                               std::back_inserter(uni));
                ++out.evaluations;
                const double jac = static_cast<double>(inter.size()) / static_cast<double>(uni.size());
                bool better = !have || jac > bj ||
                              (jac == bj && (uni.size() > bu.size() || (uni.size() == bu.size() && uni < bu)));
                if (better) {
                    have = true;
                    ba = i->first;
                    bb = j->first;
                    bj = jac;
                    bu = uni;
                }
            }
        out.steps.push_back({ba, bb, next, bj});
        active.erase(ba);
        active.erase(bb);
        active[next++] = bu;
    }
    return out;
}

/// Random DAG over m binary variables with every CPT entry in {0.1, 0.9} and
/// every parent influencing its child in at least one context.
inline lsbn::GroundTruthNet random_strong_network(lsbn::Rng& rng, std::size_t m, double edge_prob = 0.35,
                                                  std::size_t max_parents = 3) {
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = m; k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);

    std::vector<lsbn::Variable> vars;
    for (std::size_t v = 0; v < m; ++v) vars.push_back({"X" + std::to_string(v), {"s0", "s1"}});
    std::vector<std::pair<NodeId, NodeId>> arcs;
    std::vector<std::vector<NodeId>> parents(m);
    for (std::size_t b = 1; b < m; ++b)
        for (std::size_t a = 0; a < b; ++a)
            if (parents[order[b]].size() < max_parents && rng.uniform() < edge_prob) {
                arcs.emplace_back(order[a], order[b]);
                parents[order[b]].push_back(order[a]);
            }

    std::vector<std::vector<std::vector<double>>> cpts(m);
    for (std::size_t v = 0; v < m; ++v) {
        const std::size_t k = parents[v].size();
        const std::size_t rows = std::size_t{1} << k;
        std::vector<int> high(rows);
        for (;;) {
            for (auto& h : high) h = rng.uniform() < 0.5;
            bool all_matter = true;
            for (std::size_t p = 0; p < k && all_matter; ++p) {
                // Row index is mixed radix with the last parent fastest.
                const std::size_t bit = std::size_t{1} << (k - 1 - p);
                bool matters = false;
                for (std::size_t r = 0; r < rows; ++r)
                    if (!(r & bit) && high[r] != high[r | bit]) matters = true;
                all_matter = matters;
            }
            if (all_matter) break;
        }
        for (std::size_t r = 0; r < rows; ++r) cpts[v].push_back(high[r] ? std::vector<double>{0.1, 0.9}
                                                                          : std::vector<double>{0.9, 0.1});
    }
    return lsbn::GroundTruthNet(std::move(vars), std::move(arcs), std::move(cpts));
}

}  // namespace oracle
