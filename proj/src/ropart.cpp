#include "lsbn/ropart.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

namespace lsbn {

void Partition::normalize() {
    std::vector<NodeSet> out;
    std::set<NodeSet> seen;
    for (auto& c : communities) {
        NodeSet s = make_set(std::move(c));
        if (s.empty() || !seen.insert(s).second) continue;
        out.push_back(std::move(s));
    }
    communities = std::move(out);
}

void Partition::validate() const {
    std::vector<bool> covered(n, false);
    for (const auto& c : communities) {
        if (c.empty()) throw Error(ErrorKind::InvalidInput, "empty community");
        for (NodeId v : c) {
            if (v >= n) throw Error(ErrorKind::InvalidInput, "community member out of range");
            covered[v] = true;
        }
    }
    for (NodeId v = 0; v < n; ++v)
        if (!covered[v]) throw Error(ErrorKind::InvalidInput, "node " + std::to_string(v) + " is in no community");
}

void write_partition(std::ostream& out, const Partition& p) {
    for (const auto& c : p.communities) {
        for (std::size_t i = 0; i < c.size(); ++i) out << (i ? " " : "") << c[i];
        out << '\n';
    }
}

Partition read_partition(std::istream& in, std::size_t n) {
    Partition p;
    std::string line;
    std::size_t max_node = 0;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        NodeSet c;
        NodeId v;
        while (row >> v) {
            c.push_back(v);
            max_node = std::max(max_node, v + 1);
        }
        if (!c.empty()) p.communities.push_back(make_set(std::move(c)));
    }
    p.n = n ? n : max_node;
    p.normalize();
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// Link communities

namespace {

struct EdgePair {
    double similarity;
    std::size_t a;
    std::size_t b;
};

double tanimoto(const std::map<NodeId, double>& x, const std::map<NodeId, double>& y) {
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (const auto& [k, w] : x) nx += w * w;
    for (const auto& [k, w] : y) ny += w * w;
    auto ix = x.begin();
    auto iy = y.begin();
    while (ix != x.end() && iy != y.end()) {
        if (ix->first < iy->first) {
            ++ix;
        } else if (iy->first < ix->first) {
            ++iy;
        } else {
            dot += ix->second * iy->second;
            ++ix;
            ++iy;
        }
    }
    const double denom = nx + ny - dot;
    return denom > 0.0 ? dot / denom : 0.0;
}

class EdgeClusters {
public:
    explicit EdgeClusters(const std::vector<WeightedEdge>& edges)
        : parent_(edges.size()), edges_(edges.size(), 1), nodes_(edges.size()) {
        std::iota(parent_.begin(), parent_.end(), 0);
        for (std::size_t e = 0; e < edges.size(); ++e) nodes_[e] = {edges[e].u, edges[e].v};
    }

    std::size_t find(std::size_t e) {
        while (parent_[e] != e) {
            parent_[e] = parent_[parent_[e]];
            e = parent_[e];
        }
        return e;
    }

    /// Returns the change in the unnormalized density sum, or nothing if already joined.
    std::optional<double> unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return std::nullopt;
        if (nodes_[a].size() < nodes_[b].size()) std::swap(a, b);
        const double before = density_term(a) + density_term(b);
        parent_[b] = a;
        edges_[a] += edges_[b];
        NodeSet merged = set_union(nodes_[a], nodes_[b]);
        nodes_[a] = std::move(merged);
        nodes_[b].clear();
        nodes_[b].shrink_to_fit();
        largest_ = std::max(largest_, nodes_[a].size());
        return density_term(a) - before;
    }

    std::size_t largest() const { return largest_; }
    const NodeSet& nodes(std::size_t root) const { return nodes_[root]; }

private:
    double density_term(std::size_t root) const {
        const double m = static_cast<double>(edges_[root]);
        const double n = static_cast<double>(nodes_[root].size());
        if (n <= 2.0) return 0.0;
        return m * (m - (n - 1.0)) / ((n - 2.0) * (n - 1.0));
    }

    std::vector<std::size_t> parent_;
    std::vector<std::size_t> edges_;
    std::vector<NodeSet> nodes_;
    std::size_t largest_ = 2;
};

}  // namespace

Partition link_communities(const WeightedGraph& g, std::size_t max_size) {
    const std::size_t n = g.num_nodes();
    Partition result{n, {}};
    const auto edges = g.edges();
    if (edges.empty()) {
        for (NodeId v = 0; v < n; ++v) result.communities.push_back({v});
        return result;
    }

    // Inclusive neighborhoods: own entry is the mean incident weight.
    std::vector<std::map<NodeId, double>> inclusive(n);
    for (NodeId v = 0; v < n; ++v) {
        const auto& nb = g.neighbors(v);
        if (nb.empty()) continue;
        inclusive[v] = nb;
        double sum = 0.0;
        for (const auto& [u, w] : nb) sum += w;
        inclusive[v][v] = sum / static_cast<double>(nb.size());
    }

    std::map<std::pair<NodeId, NodeId>, std::size_t> edge_index;
    for (std::size_t e = 0; e < edges.size(); ++e) edge_index[{edges[e].u, edges[e].v}] = e;
    auto index_of = [&](NodeId a, NodeId b) { return edge_index.at({std::min(a, b), std::max(a, b)}); };

    std::vector<EdgePair> pairs;
    for (NodeId k = 0; k < n; ++k) {
        const auto& nb = g.neighbors(k);
        for (auto i = nb.begin(); i != nb.end(); ++i)
            for (auto j = std::next(i); j != nb.end(); ++j) {
                std::size_t a = index_of(k, i->first), b = index_of(k, j->first);
                if (a > b) std::swap(a, b);
                pairs.push_back({tanimoto(inclusive[i->first], inclusive[j->first]), a, b});
            }
    }
    std::sort(pairs.begin(), pairs.end(), [](const EdgePair& x, const EdgePair& y) {
        return std::tie(y.similarity, x.a, x.b) < std::tie(x.similarity, y.a, y.b);
    });

    // Scan merge levels, remembering how many pairs were applied at the best cut.
    const double scale = 2.0 / static_cast<double>(edges.size());
    std::size_t best_prefix = 0;
    double best_density = 0.0;
    {
        EdgeClusters clusters(edges);
        double density_sum = 0.0;
        for (std::size_t p = 0; p < pairs.size();) {
            std::size_t q = p;
            while (q < pairs.size() && pairs[q].similarity == pairs[p].similarity) {
                if (auto delta = clusters.unite(pairs[q].a, pairs[q].b)) density_sum += *delta;
                ++q;
            }
            if (max_size > 0 && clusters.largest() > max_size) break;
            const double density = scale * density_sum;
            if (density >= best_density - 1e-12) {
                best_density = std::max(best_density, density);
                best_prefix = q;
            }
            p = q;
        }
    }

    EdgeClusters clusters(edges);
    for (std::size_t p = 0; p < best_prefix; ++p) clusters.unite(pairs[p].a, pairs[p].b);
    std::vector<std::size_t> roots;
    for (std::size_t e = 0; e < edges.size(); ++e)
        if (clusters.find(e) == e) roots.push_back(e);
    // Order communities by their smallest member set for determinism.
    for (std::size_t r : roots) result.communities.push_back(clusters.nodes(r));
    // A lone edge whose endpoints both sit in larger communities is a bridge, not a community.
    std::vector<std::size_t> covered(n, 0);
    for (const auto& c : result.communities)
        if (c.size() > 2)
            for (NodeId v : c) ++covered[v];
    std::erase_if(result.communities,
                  [&](const NodeSet& c) { return c.size() == 2 && covered[c[0]] > 0 && covered[c[1]] > 0; });
    for (NodeId v = 0; v < n; ++v)
        if (g.degree(v) == 0) result.communities.push_back({v});
    std::sort(result.communities.begin(), result.communities.end());
    result.normalize();
    return result;
}

// ---------------------------------------------------------------------------
// Partition support matrices

PartitionSupportMatrix build_psm(const std::vector<Partition>& partitions, NodeId v) {
    PartitionSupportMatrix psm;
    psm.node = v;
    psm.n = partitions.empty() ? 0 : partitions.front().n;
    for (const auto& p : partitions) {
        if (p.n != psm.n) throw Error(ErrorKind::InvalidInput, "partitions disagree on node count");
        for (const auto& c : p.communities) {
            if (!contains(c, v)) continue;
            std::vector<std::uint8_t> row(psm.n, 0);
            for (NodeId u : c) row[u] = 1;
            psm.rows.push_back(std::move(row));
        }
    }
    return psm;
}

double co_occurrence(const PartitionSupportMatrix& psm, NodeId v) {
    if (v >= psm.n) throw Error(ErrorKind::InvalidInput, "column outside the PSM");
    if (psm.rows.empty()) return 0.0;
    double hits = 0.0;
    for (const auto& row : psm.rows) hits += row[v];
    return hits / static_cast<double>(psm.rows.size());
}

WeightedGraph second_order_network(const std::vector<PartitionSupportMatrix>& psms, double t_co) {
    if (!(t_co >= 0.0 && t_co <= 1.0)) throw Error(ErrorKind::InvalidInput, "t_co must be in [0, 1]");
    const std::size_t n = psms.size();
    std::vector<std::vector<double>> fraction(n, std::vector<double>(n, 0.0));
    for (NodeId u = 0; u < n; ++u) {
        const auto& psm = psms[u];
        if (psm.node != u || psm.n != n)
            throw Error(ErrorKind::InvalidInput, "PSM list must cover every node in order");
        for (NodeId v = 0; v < n; ++v) fraction[u][v] = co_occurrence(psm, v);
    }
    WeightedGraph g(n);
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v) {
            const double w = 0.5 * (fraction[u][v] + fraction[v][u]);
            if (w > 0.0 && w >= t_co) g.set_weight(u, v, w);
        }
    return g;
}

// ---------------------------------------------------------------------------
// ROPART

RopartResult ropart(const DiscreteDataset& data, const RopartOptions& options) {
    if (options.functions.empty()) throw Error(ErrorKind::InvalidInput, "ropart needs at least one weight function");
    RopartResult result;
    const std::size_t n = data.num_variables();
    for (WeightFunction fn : options.functions) {
        Truncation t = elbow_truncate(weight_matrix(data, fn));
        result.first_order.push_back(link_communities(t.pruned));
        result.truncations.push_back(std::move(t));
    }
    std::vector<PartitionSupportMatrix> psms;
    psms.reserve(n);
    for (NodeId v = 0; v < n; ++v) psms.push_back(build_psm(result.first_order, v));
    result.second_order = second_order_network(psms, options.t_co);

    Partition coarse = link_communities(result.second_order);
    Partition final_partition{n, {}};
    for (const auto& c : coarse.communities) {
        if (options.max_comm == 0 || c.size() <= options.max_comm) {
            final_partition.communities.push_back(c);
            continue;
        }
        Partition split = link_communities(result.second_order.induced(c), options.max_comm);
        for (const auto& sub : split.communities)
            if (contains(c, sub.front()) && std::includes(c.begin(), c.end(), sub.begin(), sub.end()))
                final_partition.communities.push_back(sub);
    }
    final_partition.normalize();
    final_partition.validate();
    result.partition = std::move(final_partition);
    return result;
}

}  // namespace lsbn
