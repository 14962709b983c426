#include "lsbn/weights.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace lsbn {

// ---------------------------------------------------------------------------
// WeightedGraph

void WeightedGraph::set_weight(NodeId u, NodeId v, double w) {
    if (u == v) throw Error(ErrorKind::InvalidInput, "self-loop on node " + std::to_string(u));
    if (u >= adj_.size() || v >= adj_.size()) throw Error(ErrorKind::InvalidInput, "edge endpoint out of range");
    auto [it, inserted] = adj_[u].insert_or_assign(v, w);
    adj_[v][u] = w;
    if (inserted) ++edge_count_;
}

void WeightedGraph::remove_edge(NodeId u, NodeId v) {
    if (adj_[u].erase(v)) {
        adj_[v].erase(u);
        --edge_count_;
    }
}

std::optional<double> WeightedGraph::weight(NodeId u, NodeId v) const {
    if (u >= adj_.size()) return std::nullopt;
    auto it = adj_[u].find(v);
    if (it == adj_[u].end()) return std::nullopt;
    return it->second;
}

std::vector<WeightedEdge> WeightedGraph::edges() const {
    std::vector<WeightedEdge> out;
    out.reserve(edge_count_);
    for (NodeId u = 0; u < adj_.size(); ++u)
        for (auto it = adj_[u].upper_bound(u); it != adj_[u].end(); ++it) out.push_back({u, it->first, it->second});
    return out;
}

WeightedGraph WeightedGraph::induced(const NodeSet& nodes) const {
    WeightedGraph sub(num_nodes());
    for (NodeId u : nodes)
        for (auto it = adj_[u].upper_bound(u); it != adj_[u].end(); ++it)
            if (contains(nodes, it->first)) sub.set_weight(u, it->first, it->second);
    return sub;
}

void write_graph(std::ostream& out, const WeightedGraph& g) {
    out << "nodes\t" << g.num_nodes() << '\n';
    const auto old = out.precision(17);
    for (const auto& e : g.edges()) out << e.u << '\t' << e.v << '\t' << e.weight << '\n';
    out.precision(old);
}

WeightedGraph read_graph(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::MalformedDocument, "empty graph file");
    std::istringstream header(line);
    std::string tag;
    std::size_t n = 0;
    if (!(header >> tag >> n) || tag != "nodes")
        throw Error(ErrorKind::MalformedDocument, "graph header must be 'nodes<TAB><n>'");
    WeightedGraph g(n);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        NodeId u = 0, v = 0;
        double w = 0.0;
        if (!(row >> u >> v >> w))
            throw Error(ErrorKind::MalformedDocument, "graph line " + std::to_string(line_no) + " is malformed");
        g.set_weight(u, v, w);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Information measures

double entropy(std::span<const std::size_t> counts) {
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    if (total <= 0.0) throw Error(ErrorKind::InvalidInput, "entropy of an all-zero count vector");
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

namespace {

std::vector<std::size_t> marginal_counts(const DiscreteDataset& data, NodeId j) {
    std::vector<std::size_t> counts(data.cardinality(j));
    for (State s : data.column(j)) ++counts[s];
    return counts;
}

double mi_from_counts(const std::vector<std::size_t>& joint, const std::vector<std::size_t>& ci,
                      const std::vector<std::size_t>& cj, double n) {
    double mi = 0.0;
    const std::size_t kj = cj.size();
    for (std::size_t a = 0; a < ci.size(); ++a)
        for (std::size_t b = 0; b < kj; ++b) {
            const std::size_t nab = joint[a * kj + b];
            if (nab == 0) continue;
            const double pab = static_cast<double>(nab) / n;
            mi += pab * std::log(static_cast<double>(nab) * n /
                                 (static_cast<double>(ci[a]) * static_cast<double>(cj[b])));
        }
    return mi;
}

}  // namespace

double mutual_information(const DiscreteDataset& data, NodeId i, NodeId j) {
    if (i == j) throw Error(ErrorKind::InvalidInput, "mutual_information needs distinct variables");
    const std::size_t n = data.num_rows();
    if (n == 0) throw Error(ErrorKind::InvalidInput, "mutual_information on an empty dataset");
    const std::size_t kj = data.cardinality(j);
    std::vector<std::size_t> joint(data.cardinality(i) * kj);
    auto xi = data.column(i);
    auto xj = data.column(j);
    for (std::size_t r = 0; r < n; ++r) ++joint[xi[r] * kj + xj[r]];
    return mi_from_counts(joint, marginal_counts(data, i), marginal_counts(data, j), static_cast<double>(n));
}

std::vector<double> pagerank(const WeightedGraph& g, double damping, double tol) {
    const std::size_t n = g.num_nodes();
    if (n == 0) throw Error(ErrorKind::InvalidInput, "pagerank on an empty graph");
    if (!(damping > 0.0 && damping < 1.0)) throw Error(ErrorKind::InvalidInput, "damping must be in (0, 1)");
    std::vector<double> strength(n, 0.0);
    for (NodeId v = 0; v < n; ++v)
        for (const auto& [u, w] : g.neighbors(v)) strength[v] += w;

    std::vector<double> rank(n, 1.0 / static_cast<double>(n)), next(n);
    const double teleport = (1.0 - damping) / static_cast<double>(n);
    for (int iter = 0; iter < 100000; ++iter) {
        double dangling = 0.0;
        for (NodeId v = 0; v < n; ++v)
            if (strength[v] <= 0.0) dangling += rank[v];
        std::fill(next.begin(), next.end(), teleport + damping * dangling / static_cast<double>(n));
        for (NodeId v = 0; v < n; ++v) {
            if (strength[v] <= 0.0) continue;
            const double share = damping * rank[v] / strength[v];
            for (const auto& [u, w] : g.neighbors(v)) next[u] += share * w;
        }
        const double total = std::accumulate(next.begin(), next.end(), 0.0);
        double delta = 0.0;
        for (NodeId v = 0; v < n; ++v) {
            next[v] /= total;
            delta += std::abs(next[v] - rank[v]);
        }
        rank.swap(next);
        if (delta < tol) break;
    }
    return rank;
}

// ---------------------------------------------------------------------------
// Weight functions

const std::vector<WeightFunction>& all_weight_functions() {
    static const std::vector<WeightFunction> fns = {WeightFunction::MI,      WeightFunction::MIPlus,
                                                    WeightFunction::MISqrt,  WeightFunction::MIPr,
                                                    WeightFunction::MISn,    WeightFunction::Pearson,
                                                    WeightFunction::PearsonSn};
    return fns;
}

std::string to_string(WeightFunction fn) {
    switch (fn) {
        case WeightFunction::MI: return "MI";
        case WeightFunction::MIPlus: return "MI_plus";
        case WeightFunction::MISqrt: return "MI_sqrt";
        case WeightFunction::MIPr: return "MI_pr";
        case WeightFunction::MISn: return "MI_sn";
        case WeightFunction::Pearson: return "Pearson";
        case WeightFunction::PearsonSn: return "Pearson_sn";
    }
    return "?";
}

WeightFunction parse_weight_function(const std::string& name) {
    for (auto fn : all_weight_functions())
        if (to_string(fn) == name) return fn;
    throw Error(ErrorKind::InvalidInput, "unknown weight function '" + name + "'");
}

namespace {

WeightedGraph mi_graph(const DiscreteDataset& data) {
    const std::size_t v = data.num_variables();
    const std::size_t n = data.num_rows();
    if (n == 0) throw Error(ErrorKind::InvalidInput, "weight functions need at least one row");
    std::vector<std::vector<std::size_t>> marginals(v);
    for (NodeId j = 0; j < v; ++j) marginals[j] = marginal_counts(data, j);
    WeightedGraph g(v);
    std::vector<std::size_t> joint;
    for (NodeId i = 0; i < v; ++i) {
        auto xi = data.column(i);
        for (NodeId j = i + 1; j < v; ++j) {
            const std::size_t kj = data.cardinality(j);
            joint.assign(data.cardinality(i) * kj, 0);
            auto xj = data.column(j);
            for (std::size_t r = 0; r < n; ++r) ++joint[xi[r] * kj + xj[r]];
            g.set_weight(i, j, mi_from_counts(joint, marginals[i], marginals[j], static_cast<double>(n)));
        }
    }
    return g;
}

std::vector<double> entropies(const DiscreteDataset& data) {
    std::vector<double> h(data.num_variables());
    for (NodeId j = 0; j < data.num_variables(); ++j) {
        h[j] = entropy(marginal_counts(data, j));
        if (h[j] <= 0.0)
            throw Error(ErrorKind::InvalidInput, "variable '" + data.name(j) + "' has zero entropy");
    }
    return h;
}

WeightedGraph pearson_graph(const DiscreteDataset& data) {
    const std::size_t v = data.num_variables();
    const double n = static_cast<double>(data.num_rows());
    std::vector<double> mean(v, 0.0), sd(v, 0.0);
    for (NodeId j = 0; j < v; ++j) {
        for (State s : data.column(j)) mean[j] += s;
        mean[j] /= n;
        for (State s : data.column(j)) sd[j] += (s - mean[j]) * (s - mean[j]);
        sd[j] = std::sqrt(sd[j] / n);
        if (sd[j] <= 0.0) throw Error(ErrorKind::InvalidInput, "variable '" + data.name(j) + "' is constant");
    }
    WeightedGraph g(v);
    for (NodeId i = 0; i < v; ++i) {
        auto xi = data.column(i);
        for (NodeId j = i + 1; j < v; ++j) {
            auto xj = data.column(j);
            double cov = 0.0;
            for (std::size_t r = 0; r < xi.size(); ++r) cov += (xi[r] - mean[i]) * (xj[r] - mean[j]);
            g.set_weight(i, j, std::abs(cov / n / (sd[i] * sd[j])));
        }
    }
    return g;
}

WeightedGraph standardize(const WeightedGraph& g) {
    const auto edges = g.edges();
    double mean = 0.0;
    for (const auto& e : edges) mean += e.weight;
    mean /= static_cast<double>(edges.size());
    double var = 0.0;
    for (const auto& e : edges) var += (e.weight - mean) * (e.weight - mean);
    const double sd = std::sqrt(var / static_cast<double>(edges.size()));
    if (!(sd > 0.0)) throw Error(ErrorKind::InvalidInput, "standard normalization with zero standard deviation");
    WeightedGraph out(g.num_nodes());
    for (const auto& e : edges) out.set_weight(e.u, e.v, (e.weight - mean) / sd);
    return out;
}

}  // namespace

WeightedGraph weight_matrix(const DiscreteDataset& data, WeightFunction fn) {
    if (data.num_variables() < 2) throw Error(ErrorKind::InvalidInput, "weight functions need >= 2 variables");
    switch (fn) {
        case WeightFunction::MI: return mi_graph(data);
        case WeightFunction::MIPlus:
        case WeightFunction::MISqrt: {
            const auto h = entropies(data);
            WeightedGraph g = mi_graph(data);
            for (const auto& e : g.edges()) {
                const double w = fn == WeightFunction::MIPlus ? 2.0 * e.weight / (h[e.u] + h[e.v])
                                                              : e.weight / std::sqrt(h[e.u] * h[e.v]);
                g.set_weight(e.u, e.v, w);
            }
            return g;
        }
        case WeightFunction::MIPr: {
            WeightedGraph g = mi_graph(data);
            const auto pr = pagerank(g);
            for (const auto& e : g.edges()) g.set_weight(e.u, e.v, e.weight / std::sqrt(pr[e.u] * pr[e.v]));
            return g;
        }
        case WeightFunction::MISn: return standardize(mi_graph(data));
        case WeightFunction::Pearson: return pearson_graph(data);
        case WeightFunction::PearsonSn: return standardize(pearson_graph(data));
    }
    throw Error(ErrorKind::InvalidInput, "unknown weight function");
}

WeightedGraph prune(const WeightedGraph& g, double threshold) {
    WeightedGraph out(g.num_nodes());
    for (const auto& e : g.edges())
        if (e.weight >= threshold) out.set_weight(e.u, e.v, e.weight);
    return out;
}

Truncation elbow_truncate(const WeightedGraph& g) {
    auto edges = g.edges();
    if (edges.empty()) return {0.0, g, true};
    std::vector<double> w;
    w.reserve(edges.size());
    for (const auto& e : edges) w.push_back(e.weight);
    std::sort(w.begin(), w.end(), std::greater<>());
    const double hi = w.front(), lo = w.back();
    if (hi == lo) return {hi, g, true};

    // Scaled curve runs from (0, 1) to (1, 0); the chord is x + y = 1, so the
    // distance of (x, y) is |x + y - 1| / sqrt(2).
    const double last = static_cast<double>(w.size() - 1);
    std::size_t best = 0;
    double best_dist = -1.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double x = static_cast<double>(k) / last;
        const double y = (w[k] - lo) / (hi - lo);
        const double dist = std::abs(x + y - 1.0);
        if (dist > best_dist) {
            best_dist = dist;
            best = k;
        }
    }
    const double threshold = w[best];
    return {threshold, prune(g, threshold), false};
}

}  // namespace lsbn
