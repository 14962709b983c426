#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsbn/common.hpp"
#include "lsbn/dataset.hpp"

namespace lsbn {

struct WeightedEdge {
    NodeId u;
    NodeId v;
    double weight;

    bool operator==(const WeightedEdge&) const = default;
};

/// Undirected weighted graph on nodes 0..n-1. Each pair is stored once, so
/// weight(u, v) == weight(v, u) always holds. Absent pairs mean no edge.
class WeightedGraph {
public:
    WeightedGraph() = default;
    explicit WeightedGraph(std::size_t n) : adj_(n) {}

    std::size_t num_nodes() const { return adj_.size(); }
    std::size_t num_edges() const { return edge_count_; }

    void set_weight(NodeId u, NodeId v, double w);
    void remove_edge(NodeId u, NodeId v);
    std::optional<double> weight(NodeId u, NodeId v) const;
    bool has_edge(NodeId u, NodeId v) const { return weight(u, v).has_value(); }

    const std::map<NodeId, double>& neighbors(NodeId v) const { return adj_[v]; }
    std::size_t degree(NodeId v) const { return adj_[v].size(); }

    /// Edges with u < v in lexicographic order.
    std::vector<WeightedEdge> edges() const;

    /// Subgraph keeping only edges with both endpoints in `nodes`; node ids are preserved.
    WeightedGraph induced(const NodeSet& nodes) const;

    bool operator==(const WeightedGraph&) const = default;

private:
    std::vector<std::map<NodeId, double>> adj_;
    std::size_t edge_count_ = 0;
};

/// Edge list format: a `nodes<TAB>n` header, then `i<TAB>j<TAB>weight` per edge.
void write_graph(std::ostream& out, const WeightedGraph& g);
WeightedGraph read_graph(std::istream& in);

/// Shannon entropy in nats of a count vector.
double entropy(std::span<const std::size_t> counts);

/// Empirical mutual information in nats.
double mutual_information(const DiscreteDataset& data, NodeId i, NodeId j);

std::vector<double> pagerank(const WeightedGraph& g, double damping = 0.85, double tol = 1e-10);

enum class WeightFunction { MI, MIPlus, MISqrt, MIPr, MISn, Pearson, PearsonSn };

const std::vector<WeightFunction>& all_weight_functions();
std::string to_string(WeightFunction fn);
WeightFunction parse_weight_function(const std::string& name);

/// Complete weighted graph under one weight function.
WeightedGraph weight_matrix(const DiscreteDataset& data, WeightFunction fn);

/// Keeps edges with weight >= threshold.
WeightedGraph prune(const WeightedGraph& g, double threshold);

struct Truncation {
    double threshold = 0.0;
    WeightedGraph pruned;
    bool degenerate = false;
};

/// Elbow of the descending sorted-weight curve: the point farthest from the
/// chord joining its endpoints, with both axes scaled to [0, 1].
Truncation elbow_truncate(const WeightedGraph& g);

}  // namespace lsbn
