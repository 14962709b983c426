#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lsbn/common.hpp"
#include "lsbn/dataset.hpp"
#include "lsbn/weights.hpp"

namespace lsbn {

/// Overlapping node communities. Every node belongs to at least one community.
struct Partition {
    std::size_t n = 0;
    std::vector<NodeSet> communities;

    /// Sorts members, drops empty and duplicate communities (first occurrence wins).
    void normalize();
    /// Throws InvalidInput unless every node is covered and no community is empty.
    void validate() const;

    bool operator==(const Partition&) const = default;
};

/// One line per community, space-separated node indices.
void write_partition(std::ostream& out, const Partition& p);
Partition read_partition(std::istream& in, std::size_t n = 0);

/// Stacked membership rows of the communities containing `node`, in
/// partition order then community order.
struct PartitionSupportMatrix {
    NodeId node = 0;
    std::size_t n = 0;
    std::vector<std::vector<std::uint8_t>> rows;
};

/// Link-community detection: single-linkage clustering of edges by Tanimoto
/// similarity of inclusive weighted neighborhoods, cut at maximum partition
/// density. When `max_size` > 0 the cut is restricted to dendrogram levels
/// whose clusters all have at most `max_size` nodes. Ties in density resolve
/// to the coarser level.
Partition link_communities(const WeightedGraph& g, std::size_t max_size = 0);

PartitionSupportMatrix build_psm(const std::vector<Partition>& partitions, NodeId v);

/// c(node -> v): share of the PSM's rows with column v set.
double co_occurrence(const PartitionSupportMatrix& psm, NodeId v);

/// Consensus graph: weight(u, v) is the mean of the two directed row
/// fractions c(u->v), c(v->u). Pairs with zero weight or weight < t_co are dropped.
WeightedGraph second_order_network(const std::vector<PartitionSupportMatrix>& psms, double t_co);

struct RopartOptions {
    std::vector<WeightFunction> functions = all_weight_functions();
    double t_co = 0.5;
    std::size_t max_comm = 25;
};

struct RopartResult {
    Partition partition;
    std::vector<Partition> first_order;
    std::vector<Truncation> truncations;
    WeightedGraph second_order;
};

/// Map, prune, partition per weight function, then partition the
/// second-order network. Oversized communities are re-partitioned once with
/// a size-constrained cut.
RopartResult ropart(const DiscreteDataset& data, const RopartOptions& options = {});

}  // namespace lsbn
