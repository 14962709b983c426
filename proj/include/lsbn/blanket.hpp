#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lsbn/common.hpp"
#include "lsbn/dataset.hpp"
#include "lsbn/weights.hpp"

namespace lsbn {

struct CiTest {
    double cmi = 0.0;      ///< conditional mutual information, nats
    double g_stat = 0.0;   ///< 2 N cmi
    double df = 0.0;
    double p_value = 1.0;
};

/// Default cap on the number of cells in a (x, y, conditioning) count table.
inline constexpr std::size_t kDefaultMaxCells = std::size_t{1} << 24;

/// G-test of x independent of y given z, df = (|X|-1)(|Y|-1) prod |Z|.
CiTest ci_test(const DiscreteDataset& data, NodeId x, NodeId y, const NodeSet& z,
               std::size_t max_cells = kDefaultMaxCells);

struct BlanketResult {
    NodeId target = 0;
    NodeSet blanket;
    /// Members in the order the forward phase admitted them, before backward removal.
    std::vector<NodeId> forward;
};

/// Neighbors whose edge weight is at least the mean weight of x's incident edges.
NodeSet mb_candidates(const WeightedGraph& g, NodeId x);

/// Incremental association Markov blanket (grow then shrink) with G-tests.
BlanketResult iamb(const DiscreteDataset& data, NodeId x, const NodeSet& candidates, double alpha = 0.05,
                   std::size_t max_cells = kDefaultMaxCells);

struct CommunityBlanket {
    NodeSet community;
    NodeSet expanded;                        ///< community plus every member's blanket
    std::map<NodeId, BlanketResult> blankets;  ///< keyed by community member

    NodeSet outer() const { return set_difference(expanded, community); }
};

/// Runs iamb for each member with candidates mb_candidates(g, x) plus the
/// other community members.
CommunityBlanket community_blanket(const DiscreteDataset& data, const WeightedGraph& g, const NodeSet& community,
                                   double alpha = 0.05);

/// Undirected graph on the community: x - y iff x in MB(y) or y in MB(x).
WeightedGraph inner_markov_graph(const NodeSet& community, const std::map<NodeId, BlanketResult>& blankets,
                                 std::size_t n);

struct SubCommunity {
    NodeSet core;
    NodeSet members;  ///< core plus the blankets of core nodes

    bool operator==(const SubCommunity&) const = default;
};

/// Default sample count: ceil(2 |community| / max_learn_size).
std::size_t default_sample_count(std::size_t community_size, std::size_t max_learn_size);

/// Random-node-neighbor sampling over the inner Markov graph. Continues until
/// every community node has been in some core and at least k samples exist.
std::vector<SubCommunity> rnn_sample(const WeightedGraph& img, const NodeSet& community,
                                     const std::map<NodeId, BlanketResult>& blankets, std::size_t k,
                                     std::size_t max_learn_size, std::uint64_t seed);

}  // namespace lsbn
