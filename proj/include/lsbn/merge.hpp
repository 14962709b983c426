#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsbn/averaging.hpp"
#include "lsbn/common.hpp"
#include "lsbn/dataset.hpp"
#include "lsbn/weights.hpp"

namespace lsbn {

/// Pair asserted in both directions by different inputs; the kept arc has the larger weight.
struct Conflict {
    NodeId kept_from;
    NodeId kept_to;
    double kept_weight;
    double dropped_weight;
    std::string stage;
};

struct EnsembleResult {
    LocalStructure structure;
    std::vector<Conflict> conflicts;
};

/// Union of sub-community structures. Arc weights are the mean over the subs
/// asserting that arc; opposite arcs keep the direction with the higher mean.
EnsembleResult ensemble_subcommunities(const std::vector<LocalStructure>& subs);

/// Union of the edges of every triangle whose three weights exceed t_tri.
WeightedGraph collect_triplets(const WeightedGraph& g, double t_tri);

struct ResolveContext {
    const FamilyScorer* scorer = nullptr;
    const WeightedGraph* weights = nullptr;
    LearnerConfig learner;
    /// Negative selects the elbow threshold of the scope's weight subgraph.
    double t_tri = -1.0;
    std::size_t max_learn_size = 15;
    std::uint64_t seed = 1;
};

struct ResolveResult {
    LocalStructure structure;
    std::vector<NodeSet> clusters;
    double t_tri = 0.0;
};

/// Re-learns every link-community cluster of the triplet graph on `scope`.
/// Pairs inside a cluster take the re-learned verdict (majority over covering
/// clusters); all other arcs pass through.
ResolveResult resolve(const LocalStructure& structure, const NodeSet& scope, const ResolveContext& ctx);

double jaccard(const NodeSet& a, const NodeSet& b);

struct MergeStep {
    std::size_t left;    ///< pool id of the first merged entry
    std::size_t right;   ///< pool id of the second merged entry
    std::size_t merged;  ///< pool id assigned to the union
    double jaccard;

    bool operator==(const MergeStep&) const = default;
};

struct MergeOrder {
    std::vector<MergeStep> steps;
    std::size_t jaccard_evaluations = 0;
    /// Cache insertions plus removals.
    std::size_t cache_operations = 0;
};

/// Greedy maximum-Jaccard merge order with an incrementally maintained cache.
/// Initial entries get ids 0..n-1, merged entries n, n+1, ... Ties prefer the
/// larger union, then the lexicographically smaller union, then smaller ids.
MergeOrder plan_merges(const std::vector<NodeSet>& communities);

struct CommunityEntry {
    NodeSet nodes;
    LocalStructure structure;
};

struct MergeResult {
    LocalStructure structure;
    MergeOrder order;
    std::vector<Conflict> conflicts;
    std::vector<ResolveResult> resolutions;
};

/// Merges community structures pairwise in plan_merges order, resolving each
/// merge on the overlap plus its structure neighbors.
MergeResult merge_all(const std::vector<CommunityEntry>& pool, const ResolveContext& ctx);

}  // namespace lsbn
