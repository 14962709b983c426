#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lsbn/common.hpp"
#include "lsbn/dataset.hpp"

namespace lsbn {

struct DirectedEdge {
    NodeId from;
    NodeId to;
    double weight = 1.0;  ///< posterior probability, or 1 for point estimates

    bool operator==(const DirectedEdge&) const = default;
};

/// Directed structure over a node subset. Edges are kept sorted by (from, to).
struct LocalStructure {
    NodeSet nodes;
    std::vector<DirectedEdge> edges;
    long community = -1;

    void add_edge(NodeId from, NodeId to, double weight = 1.0);
    const DirectedEdge* find(NodeId from, NodeId to) const;
    bool has_arc(NodeId from, NodeId to) const { return find(from, to) != nullptr; }
    bool adjacent(NodeId a, NodeId b) const { return has_arc(a, b) || has_arc(b, a); }
    void sort_edges();
};

/// `i -> j` per line (optionally followed by the weight).
void write_structure(std::ostream& out, const LocalStructure& s, bool with_weights = true);
LocalStructure read_structure(std::istream& in);

/// Posterior edge probabilities over `nodes`; entry (i, j) is for nodes[i] -> nodes[j].
struct EdgePosterior {
    NodeSet nodes;
    std::vector<double> p;

    EdgePosterior() = default;
    explicit EdgePosterior(NodeSet ns) : nodes(std::move(ns)), p(nodes.size() * nodes.size(), 0.0) {}

    std::size_t size() const { return nodes.size(); }
    double& at(std::size_t i, std::size_t j) { return p[i * nodes.size() + j]; }
    double at(std::size_t i, std::size_t j) const { return p[i * nodes.size() + j]; }
};

/// Dense matrix with a `posterior <m>` header line, then a `nodes` line.
void write_posterior(std::ostream& out, const EdgePosterior& post);
EdgePosterior read_posterior(std::istream& in);

/// Permutation of local indices 0..m-1; earlier entries may be parents of later ones.
using Order = std::vector<std::size_t>;

inline constexpr std::size_t kDefaultMaxFamilyCells = std::size_t{1} << 24;

/// Log BDeu marginal likelihood of one family, computed directly.
double bdeu_family_score(const DiscreteDataset& data, NodeId child, const NodeSet& parents, double ess,
                         std::size_t max_cells = kDefaultMaxFamilyCells);

/// Cached BDeu family scores. Lookups may run concurrently.
class FamilyScorer {
public:
    FamilyScorer(const DiscreteDataset& data, double ess, std::size_t max_cells = kDefaultMaxFamilyCells)
        : data_(&data), ess_(ess), max_cells_(max_cells) {}

    double score(NodeId child, const NodeSet& parents) const;
    /// Sum of family scores of a DAG given as (parent, child) arcs over `nodes`.
    double structure_score(const NodeSet& nodes, const std::vector<std::pair<NodeId, NodeId>>& arcs) const;

    const DiscreteDataset& data() const { return *data_; }
    double ess() const { return ess_; }
    std::size_t cache_size() const;

private:
    const DiscreteDataset* data_;
    double ess_;
    std::size_t max_cells_;
    mutable std::shared_mutex mutex_;
    mutable std::map<std::pair<NodeId, NodeSet>, double> cache_;
};

struct AveragingOptions {
    std::size_t max_parents = 3;
    double ess = 10.0;
    /// Cap on admissible parent sets per child.
    std::size_t family_budget = std::size_t{1} << 20;
};

/// Precomputed family scores for every child in `nodes` and every parent set
/// of size <= max_parents drawn from the other nodes (at most 64 nodes).
class OrderScorer {
public:
    OrderScorer(const FamilyScorer& scorer, NodeSet nodes, const AveragingOptions& options);

    std::size_t size() const { return nodes_.size(); }
    const NodeSet& nodes() const { return nodes_; }

    /// log P(D | order) = sum_i log sum_U exp(score(i, U)) over admissible U.
    double log_order_score(const Order& order) const;
    /// Per-child term of log_order_score for child at local index i given a predecessor mask.
    double child_log_score(std::size_t i, std::uint64_t predecessors) const;
    /// P(j -> i | D, order) for all pairs.
    EdgePosterior edge_posterior(const Order& order) const;

private:
    struct Family {
        std::uint64_t mask;
        double score;
    };
    NodeSet nodes_;
    std::vector<std::vector<Family>> families_;
};

EdgePosterior feature_posterior_given_order(const FamilyScorer& scorer, const NodeSet& nodes, const Order& order,
                                            const AveragingOptions& options = {});

struct McmcOptions {
    std::size_t samples = 100;  ///< T, kept orders
    std::size_t burn_in = 0;    ///< 0 selects 10 m
    std::size_t thin = 0;       ///< 0 selects m
    std::uint64_t seed = 1;
};

struct McmcResult {
    EdgePosterior posterior;
    std::size_t accepted = 0;
    std::size_t proposals = 0;
};

/// Metropolis-Hastings over orders with uniform transposition proposals;
/// averages edge_posterior over kept orders.
McmcResult order_mcmc(const FamilyScorer& scorer, const NodeSet& nodes, const McmcOptions& mcmc,
                      const AveragingOptions& options = {});

/// Average over all m! orders weighted by P(D | order). Small m only.
EdgePosterior exact_order_posterior(const FamilyScorer& scorer, const NodeSet& nodes,
                                    const AveragingOptions& options = {});

/// Keeps i -> j iff its posterior exceeds t_avg; of two qualifying directions
/// the larger wins (ties go to the lower-index source).
LocalStructure threshold_edges(const EdgePosterior& post, double t_avg);

/// Steepest-ascent hill climbing over add/delete/reverse moves under BDeu.
LocalStructure greedy_learn(const FamilyScorer& scorer, const NodeSet& nodes, const AveragingOptions& options = {});

enum class LearnerKind { ModelAveraging, Greedy };

std::string to_string(LearnerKind kind);
LearnerKind parse_learner(const std::string& name);

struct LearnerConfig {
    LearnerKind kind = LearnerKind::ModelAveraging;
    AveragingOptions averaging;
    McmcOptions mcmc;
    double t_avg = 0.5;
};

/// Runs the configured learner on `nodes`; `seed` overrides the MCMC seed.
LocalStructure learn_structure(const FamilyScorer& scorer, const NodeSet& nodes, const LearnerConfig& config,
                               std::uint64_t seed);

}  // namespace lsbn
