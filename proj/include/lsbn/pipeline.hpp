#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lsbn/averaging.hpp"
#include "lsbn/blanket.hpp"
#include "lsbn/dataset.hpp"
#include "lsbn/merge.hpp"
#include "lsbn/ropart.hpp"
#include "lsbn/weights.hpp"

namespace lsbn {

struct EvalReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;
    double precision = 0.0;  ///< percent
    double recall = 0.0;     ///< percent
    double f_score = 0.0;    ///< percent
    std::vector<std::pair<std::string, double>> timings;  ///< stage, seconds
    nlohmann::json config;
};

/// Fills precision, recall and F from tp/fp/fn; 0 where a ratio is undefined.
EvalReport metrics_from_counts(std::size_t tp, std::size_t fn, std::size_t fp);

/// Skeleton comparison by default; `directed` compares arcs.
EvalReport score_structure(const LocalStructure& learned, const GroundTruthNet& truth, bool directed = false);

nlohmann::json to_json(const EvalReport& r);

struct PartitionDiagnostics {
    double avg_shortest_path = 0.0;
    std::size_t diameter = 0;
    /// Community sizes in bins 1-5, 6-10, ..., 46-50, >50.
    std::vector<std::size_t> size_histogram = std::vector<std::size_t>(11, 0);
};

/// Shortest paths on each community's induced unweighted subgraph. The
/// average is over communities with at least one connected pair; the
/// diameter is the largest over all communities.
PartitionDiagnostics partition_diagnostics(const Partition& p, const WeightedGraph& g);

nlohmann::json to_json(const PartitionDiagnostics& d);

struct PipelineConfig {
    std::uint64_t seed = 1;
    std::vector<WeightFunction> weight_functions = all_weight_functions();
    double t_co = 0.5;
    double t_avg = 0.5;
    double alpha = 0.05;
    double ess = 10.0;
    std::size_t max_parents = 3;
    std::size_t max_comm = 25;
    std::size_t max_learn_size = 15;
    LearnerKind learner = LearnerKind::ModelAveraging;
    std::size_t mcmc_samples = 100;
    std::size_t mcmc_burn_in = 0;  ///< 0 selects 10 m
    std::size_t mcmc_thin = 0;     ///< 0 selects m
    std::string network_path;
    std::string dataset_path;
    std::size_t samples = 20000;
    bool directed_eval = false;
    std::string emit_intermediate;  ///< directory; empty disables
    std::size_t threads = 0;        ///< 0 selects hardware concurrency

    LearnerConfig learner_config() const;
    RopartOptions ropart_options() const;
};

/// Unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);
nlohmann::json to_json(const PipelineConfig& c);

/// Error raised by run_pipeline; what() is "<stage>: <cause>".
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& cause)
        : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct CommunityRun {
    NodeSet community;
    CommunityBlanket blanket;
    std::vector<SubCommunity> samples;
    std::vector<LocalStructure> sub_structures;
    EnsembleResult ensemble;
    ResolveResult resolved;
};

/// Blanket discovery, sub-community sampling, learning, ensemble and
/// resolution for one community. `weights` is the MI graph.
CommunityRun learn_community(const DiscreteDataset& data, const WeightedGraph& weights, const FamilyScorer& scorer,
                             const NodeSet& community, const PipelineConfig& config, std::uint64_t seed);

struct PipelineResult {
    LocalStructure structure;
    std::optional<EvalReport> report;  ///< present when a ground-truth network is configured
    RopartResult partition;
    std::vector<CommunityRun> communities;
    MergeResult merge;
    nlohmann::json run_report;
};

/// Runs every stage from data to evaluation. Deterministic in config.seed.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Same, on an already loaded dataset; `truth` enables evaluation.
PipelineResult run_pipeline(const PipelineConfig& config, const DiscreteDataset& data,
                            const GroundTruthNet* truth);

}  // namespace lsbn
