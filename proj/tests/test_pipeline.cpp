#include <gtest/gtest.h>

#include <algorithm>

#include "lsbn/pipeline.hpp"

using namespace lsbn;

namespace {

std::string chain_network(std::size_t m) {
    std::string text;
    for (std::size_t v = 0; v < m; ++v) text += "var X" + std::to_string(v) + " 2 s0 s1\n";
    for (std::size_t v = 1; v < m; ++v) text += "arc X" + std::to_string(v - 1) + " X" + std::to_string(v) + "\n";
    text += "cpt X0 | : 0.5 0.5\n";
    for (std::size_t v = 1; v < m; ++v) {
        text += "cpt X" + std::to_string(v) + " | s0 : 0.9 0.1\n";
        text += "cpt X" + std::to_string(v) + " | s1 : 0.1 0.9\n";
    }
    return text;
}

LocalStructure structure_of(NodeSet nodes, const std::vector<std::pair<NodeId, NodeId>>& arcs) {
    LocalStructure s;
    s.nodes = std::move(nodes);
    for (auto [a, b] : arcs) s.add_edge(a, b);
    return s;
}

PipelineConfig small_config(std::uint64_t seed) {
    PipelineConfig c;
    c.seed = seed;
    c.threads = 1;
    return c;
}

}  // namespace

TEST(Metrics, FromCounts) {
    const EvalReport r = metrics_from_counts(43, 3, 8);
    EXPECT_NEAR(r.precision, 84.314, 1e-3);
    EXPECT_NEAR(r.recall, 93.478, 1e-3);
    EXPECT_NEAR(r.f_score, 88.660, 1e-3);

    const EvalReport perfect = metrics_from_counts(10, 0, 0);
    EXPECT_DOUBLE_EQ(perfect.f_score, 100.0);

    const EvalReport empty = metrics_from_counts(0, 10, 0);
    EXPECT_DOUBLE_EQ(empty.precision, 0.0);
    EXPECT_DOUBLE_EQ(empty.recall, 0.0);
    EXPECT_DOUBLE_EQ(empty.f_score, 0.0);
}

TEST(ScoreStructure, SkeletonIgnoresDirection) {
    const GroundTruthNet net = parse_network(chain_network(4));
    const EvalReport same = score_structure(structure_of({0, 1, 2, 3}, {{0, 1}, {1, 2}, {2, 3}}), net);
    EXPECT_EQ(same.tp, 3u);
    EXPECT_DOUBLE_EQ(same.f_score, 100.0);
    EXPECT_EQ(same.tn, 3u);

    const LocalStructure reversed = structure_of({0, 1, 2, 3}, {{1, 0}, {2, 1}, {3, 2}});
    EXPECT_DOUBLE_EQ(score_structure(reversed, net).f_score, 100.0);
    EXPECT_EQ(score_structure(reversed, net, true).tp, 0u);

    const EvalReport mixed = score_structure(structure_of({0, 1, 2, 3}, {{0, 1}, {0, 3}}), net);
    EXPECT_EQ(mixed.tp, 1u);
    EXPECT_EQ(mixed.fp, 1u);
    EXPECT_EQ(mixed.fn, 2u);
    EXPECT_EQ(mixed.tn, 2u);

    EXPECT_DOUBLE_EQ(score_structure(structure_of({0, 1, 2, 3}, {}), net).precision, 0.0);
}

TEST(ScoreStructure, UniverseMismatch) {
    const GroundTruthNet net = parse_network(chain_network(3));
    try {
        score_structure(structure_of({0, 5}, {{0, 5}}), net);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UniverseMismatch);
    }
}

TEST(Diagnostics, PathAndIsolatedNodes) {
    WeightedGraph g(5);
    g.set_weight(0, 1, 1.0);
    g.set_weight(1, 2, 1.0);
    const PartitionDiagnostics d = partition_diagnostics(Partition{5, {{0, 1, 2}, {3}, {4}}}, g);
    EXPECT_NEAR(d.avg_shortest_path, 4.0 / 3.0, 1e-12);
    EXPECT_EQ(d.diameter, 2u);
    EXPECT_EQ(d.size_histogram[0], 3u);

    const PartitionDiagnostics none = partition_diagnostics(Partition{2, {{0}, {1}}}, WeightedGraph(2));
    EXPECT_DOUBLE_EQ(none.avg_shortest_path, 0.0);
    EXPECT_EQ(none.diameter, 0u);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
    PipelineConfig c;
    c.seed = 9;
    c.learner = LearnerKind::Greedy;
    c.weight_functions = {WeightFunction::MI, WeightFunction::Pearson};
    c.max_comm = 20;
    const PipelineConfig back = config_from_json(to_json(c));
    EXPECT_EQ(back.seed, 9u);
    EXPECT_EQ(back.learner, LearnerKind::Greedy);
    EXPECT_EQ(back.weight_functions, c.weight_functions);
    EXPECT_EQ(back.max_comm, 20u);
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_THROW(config_from_json(nlohmann::json{{"sed", 3}}), Error);
}

TEST(Pipeline, TwoVariableToy) {
    const GroundTruthNet net = parse_network(chain_network(2));
    PipelineConfig c = small_config(1);
    c.weight_functions = {WeightFunction::MI, WeightFunction::Pearson};
    const DiscreteDataset d = forward_sample(net, 5000, 3);
    const PipelineResult r = run_pipeline(c, d, &net);
    ASSERT_TRUE(r.report);
    EXPECT_DOUBLE_EQ(r.report->precision, 100.0);
    EXPECT_DOUBLE_EQ(r.report->recall, 100.0);
    EXPECT_DOUBLE_EQ(r.report->f_score, 100.0);
}

TEST(Pipeline, SixChainMedianF) {
    const GroundTruthNet net = parse_network(chain_network(6));
    std::vector<double> f;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const DiscreteDataset d = forward_sample(net, 20000, seed);
        f.push_back(run_pipeline(small_config(seed), d, &net).report->f_score);
    }
    std::sort(f.begin(), f.end());
    EXPECT_GE(f[2], 90.0);
}

TEST(Pipeline, DeterministicInSeed) {
    const GroundTruthNet net = parse_network(chain_network(6));
    const DiscreteDataset d = forward_sample(net, 5000, 2);
    const PipelineResult a = run_pipeline(small_config(4), d, &net);
    const PipelineResult b = run_pipeline(small_config(4), d, &net);
    EXPECT_EQ(a.structure.edges, b.structure.edges);
    EXPECT_EQ(a.run_report["merge_sequence"], b.run_report["merge_sequence"]);
    EXPECT_TRUE(a.run_report.contains("evaluation"));
    EXPECT_EQ(a.run_report["timings"].size(), 5u);
}

TEST(Pipeline, FailuresNameTheStage) {
    PipelineConfig c = small_config(1);
    c.network_path = "/nonexistent/net.net";
    try {
        run_pipeline(c);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "data");
    }

    const DiscreteDataset constant({"x", "y", "z"}, {2, 2, 2}, {{0, 0, 0}, {1, 0, 1}, {1, 0, 0}});
    try {
        run_pipeline(small_config(1), constant, nullptr);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "ropart");
        EXPECT_NE(std::string(e.what()).find("y"), std::string::npos);
    }

    const GroundTruthNet other = parse_network(chain_network(4));
    try {
        run_pipeline(small_config(1), forward_sample(parse_network(chain_network(3)), 100, 1), &other);
        FAIL();
    } catch (const StageError& e) {
        EXPECT_EQ(e.stage(), "evaluate");
    }
}
