#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "lsbn/averaging.hpp"
#include "oracles.hpp"

using namespace lsbn;

namespace {

const char* kChain = R"(var A 2 a0 a1
var B 2 b0 b1
var C 2 c0 c1
arc A B
arc B C
cpt A | : 0.5 0.5
cpt B | a0 : 0.9 0.1
cpt B | a1 : 0.1 0.9
cpt C | b0 : 0.9 0.1
cpt C | b1 : 0.1 0.9
)";

DiscreteDataset copies(std::size_t rows) {
    std::vector<std::vector<State>> r;
    for (std::size_t k = 0; k < rows; ++k) r.push_back({static_cast<State>(k % 2), static_cast<State>(k % 2)});
    return DiscreteDataset({"X", "Y"}, {2, 2}, r);
}

DiscreteDataset independent_uniform(std::size_t vars, std::size_t rows, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<State>> data(rows, std::vector<State>(vars));
    for (auto& row : data)
        for (auto& x : row) x = static_cast<State>(rng.below(2));
    std::vector<std::string> names;
    for (std::size_t v = 0; v < vars; ++v) names.push_back("U" + std::to_string(v));
    return DiscreteDataset(names, std::vector<std::size_t>(vars, 2), data);
}

NodeSet skeleton_pairs(const LocalStructure& s) {
    NodeSet out;
    for (const auto& e : s.edges) out.push_back(std::min(e.from, e.to) * 100 + std::max(e.from, e.to));
    return make_set(out);
}

}  // namespace

TEST(Bdeu, EmptyDataIsZero) {
    const DiscreteDataset d({"X", "Y"}, {2, 3}, std::vector<std::vector<State>>{});
    EXPECT_DOUBLE_EQ(bdeu_family_score(d, 0, {}, 10.0), 0.0);
    EXPECT_DOUBLE_EQ(bdeu_family_score(d, 0, {1}, 10.0), 0.0);
}

TEST(Bdeu, ClosedFormSingleObservation) {
    const DiscreteDataset d({"X"}, {2}, {{0}});
    EXPECT_NEAR(bdeu_family_score(d, 0, {}, 1.0), std::log(0.5), 1e-14);
}

TEST(Bdeu, FamilyTooLarge) {
    const DiscreteDataset d = independent_uniform(6, 10, 1);
    try {
        bdeu_family_score(d, 0, {1, 2, 3, 4, 5}, 10.0, 16);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::FamilyTooLarge);
    }
    EXPECT_THROW(bdeu_family_score(d, 0, {}, 0.0), Error);
}

TEST(Bdeu, DecomposesOverFamilies) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const GroundTruthNet net = oracle::random_strong_network(rng, 4, 0.6);
        const DiscreteDataset d = forward_sample(net, 300, trial);
        const FamilyScorer scorer(d, 10.0);
        std::vector<std::vector<NodeId>> parents(4);
        for (NodeId v = 0; v < 4; ++v) parents[v] = net.parents(v);
        for (auto& p : parents) std::sort(p.begin(), p.end());
        const double joint = scorer.structure_score({0, 1, 2, 3}, net.arcs());
        double sum = 0.0;
        for (NodeId v = 0; v < 4; ++v) sum += bdeu_family_score(d, v, parents[v], 10.0);
        EXPECT_NEAR(joint, sum, 1e-9);
        EXPECT_NEAR(joint, oracle::bdeu_sequential(d, parents, {0, 1, 2, 3}, 10.0), 1e-9);
    }
}

TEST(Bdeu, CachingIsTransparent) {
    const DiscreteDataset d = forward_sample(parse_network(kChain), 500, 2);
    const FamilyScorer scorer(d, 10.0);
    for (int pass = 0; pass < 2; ++pass)
        for (NodeId c = 0; c < 3; ++c)
            for (const NodeSet& p : std::vector<NodeSet>{{}, {0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}}) {
                if (contains(p, c)) continue;
                const double cached = scorer.score(c, p);
                const double direct = bdeu_family_score(d, c, p, 10.0);
                EXPECT_EQ(std::memcmp(&cached, &direct, sizeof(double)), 0);
            }
    EXPECT_EQ(scorer.cache_size(), 12u);
}

TEST(FeaturePosterior, BackwardEdgeIsZero) {
    const DiscreteDataset d = copies(8);
    const FamilyScorer scorer(d, 1.0);
    const EdgePosterior post = feature_posterior_given_order(scorer, {0, 1}, {0, 1}, {1, 1.0});
    EXPECT_EQ(post.at(1, 0), 0.0);
    EXPECT_EQ(post.at(0, 0), 0.0);
}

TEST(FeaturePosterior, TwoTermClosedForm) {
    const DiscreteDataset d = copies(8);
    const FamilyScorer scorer(d, 1.0);
    const EdgePosterior post = feature_posterior_given_order(scorer, {0, 1}, {0, 1}, {1, 1.0});
    const double s0 = bdeu_family_score(d, 1, {}, 1.0);
    const double s1 = bdeu_family_score(d, 1, {0}, 1.0);
    EXPECT_NEAR(post.at(0, 1), std::exp(s1) / (std::exp(s0) + std::exp(s1)), 1e-12);
}

TEST(FeaturePosterior, MatchesParentSetEnumeration) {
    const DiscreteDataset d = independent_uniform(3, 400, 3);
    const FamilyScorer scorer(d, 10.0);
    const NodeSet nodes{0, 1, 2};
    Order order{2, 0, 1};
    do {
        const EdgePosterior post = feature_posterior_given_order(scorer, nodes, order, {2, 10.0});
        for (std::size_t pos = 0; pos < 3; ++pos) {
            const std::size_t child = order[pos];
            std::vector<std::size_t> pred(order.begin(), order.begin() + static_cast<long>(pos));
            double z = 0.0;
            std::vector<double> acc(3, 0.0);
            for (std::size_t mask = 0; mask < (std::size_t{1} << pred.size()); ++mask) {
                NodeSet parents;
                for (std::size_t k = 0; k < pred.size(); ++k)
                    if (mask >> k & 1) parents.push_back(pred[k]);
                const double w = std::exp(bdeu_family_score(d, child, make_set(parents), 10.0));
                z += w;
                for (NodeId p : parents) acc[p] += w;
            }
            for (std::size_t j = 0; j < 3; ++j) {
                EXPECT_NEAR(post.at(j, child), acc[j] / z, 1e-12);
                EXPECT_LE(post.at(j, child), 0.5);
                if (std::find(pred.begin(), pred.end(), j) == pred.end()) EXPECT_EQ(post.at(j, child), 0.0);
            }
        }
    } while (std::next_permutation(order.begin(), order.end()));
}

TEST(FeaturePosterior, BudgetExceeded) {
    const DiscreteDataset d = independent_uniform(12, 20, 1);
    const FamilyScorer scorer(d, 10.0);
    NodeSet nodes;
    Order order;
    for (NodeId v = 0; v < 12; ++v) {
        nodes.push_back(v);
        order.push_back(v);
    }
    try {
        feature_posterior_given_order(scorer, nodes, order, {3, 10.0, 100});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::BudgetExceeded);
    }
}

TEST(ExactAveraging, MatchesDagEnumeration) {
    Rng rng(41);
    for (int trial = 0; trial < 4; ++trial) {
        const std::size_t m = 3 + static_cast<std::size_t>(trial % 2);
        const GroundTruthNet net = oracle::random_strong_network(rng, m, 0.6);
        const DiscreteDataset d = forward_sample(net, 200, trial + 10);
        const FamilyScorer scorer(d, 10.0);
        NodeSet nodes;
        for (NodeId v = 0; v < m; ++v) nodes.push_back(v);
        const EdgePosterior got = exact_order_posterior(scorer, nodes, {m - 1, 10.0});
        const auto want = oracle::dag_enumeration_posterior(d, nodes, 10.0, m - 1);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) EXPECT_NEAR(got.at(i, j), want[i][j], 1e-9);
    }
}

TEST(OrderMcmc, SingleNodeIsEmpty) {
    const DiscreteDataset d = independent_uniform(1, 10, 1);
    const FamilyScorer scorer(d, 10.0);
    const McmcResult r = order_mcmc(scorer, {0}, {});
    ASSERT_EQ(r.posterior.size(), 1u);
    EXPECT_EQ(r.posterior.at(0, 0), 0.0);
    EXPECT_THROW(order_mcmc(scorer, {0}, {0}), Error);
}

TEST(OrderMcmc, ChainAgreesWithExactAverage) {
    const DiscreteDataset d = forward_sample(parse_network(kChain), 500, 1);
    const FamilyScorer scorer(d, 10.0);
    const EdgePosterior exact = exact_order_posterior(scorer, {0, 1, 2});
    const McmcResult r = order_mcmc(scorer, {0, 1, 2}, {200, 200, 0, 5});
    for (std::size_t k = 0; k < exact.p.size(); ++k) EXPECT_NEAR(r.posterior.p[k], exact.p[k], 0.05);
    EXPECT_GT(r.accepted, 0u);
    EXPECT_EQ(r.proposals, 200u + 200u * 3u);
}

TEST(OrderMcmc, DeterministicPerSeed) {
    const DiscreteDataset d = forward_sample(parse_network(kChain), 500, 1);
    const FamilyScorer scorer(d, 10.0);
    EXPECT_EQ(order_mcmc(scorer, {0, 1, 2}, {50, 0, 0, 9}).posterior.p,
              order_mcmc(scorer, {0, 1, 2}, {50, 0, 0, 9}).posterior.p);
}

TEST(OrderMcmc, IndependentDataStaysLow) {
    const DiscreteDataset d = independent_uniform(4, 2000, 6);
    const FamilyScorer scorer(d, 10.0);
    // Spread of each entry over repeated seeds gives the Monte Carlo error.
    std::vector<std::vector<double>> runs;
    for (std::uint64_t seed = 1; seed <= 8; ++seed)
        runs.push_back(order_mcmc(scorer, {0, 1, 2, 3}, {100, 0, 0, seed}).posterior.p);
    for (std::size_t k = 0; k < runs[0].size(); ++k) {
        double mean = 0.0, var = 0.0;
        for (const auto& r : runs) mean += r[k] / runs.size();
        for (const auto& r : runs) var += (r[k] - mean) * (r[k] - mean) / (runs.size() - 1);
        EXPECT_LE(mean, 0.5 + 3.0 * std::sqrt(var / runs.size())) << "entry " << k;
    }
}

TEST(OrderMcmc, LongerChainsDoNotDrift) {
    const DiscreteDataset d = forward_sample(parse_network(kChain), 500, 1);
    const FamilyScorer scorer(d, 10.0);
    const EdgePosterior exact = exact_order_posterior(scorer, {0, 1, 2});
    auto mean_dev = [&](std::size_t samples) {
        double total = 0.0;
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const auto p = order_mcmc(scorer, {0, 1, 2}, {samples, 50, 0, seed}).posterior.p;
            double dev = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) dev = std::max(dev, std::fabs(p[k] - exact.p[k]));
            total += dev;
        }
        return total / 10.0;
    };
    EXPECT_LE(mean_dev(400), mean_dev(100) + 1e-3);
}

TEST(Threshold, Examples) {
    EdgePosterior zero({0, 1, 2});
    EXPECT_TRUE(threshold_edges(zero, 0.5).edges.empty());

    EdgePosterior p({0, 1});
    p.at(0, 1) = 0.9;
    p.at(1, 0) = 0.6;
    const LocalStructure s = threshold_edges(p, 0.5);
    ASSERT_EQ(s.edges.size(), 1u);
    EXPECT_EQ(s.edges[0].from, 0u);
    EXPECT_EQ(s.edges[0].to, 1u);
    EXPECT_DOUBLE_EQ(s.edges[0].weight, 0.9);

    p.at(1, 0) = 0.9;
    EXPECT_TRUE(threshold_edges(p, 0.5).has_arc(0, 1));
    EXPECT_THROW(threshold_edges(p, 1.0), Error);
}

TEST(Threshold, ChainPosteriorGivesChainSkeleton) {
    const DiscreteDataset d = forward_sample(parse_network(kChain), 500, 1);
    const FamilyScorer scorer(d, 10.0);
    const auto oracle_post = oracle::dag_enumeration_posterior(d, {0, 1, 2}, 10.0, 2);
    const LocalStructure s = threshold_edges(exact_order_posterior(scorer, {0, 1, 2}), 0.5);
    EXPECT_EQ(skeleton_pairs(s), (NodeSet{1, 102}));
    for (const auto& e : s.edges) EXPECT_GT(oracle_post[e.from][e.to], 0.5);
}

TEST(Greedy, IndependentDataIsEdgeless) {
    const DiscreteDataset d = independent_uniform(4, 20000, 8);
    const FamilyScorer scorer(d, 10.0);
    EXPECT_TRUE(greedy_learn(scorer, {0, 1, 2, 3}).edges.empty());
}

TEST(Greedy, CopiesGetOneEdge) {
    const DiscreteDataset d = copies(200);
    const FamilyScorer scorer(d, 10.0);
    const LocalStructure s = greedy_learn(scorer, {0, 1});
    ASSERT_EQ(s.edges.size(), 1u);
    EXPECT_TRUE(s.adjacent(0, 1));
}

TEST(Greedy, RecoversChainSkeleton) {
    const DiscreteDataset d = forward_sample(parse_network(kChain), 20000, 4);
    const FamilyScorer scorer(d, 10.0);
    const LocalStructure s = greedy_learn(scorer, {0, 1, 2});
    EXPECT_EQ(skeleton_pairs(s), (NodeSet{1, 102}));
    EXPECT_THROW(greedy_learn(scorer, {}), Error);
}

TEST(Learner, DispatchAndNames) {
    EXPECT_EQ(parse_learner("modelavg"), LearnerKind::ModelAveraging);
    EXPECT_EQ(parse_learner("greedy"), LearnerKind::Greedy);
    EXPECT_EQ(to_string(LearnerKind::ModelAveraging), "modelavg");
    EXPECT_THROW(parse_learner("pc"), Error);

    const DiscreteDataset d = forward_sample(parse_network(kChain), 5000, 4);
    const FamilyScorer scorer(d, 10.0);
    LearnerConfig cfg;
    for (auto kind : {LearnerKind::ModelAveraging, LearnerKind::Greedy}) {
        cfg.kind = kind;
        const LocalStructure s = learn_structure(scorer, {0, 1, 2}, cfg, 3);
        EXPECT_EQ(skeleton_pairs(s), (NodeSet{1, 102})) << to_string(kind);
        EXPECT_EQ(s.nodes, (NodeSet{0, 1, 2}));
    }
}

TEST(Io, StructureAndPosteriorRoundTrip) {
    LocalStructure s;
    s.nodes = {0, 3, 5};
    s.add_edge(5, 0, 0.75);
    s.add_edge(0, 3, 1.0);
    std::stringstream buf;
    write_structure(buf, s);
    const LocalStructure back = read_structure(buf);
    EXPECT_EQ(back.edges, s.edges);

    EdgePosterior p({2, 7});
    p.at(0, 1) = 0.125;
    std::stringstream pb;
    write_posterior(pb, p);
    const EdgePosterior q = read_posterior(pb);
    EXPECT_EQ(q.nodes, p.nodes);
    EXPECT_EQ(q.p, p.p);
    std::stringstream bad("posterior x\n");
    EXPECT_THROW(read_posterior(bad), Error);
}
