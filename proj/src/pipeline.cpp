#include "lsbn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <thread>

namespace lsbn {

using nlohmann::json;

EvalReport metrics_from_counts(std::size_t tp, std::size_t fn, std::size_t fp) {
    EvalReport r;
    r.tp = tp;
    r.fn = fn;
    r.fp = fp;
    if (tp + fp > 0) r.precision = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) r.recall = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (r.precision + r.recall > 0.0) r.f_score = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

EvalReport score_structure(const LocalStructure& learned, const GroundTruthNet& truth, bool directed) {
    const std::size_t n = truth.num_variables();
    for (NodeId v : learned.nodes)
        if (v >= n)
            throw Error(ErrorKind::UniverseMismatch, "learned node " + std::to_string(v) + " outside the " +
                                                         std::to_string(n) + "-variable network");
    auto key = [directed](NodeId a, NodeId b) {
        return directed ? std::make_pair(a, b) : std::make_pair(std::min(a, b), std::max(a, b));
    };
    std::set<std::pair<NodeId, NodeId>> want, got;
    for (const auto& [a, b] : truth.arcs()) want.insert(key(a, b));
    for (const auto& e : learned.edges) {
        if (e.from >= n || e.to >= n)
            throw Error(ErrorKind::UniverseMismatch, "learned edge outside the network");
        got.insert(key(e.from, e.to));
    }
    std::size_t tp = 0;
    for (const auto& p : got) tp += want.count(p);
    EvalReport r = metrics_from_counts(tp, want.size() - tp, got.size() - tp);
    const std::size_t pairs = directed ? n * (n - 1) : n * (n - 1) / 2;
    r.tn = pairs - tp - r.fn - r.fp;
    return r;
}

json to_json(const EvalReport& r) {
    json timings = json::object();
    for (const auto& [stage, secs] : r.timings) timings[stage] = secs;
    return json{{"tp", r.tp},
                {"fp", r.fp},
                {"fn", r.fn},
                {"tn", r.tn},
                {"precision", r.precision},
                {"recall", r.recall},
                {"f_score", r.f_score},
                {"timings", timings},
                {"config", r.config}};
}

PartitionDiagnostics partition_diagnostics(const Partition& p, const WeightedGraph& g) {
    PartitionDiagnostics d;
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& c : p.communities) {
        const std::size_t size = c.size();
        d.size_histogram[size > 50 ? 10 : (size - 1) / 5] += 1;

        std::size_t sum = 0, pairs = 0;
        for (std::size_t s = 0; s < c.size(); ++s) {
            std::vector<long> dist(c.size(), -1);
            std::deque<std::size_t> queue{s};
            dist[s] = 0;
            while (!queue.empty()) {
                const std::size_t u = queue.front();
                queue.pop_front();
                for (const auto& [v, w] : g.neighbors(c[u])) {
                    auto it = std::lower_bound(c.begin(), c.end(), v);
                    if (it == c.end() || *it != v) continue;
                    const std::size_t iv = static_cast<std::size_t>(it - c.begin());
                    if (dist[iv] >= 0) continue;
                    dist[iv] = dist[u] + 1;
                    queue.push_back(iv);
                }
            }
            for (std::size_t t = s + 1; t < c.size(); ++t) {
                if (dist[t] <= 0) continue;
                sum += static_cast<std::size_t>(dist[t]);
                ++pairs;
                d.diameter = std::max(d.diameter, static_cast<std::size_t>(dist[t]));
            }
        }
        if (pairs > 0) {
            total += static_cast<double>(sum) / static_cast<double>(pairs);
            ++counted;
        }
    }
    if (counted > 0) d.avg_shortest_path = total / static_cast<double>(counted);
    return d;
}

json to_json(const PartitionDiagnostics& d) {
    static const char* labels[] = {"1-5",   "6-10",  "11-15", "16-20", "21-25", "26-30",
                                   "31-35", "36-40", "41-45", "46-50", ">50"};
    json hist = json::object();
    for (std::size_t i = 0; i < 11; ++i) hist[labels[i]] = d.size_histogram[i];
    return json{{"avg_shortest_path", d.avg_shortest_path}, {"diameter", d.diameter}, {"size_histogram", hist}};
}

LearnerConfig PipelineConfig::learner_config() const {
    LearnerConfig lc;
    lc.kind = learner;
    lc.averaging.max_parents = max_parents;
    lc.averaging.ess = ess;
    lc.mcmc.samples = mcmc_samples;
    lc.mcmc.burn_in = mcmc_burn_in;
    lc.mcmc.thin = mcmc_thin;
    lc.t_avg = t_avg;
    return lc;
}

RopartOptions PipelineConfig::ropart_options() const {
    RopartOptions o;
    o.functions = weight_functions;
    o.t_co = t_co;
    o.max_comm = max_comm;
    return o;
}

PipelineConfig config_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorKind::MalformedDocument, "config must be a JSON object");
    PipelineConfig c;
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "weight_functions") {
                c.weight_functions.clear();
                for (const auto& f : value) c.weight_functions.push_back(parse_weight_function(f.get<std::string>()));
            } else if (key == "t_co") c.t_co = value.get<double>();
            else if (key == "t_avg") c.t_avg = value.get<double>();
            else if (key == "alpha") c.alpha = value.get<double>();
            else if (key == "ess") c.ess = value.get<double>();
            else if (key == "max_parents") c.max_parents = value.get<std::size_t>();
            else if (key == "max_comm") c.max_comm = value.get<std::size_t>();
            else if (key == "max_learn_size") c.max_learn_size = value.get<std::size_t>();
            else if (key == "learner") c.learner = parse_learner(value.get<std::string>());
            else if (key == "mcmc_samples") c.mcmc_samples = value.get<std::size_t>();
            else if (key == "mcmc_burn_in") c.mcmc_burn_in = value.get<std::size_t>();
            else if (key == "mcmc_thin") c.mcmc_thin = value.get<std::size_t>();
            else if (key == "network") c.network_path = value.get<std::string>();
            else if (key == "dataset") c.dataset_path = value.get<std::string>();
            else if (key == "samples") c.samples = value.get<std::size_t>();
            else if (key == "directed_eval") c.directed_eval = value.get<bool>();
            else if (key == "emit_intermediate") c.emit_intermediate = value.get<std::string>();
            else if (key == "threads") c.threads = value.get<std::size_t>();
            else throw Error(ErrorKind::MalformedDocument, "unknown config key '" + key + "'");
        } catch (const json::exception& e) {
            throw Error(ErrorKind::MalformedDocument, "config key '" + key + "': " + e.what());
        }
    }
    if (c.weight_functions.empty()) throw Error(ErrorKind::InvalidInput, "weight_functions is empty");
    if (c.max_learn_size < 2) throw Error(ErrorKind::InvalidInput, "max_learn_size must be >= 2");
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
    try {
        return config_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::MalformedDocument, path + ": " + e.what());
    }
}

json to_json(const PipelineConfig& c) {
    json fns = json::array();
    for (auto f : c.weight_functions) fns.push_back(to_string(f));
    return json{{"seed", c.seed},
                {"weight_functions", fns},
                {"t_co", c.t_co},
                {"t_avg", c.t_avg},
                {"alpha", c.alpha},
                {"ess", c.ess},
                {"max_parents", c.max_parents},
                {"max_comm", c.max_comm},
                {"max_learn_size", c.max_learn_size},
                {"learner", to_string(c.learner)},
                {"mcmc_samples", c.mcmc_samples},
                {"mcmc_burn_in", c.mcmc_burn_in},
                {"mcmc_thin", c.mcmc_thin},
                {"network", c.network_path},
                {"dataset", c.dataset_path},
                {"samples", c.samples},
                {"directed_eval", c.directed_eval}};
}

CommunityRun learn_community(const DiscreteDataset& data, const WeightedGraph& weights, const FamilyScorer& scorer,
                             const NodeSet& community, const PipelineConfig& config, std::uint64_t seed) {
    CommunityRun run;
    run.community = community;
    run.blanket = community_blanket(data, weights, community, config.alpha);
    const WeightedGraph img = inner_markov_graph(community, run.blanket.blankets, data.num_variables());
    const std::size_t k = default_sample_count(community.size(), config.max_learn_size);
    run.samples = rnn_sample(img, community, run.blanket.blankets, k, config.max_learn_size,
                             Rng::derive(seed, 0).next());

    const LearnerConfig learner = config.learner_config();
    for (std::size_t i = 0; i < run.samples.size(); ++i) {
        const SubCommunity& sub = run.samples[i];
        const LocalStructure learned = learn_structure(scorer, sub.members, learner, Rng::derive(seed, 1 + i).next());
        // Arcs among blanket-only members lack their own blankets; keep only
        // arcs touching the core.
        LocalStructure kept;
        kept.nodes = sub.core;
        for (const auto& e : learned.edges) {
            if (!contains(sub.core, e.from) && !contains(sub.core, e.to)) continue;
            kept.add_edge(e.from, e.to, e.weight);
            kept.nodes = set_union(kept.nodes, {e.from, e.to});
        }
        run.sub_structures.push_back(std::move(kept));
    }
    run.ensemble = ensemble_subcommunities(run.sub_structures);

    ResolveContext ctx;
    ctx.scorer = &scorer;
    ctx.weights = &weights;
    ctx.learner = learner;
    ctx.max_learn_size = config.max_learn_size;
    ctx.seed = Rng::derive(seed, 1 + run.samples.size()).next();
    const WeightedGraph local = weights.induced(community);
    ctx.t_tri = local.num_edges() > 0 ? elbow_truncate(local).threshold : 0.0;
    run.resolved = resolve(run.ensemble.structure, set_union(community, run.ensemble.structure.nodes), ctx);
    return run;
}

namespace {

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

json structure_json(const LocalStructure& s) {
    json edges = json::array();
    for (const auto& e : s.edges) edges.push_back({e.from, e.to, e.weight});
    return json{{"nodes", s.nodes}, {"edges", edges}};
}

template <class W>
void write_file(const std::filesystem::path& path, W&& writer) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    writer(out);
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const DiscreteDataset& data, const GroundTruthNet* truth) {
    using clock = std::chrono::steady_clock;
    PipelineResult result;
    std::vector<std::pair<std::string, double>> timings;
    auto timed = [&](const std::string& name, auto&& f) {
        const auto t0 = clock::now();
        stage(name, f);
        timings.emplace_back(name, std::chrono::duration<double>(clock::now() - t0).count());
    };

    if (truth && truth->num_variables() != data.num_variables())
        throw StageError("evaluate", std::string(to_string(ErrorKind::UniverseMismatch)) +
                                         ": dataset and network differ in variable count");

    WeightedGraph mi;
    timed("edge_weights", [&] { mi = weight_matrix(data, WeightFunction::MI); });
    timed("ropart", [&] { result.partition = ropart(data, config.ropart_options()); });

    const FamilyScorer scorer(data, config.ess);
    const auto& comms = result.partition.partition.communities;
    result.communities.resize(comms.size());
    timed("learn", [&] {
        parallel_for(comms.size(), config.threads, [&](std::size_t i) {
            result.communities[i] =
                learn_community(data, mi, scorer, comms[i], config, Rng::derive(config.seed, 1000 + i).next());
        });
    });

    timed("merge", [&] {
        std::vector<CommunityEntry> pool;
        for (const auto& run : result.communities) pool.push_back({run.community, run.resolved.structure});
        ResolveContext ctx;
        ctx.scorer = &scorer;
        ctx.weights = &mi;
        ctx.learner = config.learner_config();
        ctx.max_learn_size = config.max_learn_size;
        ctx.seed = Rng::derive(config.seed, 2).next();
        result.merge = merge_all(pool, ctx);
    });
    result.structure = result.merge.structure;

    if (truth) {
        timed("evaluate", [&] { result.report = score_structure(result.structure, *truth, config.directed_eval); });
        result.report->timings = timings;
        result.report->config = to_json(config);
    }

    json steps = json::array();
    for (const auto& s : result.merge.order.steps)
        steps.push_back({{"left", s.left}, {"right", s.right}, {"merged", s.merged}, {"jaccard", s.jaccard}});
    json conflicts = json::array();
    auto add_conflicts = [&](const std::vector<Conflict>& cs) {
        for (const auto& c : cs)
            conflicts.push_back({{"stage", c.stage},
                                 {"kept", {c.kept_from, c.kept_to}},
                                 {"kept_weight", c.kept_weight},
                                 {"dropped_weight", c.dropped_weight}});
    };
    for (const auto& run : result.communities) add_conflicts(run.ensemble.conflicts);
    add_conflicts(result.merge.conflicts);
    json timing_json = json::object();
    for (const auto& [name, secs] : timings) timing_json[name] = secs;

    result.run_report = json{{"config", to_json(config)},
                             {"variables", data.num_variables()},
                             {"rows", data.num_rows()},
                             {"communities", comms},
                             {"merge_sequence", steps},
                             {"jaccard_evaluations", result.merge.order.jaccard_evaluations},
                             {"conflicts", conflicts},
                             {"edges", result.structure.edges.size()},
                             {"timings", timing_json}};
    if (result.report) result.run_report["evaluation"] = to_json(*result.report);

    if (!config.emit_intermediate.empty()) {
        stage("emit", [&] {
            namespace fs = std::filesystem;
            const fs::path dir(config.emit_intermediate);
            fs::create_directories(dir);
            save_dataset((dir / "dataset.tsv").string(), data);
            write_file(dir / "partition.txt", [&](std::ostream& o) { write_partition(o, result.partition.partition); });
            write_file(dir / "second_order.graph",
                       [&](std::ostream& o) { write_graph(o, result.partition.second_order); });
            for (std::size_t f = 0; f < result.partition.first_order.size(); ++f)
                write_file(dir / ("first_order_" + to_string(config.weight_functions[f]) + ".txt"),
                           [&](std::ostream& o) { write_partition(o, result.partition.first_order[f]); });
            for (std::size_t i = 0; i < result.communities.size(); ++i) {
                const auto& run = result.communities[i];
                json blankets = json::object();
                for (const auto& [x, b] : run.blanket.blankets) blankets[std::to_string(x)] = b.blanket;
                json samples = json::array();
                for (const auto& s : run.samples) samples.push_back({{"core", s.core}, {"members", s.members}});
                json subs = json::array();
                for (const auto& s : run.sub_structures) subs.push_back(structure_json(s));
                json doc{{"community", run.community},
                         {"blankets", blankets},
                         {"samples", samples},
                         {"sub_structures", subs},
                         {"ensemble", structure_json(run.ensemble.structure)},
                         {"triplet_clusters", run.resolved.clusters},
                         {"t_tri", run.resolved.t_tri},
                         {"resolved", structure_json(run.resolved.structure)}};
                write_file(dir / ("community_" + std::to_string(i) + ".json"),
                           [&](std::ostream& o) { o << doc.dump(2) << '\n'; });
            }
            write_file(dir / "final.structure", [&](std::ostream& o) { write_structure(o, result.structure); });
            write_file(dir / "run_report.json", [&](std::ostream& o) { o << result.run_report.dump(2) << '\n'; });
            return 0;
        });
    }
    return result;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    std::optional<GroundTruthNet> truth;
    if (!config.network_path.empty())
        truth = stage("data", [&] { return load_network(config.network_path); });
    const DiscreteDataset data = stage("data", [&] {
        if (!config.dataset_path.empty()) return load_dataset(config.dataset_path);
        if (!truth) throw Error(ErrorKind::InvalidInput, "config names neither a network nor a dataset");
        return forward_sample(*truth, config.samples, Rng::derive(config.seed, 1).next());
    });
    return run_pipeline(config, data, truth ? &*truth : nullptr);
}

}  // namespace lsbn
