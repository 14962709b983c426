#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lsbn/pipeline.hpp"

using namespace lsbn;
using nlohmann::json;

namespace {

template <class T, class Reader>
T read_file(const std::string& path, Reader reader) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    return reader(in);
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << text;
}

std::string structure_text(const LocalStructure& s) {
    std::ostringstream out;
    write_structure(out, s);
    return out.str();
}

int fail(const std::string& stage, const std::string& what) {
    std::cerr << "error [" << stage << "] " << what << '\n';
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Large-scale Bayesian network structure learning"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string emit_dir;
    std::string learner;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--seed", seed, "master seed (overrides config)");
    app.add_option("--emit-intermediate", emit_dir, "directory for intermediate artifacts");
    app.add_option("--learner", learner, "structure learner")->check(CLI::IsMember({"modelavg", "greedy"}));

    std::string network, dataset, out_path, partition_path;
    std::size_t samples = 20000;
    std::size_t community = 0;
    std::vector<std::string> structure_paths;
    bool directed = false;

    auto* sample = app.add_subcommand("sample", "forward-sample a network into a dataset");
    sample->add_option("--network", network, "network file")->required();
    sample->add_option("--samples,-n", samples, "number of rows");
    sample->add_option("--out,-o", out_path, "dataset file")->required();

    auto* partition = app.add_subcommand("partition", "partition the variables of a dataset");
    partition->add_option("--data", dataset, "dataset file")->required();
    partition->add_option("--out,-o", out_path, "partition file (default stdout)");

    auto* learn = app.add_subcommand("learn", "learn the structure of one community");
    learn->add_option("--data", dataset, "dataset file")->required();
    learn->add_option("--partition", partition_path, "partition file")->required();
    learn->add_option("--community", community, "community index")->required();
    learn->add_option("--out,-o", out_path, "structure file (default stdout)");

    auto* merge = app.add_subcommand("merge", "merge community structures");
    merge->add_option("--data", dataset, "dataset file")->required();
    merge->add_option("--partition", partition_path, "partition file")->required();
    merge->add_option("structures", structure_paths, "one structure file per community, in partition order")
        ->required();
    merge->add_option("--out,-o", out_path, "structure file (default stdout)");

    auto* evaluate = app.add_subcommand("evaluate", "score a structure against a network");
    std::string structure_path;
    evaluate->add_option("--structure", structure_path, "structure file")->required();
    evaluate->add_option("--network", network, "ground-truth network")->required();
    evaluate->add_flag("--directed", directed, "compare arcs instead of skeletons");
    evaluate->add_option("--out,-o", out_path, "JSON report (default stdout)");

    auto* pipeline = app.add_subcommand("pipeline", "run every stage end to end");
    pipeline->add_option("--network", network, "network file (overrides config)");
    pipeline->add_option("--data", dataset, "dataset file (overrides config)");
    pipeline->add_option("--out,-o", out_path, "final structure file (default stdout)");
    std::string report_path;
    pipeline->add_option("--report", report_path, "run-report JSON file");

    auto* diagnose = app.add_subcommand("diagnose", "partition path-length and size diagnostics");
    diagnose->add_option("--data", dataset, "dataset file")->required();
    diagnose->add_option("--partition", partition_path, "partition file")->required();
    diagnose->add_option("--out,-o", out_path, "JSON output (default stdout)");

    CLI11_PARSE(app, argc, argv);

    std::string current = "config";
    try {
        PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (app.count("--seed")) config.seed = seed;
        if (!emit_dir.empty()) config.emit_intermediate = emit_dir;
        if (!learner.empty()) config.learner = parse_learner(learner);

        if (*sample) {
            current = "sample";
            const GroundTruthNet net = load_network(network);
            save_dataset(out_path, forward_sample(net, samples, config.seed));
            return 0;
        }
        if (*evaluate) {
            current = "evaluate";
            const GroundTruthNet net = load_network(network);
            const LocalStructure s = read_file<LocalStructure>(structure_path, read_structure);
            EvalReport r = score_structure(s, net, directed);
            r.config = to_json(config);
            emit(out_path, to_json(r).dump(2) + '\n');
            return 0;
        }
        if (*pipeline) {
            current = "pipeline";
            if (!network.empty()) config.network_path = network;
            if (!dataset.empty()) config.dataset_path = dataset;
            const PipelineResult result = run_pipeline(config);
            emit(out_path, structure_text(result.structure));
            if (!report_path.empty()) emit(report_path, result.run_report.dump(2) + '\n');
            if (result.report) std::cerr << to_json(*result.report).dump() << '\n';
            return 0;
        }

        current = "data";
        const DiscreteDataset data = load_dataset(dataset);

        if (*partition) {
            current = "partition";
            const RopartResult r = ropart(data, config.ropart_options());
            std::ostringstream out;
            write_partition(out, r.partition);
            emit(out_path, out.str());
            return 0;
        }

        current = "partition";
        const Partition part = read_file<Partition>(partition_path, [&](std::istream& in) {
            return read_partition(in, data.num_variables());
        });

        if (*diagnose) {
            current = "diagnose";
            const WeightedGraph g = elbow_truncate(weight_matrix(data, WeightFunction::MI)).pruned;
            emit(out_path, to_json(partition_diagnostics(part, g)).dump(2) + '\n');
            return 0;
        }

        current = "edge_weights";
        const WeightedGraph mi = weight_matrix(data, WeightFunction::MI);
        const FamilyScorer scorer(data, config.ess);

        if (*learn) {
            current = "learn";
            if (community >= part.communities.size())
                throw Error(ErrorKind::InvalidInput, "community index out of range");
            const CommunityRun run = learn_community(data, mi, scorer, part.communities[community], config,
                                                     Rng::derive(config.seed, 1000 + community).next());
            emit(out_path, structure_text(run.resolved.structure));
            return 0;
        }
        if (*merge) {
            current = "merge";
            if (structure_paths.size() != part.communities.size())
                throw Error(ErrorKind::InvalidInput, "expected one structure per community");
            std::vector<CommunityEntry> pool;
            for (std::size_t i = 0; i < structure_paths.size(); ++i)
                pool.push_back({part.communities[i], read_file<LocalStructure>(structure_paths[i], read_structure)});
            ResolveContext ctx;
            ctx.scorer = &scorer;
            ctx.weights = &mi;
            ctx.learner = config.learner_config();
            ctx.max_learn_size = config.max_learn_size;
            ctx.seed = Rng::derive(config.seed, 2).next();
            emit(out_path, structure_text(merge_all(pool, ctx).structure));
            return 0;
        }
    } catch (const StageError& e) {
        return fail(e.stage(), e.what());
    } catch (const std::exception& e) {
        return fail(current, e.what());
    }
    return 0;
}
