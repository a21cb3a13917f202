#include "lsmnas/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "lsmnas/errors.hpp"

namespace lsmnas {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

ThreeStepOptions options_from(const RunConfig& config)
{
    ThreeStepOptions options;
    options.n_total = config.n_total;
    options.n_group = config.n_group;
    options.liquid_defaults = config.liquid_defaults;
    options.steps = {config.sa_step1, config.sa_step2, config.sa_step3};
    // Per-step annealing chains get their own substreams of the master seed.
    options.steps[0].seed = derive_seed(config.seed, 11);
    options.steps[1].seed = derive_seed(config.seed, 12);
    options.steps[2].seed = derive_seed(config.seed, 13);
    return options;
}

json connection_report(const LsmGenome& genome)
{
    const long long n = genome.total_neurons();
    return {{"intra", potential_connection_count(genome)},
            {"intra_plus_inter", potential_connection_count_with_interlayer(genome)},
            {"single_liquid", n * n},
            {"reduction_vs_single_pct", connection_reduction_percent(genome)}};
}

std::string csv_escape_fault(std::string text)
{
    for (char& c : text) {
        if (c == ',' || c == '\n' || c == '\r') {
            c = ';';
        }
    }
    return text;
}

}  // namespace

void run_search_command(const RunConfig& config, bool resume)
{
    validate(config);
    fs::create_directories(config.out_dir);
    const std::string history_path = (fs::path(config.out_dir) / "history.jsonl").string();

    save_config(config, (fs::path(config.out_dir) / "effective_config.json").string());

    Journal journal;
    if (resume && fs::exists(history_path)) {
        journal = Journal::load(history_path);
    }
    // A resumed run rewrites the file from the replayed records, so the
    // output is identical to an uninterrupted run.
    HistoryWriter writer(history_path, /*append=*/false);

    const LoadedData data = load_and_encode(config.dataset, config.stages.sim, config.seed);
    const PipelineObjective objective(data.train, data.test, data.classes, config.stages,
                                      config.seed, config.threads);

    const ThreeStepResult result =
        three_step_search(objective, options_from(config), &writer, journal.empty() ? nullptr : &journal);

    atomic_write_file((fs::path(config.out_dir) / "best_genome.json").string(),
                      to_json_string(result.best.genome));

    json steps = json::array();
    for (const auto& best : result.step_best) {
        steps.push_back({{"step", best.step},
                         {"accuracy", best.accuracy ? json(*best.accuracy) : json(nullptr)},
                         {"iteration", best.iteration}});
    }
    json summary{{"best", {{"accuracy", *result.best.accuracy},
                           {"step", result.best.step},
                           {"genome_file", "best_genome.json"}}},
                 {"steps", std::move(steps)},
                 {"connections", connection_report(result.best.genome)},
                 {"evaluations", result.history.size()},
                 {"seed", config.seed}};
    atomic_write_file((fs::path(config.out_dir) / "summary.json").string(),
                      summary.dump(2) + "\n");

    std::cout << "best accuracy " << *result.best.accuracy << " (step " << result.best.step
              << ") over " << result.history.size() << " evaluations\n";
}

void run_evaluate_command(const RunConfig& config, const std::string& genome_path,
                          const std::string& out_path, int raster_examples,
                          const std::string& save_network_path,
                          const std::string& save_model_path)
{
    validate(config);
    const LsmGenome genome = load_genome(genome_path);

    const LoadedData data = load_and_encode(config.dataset, config.stages.sim, config.seed);
    if (data.train.channel_count != data.test.channel_count) {
        throw DataError("train/test channel counts differ");
    }
    const PipelineObjective objective(data.train, data.test, data.classes, config.stages,
                                      config.seed, config.threads);
    const auto detail = objective.evaluate_detailed(genome);

    json connections;
    const auto counts = detail.connections;
    for (int c = 0; c < static_cast<int>(ConnectionClass::count); ++c) {
        connections[connection_class_name(static_cast<ConnectionClass>(c))] =
            counts.by_class[c];
    }
    json report{{"genome_file", genome_path},
                {"accuracy", detail.accuracy},
                {"seed", config.seed},
                {"neurons", detail.neuron_count},
                {"realized_connections", std::move(connections)},
                {"realized_total", counts.total()},
                {"potential", connection_report(genome)}};

    if (!save_network_path.empty()) {
        save_network(objective.instantiate_for(genome), save_network_path);
        report["network_file"] = save_network_path;
    }
    if (!save_model_path.empty()) {
        save_model(detail.model, save_model_path);
        report["model_file"] = save_model_path;
    }

    if (raster_examples > 0) {
        // Debug rasters of the first test examples: one `neuron_id time_ms`
        // line per spike.
        const NetworkInstance net = objective.instantiate_for(genome);
        Simulator simulator(net, config.stages.lif, config.stages.sim);
        const fs::path raster_dir =
            out_path.empty() || out_path == "-" ? fs::path(".") : fs::path(out_path).parent_path();
        const int count = std::min<int>(raster_examples, static_cast<int>(data.test.size()));
        json raster_files = json::array();
        for (int i = 0; i < count; ++i) {
            SpikeRaster raster;
            simulator.run(data.test.examples[i], &raster);
            std::ostringstream text;
            text << "# neuron_id time_ms\n";
            for (const auto& [neuron, time] : raster) {
                text << neuron << ' ' << time << '\n';
            }
            const fs::path file = raster_dir / ("raster_" + std::to_string(i) + ".txt");
            atomic_write_file(file.string(), text.str());
            raster_files.push_back(file.string());
        }
        report["rasters"] = std::move(raster_files);
    }

    const std::string text = report.dump(2) + "\n";
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        atomic_write_file(out_path, text);
    }
}

void run_minimize_command(const RunConfig& config, const std::string& genome_path,
                          const std::vector<double>& fractions, const std::string& out_csv)
{
    validate(config);
    const LsmGenome genome = load_genome(genome_path);

    const LoadedData data = load_and_encode(config.dataset, config.stages.sim, config.seed);
    const PipelineObjective objective(data.train, data.test, data.classes, config.stages,
                                      config.seed, config.threads);

    const auto rows = minimize_neurons(genome, objective, fractions);
    std::ostringstream csv;
    csv << "fraction,neurons,accuracy,error\n";
    for (const auto& row : rows) {
        csv << row.fraction << ',' << row.total_neurons << ',';
        if (row.accuracy) {
            csv << *row.accuracy;
        }
        csv << ',' << csv_escape_fault(row.error) << '\n';
    }
    if (out_csv.empty() || out_csv == "-") {
        std::cout << csv.str();
    } else {
        atomic_write_file(out_csv, csv.str());
    }
}

void run_report_command(const std::string& history_path, const std::string& out_csv)
{
    const auto records = load_history(history_path);
    if (records.empty()) {
        throw DataError(history_path + ": no history records");
    }

    std::size_t best_index = 0;
    double best_accuracy = -1.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].accuracy && *records[i].accuracy > best_accuracy) {
            best_accuracy = *records[i].accuracy;
            best_index = i;
        }
    }

    std::ostringstream csv;
    csv << "index,step,iteration,temperature,accuracy,fault,total_neurons,group_count,"
           "layer_count,connections_intra,reduction_vs_single_pct,is_best\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& record = records[i];
        csv << i << ',' << record.step << ',' << record.iteration << ','
            << record.temperature << ',';
        if (record.accuracy) {
            csv << *record.accuracy;
        }
        csv << ',' << csv_escape_fault(record.fault) << ',' << record.genome.total_neurons()
            << ',' << record.genome.group_count() << ',' << record.genome.layer_count() << ','
            << potential_connection_count(record.genome) << ','
            << connection_reduction_percent(record.genome) << ',' << (i == best_index ? 1 : 0)
            << '\n';
    }
    if (out_csv.empty() || out_csv == "-") {
        std::cout << csv.str();
    } else {
        atomic_write_file(out_csv, csv.str());
    }
}

}  // namespace lsmnas
