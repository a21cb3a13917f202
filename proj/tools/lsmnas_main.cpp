// Command-line front end: search / evaluate / minimize / report.

#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsmnas/commands.hpp"
#include "lsmnas/errors.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSimulation = 4;

std::vector<double> parse_fractions(const std::string& text)
{
    std::vector<double> fractions;
    std::istringstream stream(text);
    std::string token;
    while (std::getline(stream, token, ',')) {
        if (token.empty()) {
            continue;
        }
        fractions.push_back(std::stod(token));
    }
    if (fractions.empty()) {
        throw lsmnas::ConfigError("--fractions: no values given");
    }
    return fractions;
}

struct CommonArgs {
    std::string config_path;
    std::string dataset_path;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 0;
    bool threads_set = false;
};

lsmnas::RunConfig resolve_config(const CommonArgs& args)
{
    lsmnas::RunConfig config;
    if (!args.config_path.empty()) {
        config = lsmnas::load_config(args.config_path);
    }
    if (!args.dataset_path.empty()) {
        config.dataset = lsmnas::load_dataset_spec(args.dataset_path);
    }
    if (args.seed_set) {
        config.seed = args.seed;
    }
    if (args.threads_set) {
        config.threads = args.threads;
    }
    return config;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required)
{
    auto* config = cmd->add_option("--config", args.config_path, "Run configuration JSON");
    if (config_required) {
        config->required();
    }
    cmd->add_option("--dataset", args.dataset_path,
                    "Dataset spec JSON (overrides the config's dataset block)");
    cmd->add_option("--seed", args.seed, "Master seed (overrides the config)")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--threads", args.threads, "Worker threads for batch simulation")
        ->each([&args](const std::string&) { args.threads_set = true; });
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-liquid LSM architecture search"};
    app.require_subcommand(1);

    CommonArgs search_args;
    bool resume = false;
    auto* search = app.add_subcommand("search", "Run the three-step annealing search");
    add_common(search, search_args, true);
    search->add_option("--out", search_args.out, "Output directory (overrides the config)");
    search->add_flag("--resume", resume, "Reuse evaluations from an existing history file");

    CommonArgs eval_args;
    std::string eval_genome;
    int raster_examples = 0;
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a saved genome on a dataset");
    add_common(evaluate, eval_args, true);
    evaluate->add_option("--genome", eval_genome, "Genome JSON file")->required();
    evaluate->add_option("--out", eval_args.out, "Report path (default: stdout)");
    evaluate->add_option("--raster", raster_examples,
                         "Also dump spike rasters for the first N test examples");
    std::string save_network_path, save_model_path;
    evaluate->add_option("--save-network", save_network_path,
                         "Export the realized network as a binary snapshot");
    evaluate->add_option("--save-model", save_model_path,
                         "Export the fitted readout model");

    CommonArgs minimize_args;
    std::string minimize_genome;
    std::string fractions_text = "1.0,0.9,0.8,0.6";
    auto* minimize = app.add_subcommand("minimize", "Accuracy-vs-neuron-budget sweep");
    add_common(minimize, minimize_args, true);
    minimize->add_option("--genome", minimize_genome, "Genome JSON file")->required();
    minimize->add_option("--fractions", fractions_text, "Comma-separated keep fractions");
    minimize->add_option("--out", minimize_args.out, "CSV path (default: stdout)");

    std::string history_path;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Accuracy curves and connection analytics");
    report->add_option("--history", history_path, "history.jsonl from a search run")->required();
    report->add_option("--out", report_out, "CSV path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (search->parsed()) {
            lsmnas::RunConfig config = resolve_config(search_args);
            if (!search_args.out.empty()) {
                config.out_dir = search_args.out;
            }
            lsmnas::run_search_command(config, resume);
        } else if (evaluate->parsed()) {
            lsmnas::run_evaluate_command(resolve_config(eval_args), eval_genome, eval_args.out,
                                         raster_examples, save_network_path, save_model_path);
        } else if (minimize->parsed()) {
            lsmnas::run_minimize_command(resolve_config(minimize_args), minimize_genome,
                                         parse_fractions(fractions_text), minimize_args.out);
        } else if (report->parsed()) {
            lsmnas::run_report_command(history_path, report_out);
        }
    } catch (const lsmnas::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const lsmnas::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const lsmnas::SimulationFault& e) {
        std::cerr << "simulation fault: " << e.what() << '\n';
        return kExitSimulation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
