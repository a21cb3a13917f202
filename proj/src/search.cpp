#include "lsmnas/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "lsmnas/errors.hpp"

namespace lsmnas {

namespace {

nlohmann::json record_to_json(const SearchRecord& record)
{
    nlohmann::json doc{{"genome", nlohmann::json::parse(to_json_string(record.genome))},
                       {"step", record.step},
                       {"temperature", record.temperature},
                       {"iteration", record.iteration},
                       {"seed", record.objective_seed}};
    if (record.accuracy) {
        doc["accuracy"] = *record.accuracy;
    } else {
        doc["accuracy"] = nullptr;
        doc["fault"] = record.fault;
    }
    return doc;
}

double now_ms()
{
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

void validate(const SaConfig& config)
{
    // t_min >= t_initial is tolerated here and yields an empty chain; the
    // CLI config validation is stricter.
    if (!(config.t_initial > 0.0) || !(config.t_min > 0.0)) {
        throw std::invalid_argument("annealing temperatures must be positive");
    }
    if (config.inner_iterations < 1) {
        throw std::invalid_argument("inner iteration count must be at least 1");
    }
}

HistoryWriter::HistoryWriter(const std::string& path, bool append)
    : out_(path, append ? std::ios::app : std::ios::trunc), path_(path)
{
    if (!out_) {
        throw DataError("cannot open history file " + path + " for writing");
    }
}

void HistoryWriter::write(const SearchRecord& record)
{
    out_ << record_to_json(record).dump() << '\n';
    out_.flush();
    if (!out_) {
        throw DataError("write failure on history file " + path_);
    }
}

SearchRecord record_from_json_line(const std::string& line)
{
    const nlohmann::json doc = nlohmann::json::parse(line);
    SearchRecord record;
    record.genome = genome_from_json_string(doc.at("genome").dump());
    record.step = doc.at("step").get<int>();
    record.temperature = doc.at("temperature").get<double>();
    record.iteration = doc.at("iteration").get<long>();
    record.objective_seed = doc.at("seed").get<std::uint64_t>();
    if (!doc.at("accuracy").is_null()) {
        record.accuracy = doc.at("accuracy").get<double>();
    } else {
        record.fault = doc.value("fault", "");
    }
    return record;
}

std::vector<SearchRecord> load_history(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open history file " + path);
    }
    std::vector<SearchRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            records.push_back(record_from_json_line(line));
        } catch (const nlohmann::json::exception&) {
            break;  // tolerate a partially written trailing line
        }
    }
    return records;
}

Journal Journal::load(const std::string& path)
{
    Journal journal;
    for (auto& record : load_history(path)) {
        journal.records_[{record.step, record.iteration}] = std::move(record);
    }
    return journal;
}

const SearchRecord* Journal::find(int step, long iteration) const
{
    const auto it = records_.find({step, iteration});
    return it == records_.end() ? nullptr : &it->second;
}

bool sa_accept(double parent_acc, double child_acc, double temperature, Rng& rng)
{
    if (temperature <= 0.0) {
        throw std::invalid_argument("acceptance needs a positive temperature");
    }
    if (child_acc > parent_acc) {
        return true;
    }
    const double p = std::exp(-(parent_acc - child_acc) / temperature);
    return rng.uniform01() < p;
}

double temperature_schedule(double t_initial, long t)
{
    if (t < 0) {
        throw std::invalid_argument("cooling index must be non-negative");
    }
    return t_initial / static_cast<double>(t + 1);
}

namespace {

// Evaluates a candidate, or replays the persisted result when the journal
// already holds this (step, iteration). A faulting objective yields a
// record with no accuracy.
SearchRecord evaluate_candidate(const LsmGenome& genome, const Objective& objective,
                                int step_id, long iteration, double temperature,
                                HistoryWriter* writer, const Journal* journal)
{
    SearchRecord record;
    record.genome = genome;
    record.step = step_id;
    record.iteration = iteration;
    record.temperature = temperature;
    record.objective_seed = objective.seed_for(genome);

    if (journal) {
        if (const SearchRecord* past = journal->find(step_id, iteration)) {
            if (genome_hash(past->genome) != genome_hash(genome)) {
                throw ConfigError(
                    "history mismatch at step " + std::to_string(step_id) + ", iteration " +
                    std::to_string(iteration) +
                    ": the resumed configuration generates a different candidate");
            }
            record.accuracy = past->accuracy;
            record.fault = past->fault;
            if (writer) {
                writer->write(record);
            }
            return record;
        }
    }

    const double started = now_ms();
    try {
        record.accuracy = objective.evaluate(genome);
    } catch (const std::exception& e) {
        record.fault = e.what();
    }
    record.wall_ms = now_ms() - started;
    if (writer) {
        writer->write(record);
    }
    return record;
}

}  // namespace

SaResult run_sa(const LsmGenome& initial, const MutateFn& mutate, const Objective& objective,
                const SaConfig& config, int step_id, HistoryWriter* writer,
                const Journal* journal)
{
    validate(config);
    Rng rng(config.seed);

    SaResult result;
    long iteration = 0;
    SearchRecord parent = evaluate_candidate(initial, objective, step_id, iteration++,
                                             config.t_initial, writer, journal);
    if (!parent.accuracy) {
        throw std::runtime_error("initial model failed to evaluate: " + parent.fault);
    }
    result.history.push_back(parent);

    long t = 0;
    double temperature = config.t_initial;
    while (temperature > config.t_min) {
        for (int i = 0; i < config.inner_iterations; ++i) {
            const MutationResult child = mutate(parent.genome, rng);
            SearchRecord record = evaluate_candidate(child.genome, objective, step_id,
                                                     iteration++, temperature, writer, journal);
            result.history.push_back(record);
            if (record.accuracy &&
                sa_accept(*parent.accuracy, *record.accuracy, temperature, rng)) {
                parent = std::move(record);
            }
        }
        ++t;
        temperature = temperature_schedule(config.t_initial, t);
    }

    result.best = result.history.front();
    for (const auto& record : result.history) {
        if (record.accuracy &&
            (!result.best.accuracy || *record.accuracy > *result.best.accuracy)) {
            result.best = record;
        }
    }
    return result;
}

ThreeStepResult three_step_search(const Objective& objective, const ThreeStepOptions& options,
                                  HistoryWriter* writer, const Journal* journal)
{
    if (options.n_group < 1) {
        throw std::invalid_argument("group count must be at least 1");
    }
    for (const auto& step : options.steps) {
        validate(step);
    }

    // RandomArchitecture(): a uniform draw over every reachable layering,
    // with the neuron budget split equally across liquids.
    Rng arch_rng(derive_seed(options.steps[0].seed, 0x6172636831ull));
    const auto layerings = enumerate_layerings(options.n_group);
    const auto& shape = layerings[arch_rng.index(static_cast<int>(layerings.size()))];
    const LsmGenome initial = genome_from_shape(shape, options.n_total, options.liquid_defaults);

    ThreeStepResult result;
    auto run_step = [&](int step_id, const LsmGenome& start, const MutateFn& mutate,
                        const SaConfig& config, bool degenerate) {
        if (degenerate) {
            // Nothing to disturb: evaluate the inherited model once so the
            // step still contributes its record to the history.
            SearchRecord record = evaluate_candidate(start, objective, step_id, 0,
                                                     config.t_initial, writer, journal);
            if (!record.accuracy) {
                throw std::runtime_error("initial model failed to evaluate: " + record.fault);
            }
            result.history.push_back(record);
            return record;
        }
        SaResult sa = run_sa(start, mutate, objective, config, step_id, writer, journal);
        result.history.insert(result.history.end(), sa.history.begin(), sa.history.end());
        return sa.best;
    };

    const bool single = options.n_group == 1;
    result.step_best[0] =
        run_step(1, initial,
                 [](const LsmGenome& parent, Rng& rng) { return mutate_architecture(parent, rng); },
                 options.steps[0], single);

    const int max_disturb = std::max(1, options.n_total / options.n_group - 1);
    result.step_best[1] =
        run_step(2, result.step_best[0].genome,
                 [max_disturb](const LsmGenome& parent, Rng& rng) {
                     return mutate_neuron_counts(parent, max_disturb, rng);
                 },
                 options.steps[1], single);

    result.step_best[2] =
        run_step(3, result.step_best[1].genome,
                 [](const LsmGenome& parent, Rng& rng) { return mutate_parameters(parent, rng); },
                 options.steps[2], false);

    result.best = result.step_best[2];
    return result;
}

std::vector<MinimizeRow> minimize_neurons(const LsmGenome& genome, const Objective& objective,
                                          const std::vector<double>& fractions)
{
    if (fractions.empty()) {
        throw std::invalid_argument("need at least one fraction");
    }
    for (double fraction : fractions) {
        if (!(fraction > 0.0) || fraction > 1.0) {
            throw std::invalid_argument("fractions must lie in (0, 1]");
        }
    }

    std::vector<MinimizeRow> rows;
    rows.reserve(fractions.size());
    for (double fraction : fractions) {
        MinimizeRow row;
        row.fraction = fraction;
        try {
            const LsmGenome scaled = scale_neuron_counts(genome, fraction);
            row.total_neurons = scaled.total_neurons();
            row.accuracy = objective.evaluate(scaled);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace lsmnas
