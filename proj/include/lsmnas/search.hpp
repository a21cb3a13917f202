#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lsmnas/genome.hpp"

namespace lsmnas {

struct SaConfig {
    /// Temperatures are on the accuracy scale.
    double t_initial = 0.05;
    double t_min = 0.005;
    /// Inner-loop evaluations per temperature level (k).
    int inner_iterations = 10;
    std::uint64_t seed = 0;

    bool operator==(const SaConfig&) const = default;
};

void validate(const SaConfig& config);

/// One evaluated candidate in the annealing history.
struct SearchRecord {
    LsmGenome genome;
    /// Empty when the objective faulted and the candidate was skipped.
    std::optional<double> accuracy;
    std::string fault;
    int step = 0;  // 1 | 2 | 3
    double temperature = 0.0;
    /// Evaluation index within the step; 0 is the initial model.
    long iteration = 0;
    std::uint64_t objective_seed = 0;
    /// Wall time of the evaluation; informational only, never serialized.
    double wall_ms = 0.0;
};

/// Candidate fitness: genome -> test accuracy. Implementations must be
/// deterministic, i.e. the same genome always yields the same accuracy.
class Objective {
public:
    virtual ~Objective() = default;
    virtual double evaluate(const LsmGenome& genome) const = 0;
    /// Seed recorded alongside the evaluation, for the history file.
    virtual std::uint64_t seed_for(const LsmGenome&) const { return 0; }
};

/// Objective wrapper around a plain callable, for tests and toy searches.
class LambdaObjective : public Objective {
public:
    explicit LambdaObjective(std::function<double(const LsmGenome&)> fn) : fn_(std::move(fn)) {}
    double evaluate(const LsmGenome& genome) const override { return fn_(genome); }

private:
    std::function<double(const LsmGenome&)> fn_;
};

using MutateFn = std::function<MutationResult(const LsmGenome&, Rng&)>;

/// Append-only JSON-lines sink; one record per line, flushed immediately so
/// interrupted searches can resume from the file.
class HistoryWriter {
public:
    HistoryWriter(const std::string& path, bool append);
    void write(const SearchRecord& record);

private:
    std::ofstream out_;
    std::string path_;
};

SearchRecord record_from_json_line(const std::string& line);
std::vector<SearchRecord> load_history(const std::string& path);

/// Previously persisted evaluations keyed by (step, iteration). During a
/// resumed run the recorded accuracy is reused instead of re-evaluating,
/// after checking that the regenerated genome matches the recorded one.
class Journal {
public:
    Journal() = default;
    static Journal load(const std::string& path);

    const SearchRecord* find(int step, long iteration) const;
    bool empty() const { return records_.empty(); }

private:
    std::map<std::pair<int, long>, SearchRecord> records_;
};

/// Acceptance rule: a better child is always accepted; a worse or equal one
/// with probability exp(-(parent_acc - child_acc) / temperature).
bool sa_accept(double parent_acc, double child_acc, double temperature, Rng& rng);

/// Harmonic cooling: T = t_initial / (t + 1).
double temperature_schedule(double t_initial, long t);

struct SaResult {
    SearchRecord best;
    std::vector<SearchRecord> history;
};

/// One annealing chain: k evaluations per temperature level, harmonic
/// cooling until T <= t_min, returning the history argmax (not the final
/// parent). Objective faults are recorded, skipped, and still consume an
/// iteration.
SaResult run_sa(const LsmGenome& initial, const MutateFn& mutate, const Objective& objective,
                const SaConfig& config, int step_id, HistoryWriter* writer = nullptr,
                const Journal* journal = nullptr);

struct ThreeStepOptions {
    int n_total = 1000;
    int n_group = 1;
    LiquidSpec liquid_defaults{};
    std::array<SaConfig, 3> steps{};
};

struct ThreeStepResult {
    SearchRecord best;
    std::array<SearchRecord, 3> step_best;
    std::vector<SearchRecord> history;
};

/// The full pipeline: step 1 anneals the layer architecture from a random
/// layering of n_group equal liquids, step 2 reallocates neuron counts from
/// step 1's best, step 3 perturbs per-liquid parameters from step 2's best.
/// Degenerate single-liquid searches evaluate the initial model only.
ThreeStepResult three_step_search(const Objective& objective, const ThreeStepOptions& options,
                                  HistoryWriter* writer = nullptr,
                                  const Journal* journal = nullptr);

struct MinimizeRow {
    double fraction = 1.0;
    int total_neurons = 0;
    std::optional<double> accuracy;
    std::string error;
};

/// Proportional neuron-budget sweep: evaluates scale_neuron_counts at each
/// fraction with a fresh network instantiation inside the objective.
/// Fractions that violate the liquid floor are reported, not fatal.
std::vector<MinimizeRow> minimize_neurons(const LsmGenome& genome, const Objective& objective,
                                          const std::vector<double>& fractions);

}  // namespace lsmnas
