#pragma once

#include <string>
#include <vector>

#include "lsmnas/config.hpp"

namespace lsmnas {

/// Runs the three-step search and writes effective_config.json,
/// history.jsonl, best_genome.json and summary.json into config.out_dir.
/// With resume, a pre-existing history file is replayed instead of
/// re-evaluating.
void run_search_command(const RunConfig& config, bool resume = false);

/// Replays a saved genome against the configured dataset and writes an
/// accuracy report. raster_examples > 0 additionally dumps spike rasters
/// of the first test examples; non-empty network/model paths export the
/// realized network snapshot and the fitted readout.
void run_evaluate_command(const RunConfig& config, const std::string& genome_path,
                          const std::string& out_path, int raster_examples = 0,
                          const std::string& save_network_path = {},
                          const std::string& save_model_path = {});

/// Accuracy-vs-fraction sweep; writes a CSV of (fraction, neurons, accuracy).
void run_minimize_command(const RunConfig& config, const std::string& genome_path,
                          const std::vector<double>& fractions, const std::string& out_csv);

/// Per-record accuracy curve and connection analytics from a history file.
void run_report_command(const std::string& history_path, const std::string& out_csv);

}  // namespace lsmnas
