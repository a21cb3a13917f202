#pragma once

#include <cstdint>
#include <string>

#include "lsmnas/encoding.hpp"
#include "lsmnas/pipeline.hpp"

namespace lsmnas {

/// Where the examples come from and how they are encoded.
struct DatasetSpec {
    std::string format = "idx";  // idx | feature_csv | spike_csv

    // idx
    std::string train_images, train_labels;
    std::string test_images, test_labels;

    // feature_csv; an empty test file means the train file is split
    std::string train_features, test_features;
    double split_fraction = 0.8;

    // spike_csv
    std::string train_spikes, train_spike_labels;
    std::string test_spikes, test_spike_labels;
    int channels = 0;  // 0 = infer

    // common
    long train_truncate = 0;  // 0 = all
    long test_truncate = 0;
    double max_intensity = 255.0;
    double max_rate_hz = 63.75;
    int classes = 10;

    bool operator==(const DatasetSpec&) const = default;
};

struct RunConfig {
    DatasetSpec dataset;
    int n_total = 1000;
    int n_group = 1;
    LiquidSpec liquid_defaults{};
    SaConfig sa_step1{};
    SaConfig sa_step2{};
    SaConfig sa_step3{};
    PipelineStages stages{};
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    unsigned threads = 0;

    bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError naming the offending field.
void validate(const RunConfig& config, bool check_files = true);

std::string to_json_string(const RunConfig& config);
RunConfig config_from_json_string(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& config, const std::string& path);

/// Replaces config.dataset with the spec stored in a standalone JSON file.
DatasetSpec load_dataset_spec(const std::string& path);

/// Encoded train/test sets ready for the objective.
struct LoadedData {
    SpikeTrainSet train;
    SpikeTrainSet test;
    int classes = 10;
};

/// Loads the configured dataset and rate-codes it where needed. Encoding
/// seeds derive from the master seed only, so candidates share one encoding.
LoadedData load_and_encode(const DatasetSpec& spec, const SimConfig& sim,
                           std::uint64_t master_seed);

/// Writes content to path via a temp file and rename.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace lsmnas
