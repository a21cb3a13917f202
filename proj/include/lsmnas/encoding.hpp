#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lsmnas {

/// One input example before rate coding: per-channel intensities plus a
/// class label.
struct FeatureExample {
    std::vector<double> channels;
    int label = 0;
};

/// Affine map applied to raw feature values before rate coding;
/// intensity = (raw - offset) * scale.
struct AffineMap {
    double offset = 0.0;
    double scale = 1.0;

    bool operator==(const AffineMap&) const = default;
};

struct FeatureDataset {
    int channel_count = 0;
    /// Intensity ceiling that maps to the maximum spike rate.
    double max_intensity = 255.0;
    AffineMap map;
    std::vector<FeatureExample> examples;

    std::size_t size() const { return examples.size(); }
};

/// IDX-format image/label pair (MNIST layout, big-endian, magic-checked).
FeatureDataset load_idx(const std::string& images_path, const std::string& labels_path);

/// CSV rows of `label, f1, ..., fd`; features are affinely mapped onto
/// [0, max_intensity] with the file-wide min/max and the map is recorded in
/// the dataset metadata.
FeatureDataset load_feature_csv(const std::string& path, double max_intensity = 255.0);

/// First `count` examples (protocol knob for truncated training sets);
/// count == 0 keeps everything.
FeatureDataset truncate_dataset(const FeatureDataset& dataset, std::size_t count);

/// In-file-order split into train/test.
std::pair<FeatureDataset, FeatureDataset> split_dataset(const FeatureDataset& dataset,
                                                        double train_fraction);

/// Spike times per input channel for one example, each channel sorted and
/// strictly increasing within [0, duration).
struct SpikeTrain {
    std::vector<std::vector<double>> channels;

    std::size_t spike_count() const;
};

struct SpikeTrainSet {
    int channel_count = 0;
    double duration_ms = 0.0;
    std::vector<SpikeTrain> examples;
    std::vector<int> labels;

    std::size_t size() const { return examples.size(); }
};

/// Rate coding: a channel with intensity x fires as a Poisson process at
/// x / max_intensity * max_rate_hz, realized as per-timestep Bernoulli
/// draws at probability rate*dt. Channel streams are derived from the seed
/// so they are independent and reproducible.
SpikeTrain poisson_encode(const FeatureExample& example, double max_intensity,
                          double max_rate_hz, double duration_ms, double dt_ms,
                          std::uint64_t seed);

/// Whole-dataset encoding; example i uses a seed derived from (seed, i).
SpikeTrainSet encode_dataset(const FeatureDataset& dataset, double max_rate_hz,
                             double duration_ms, double dt_ms, std::uint64_t seed);

/// Pre-encoded spike trains: spikes CSV rows `example,channel,time_ms` plus
/// a labels CSV of `example,label` rows. channel_count/duration of 0 means
/// infer from the data.
SpikeTrainSet load_spike_csv(const std::string& spikes_path, const std::string& labels_path,
                             int channel_count = 0, double duration_ms = 0.0);

}  // namespace lsmnas
