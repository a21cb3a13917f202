#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "lsmnas/encoding.hpp"
#include "lsmnas/genome.hpp"

namespace testutil {

inline std::string source_path(const std::string& relative)
{
    return std::string(LSMNAS_SOURCE_DIR) + "/" + relative;
}

/// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir()
    {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("lsmnas_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

/// Independent composition enumerator: every ordered way to write n as a
/// sum of positive parts, built recursively. Oracle for enumerate_layerings.
inline void compositions_rec(int n, std::vector<int>& prefix,
                             std::vector<std::vector<int>>& out)
{
    if (n == 0) {
        out.push_back(prefix);
        return;
    }
    for (int first = 1; first <= n; ++first) {
        prefix.push_back(first);
        compositions_rec(n - first, prefix, out);
        prefix.pop_back();
    }
}

inline std::vector<std::vector<int>> compositions_oracle(int n)
{
    std::vector<std::vector<int>> out;
    std::vector<int> prefix;
    compositions_rec(n, prefix, out);
    return out;
}

/// Two-class rate-separable toy dataset: class 0 drives the low channel
/// block hard and the high block weakly, class 1 the reverse. Sized so a
/// liquid with p_input_to_e = 0.5 fires well inside the working band.
inline lsmnas::FeatureDataset separable_dataset(int examples_per_class, int channels = 40,
                                                unsigned jitter_seed = 7)
{
    lsmnas::FeatureDataset dataset;
    dataset.channel_count = channels;
    dataset.max_intensity = 255.0;
    std::mt19937 jitter(jitter_seed);
    std::uniform_int_distribution<int> hot_noise(-8, 8);
    std::uniform_int_distribution<int> cold_noise(0, 8);
    for (int i = 0; i < examples_per_class; ++i) {
        for (int label = 0; label < 2; ++label) {
            lsmnas::FeatureExample example;
            example.label = label;
            example.channels.resize(channels);
            for (int c = 0; c < channels; ++c) {
                const bool hot = (c < channels / 2) == (label == 0);
                example.channels[c] = hot ? 230.0 + hot_noise(jitter)
                                          : static_cast<double>(cold_noise(jitter));
            }
            dataset.examples.push_back(std::move(example));
        }
    }
    return dataset;
}

/// Input connectivity that keeps the toy fixtures firing: a handful of
/// channels needs a denser fan-in than the 784-channel image default.
inline lsmnas::TopologyConfig dense_input_topology(double p_input_to_e = 0.5)
{
    lsmnas::TopologyConfig topo;
    topo.p_input_to_e = p_input_to_e;
    return topo;
}

inline lsmnas::LsmGenome table2_genome()
{
    return lsmnas::load_genome(source_path("data/genomes/mnist_parallel4.json"));
}

}  // namespace testutil
