#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lsmnas/genome.hpp"

namespace lsmnas {

enum class SynapseSign : std::uint8_t { excitatory = 0, inhibitory = 1 };

/// One realized connection. Weights are conductance increments and always
/// non-negative; the sign tells which conductance the spike feeds.
struct Synapse {
    std::int32_t pre = 0;
    std::int32_t post = 0;
    double weight = 0.0;
    SynapseSign sign = SynapseSign::excitatory;

    bool operator==(const Synapse&) const = default;
};

struct NormalParams {
    double mean = 0.0;
    double stddev = 0.0;

    bool operator==(const NormalParams&) const = default;
};

/// Weight distributions per connection class; samples are truncated at 0
/// from below. Inter-layer connections use a dedicated class.
struct WeightInitConfig {
    NormalParams input{0.6, 0.15};
    NormalParams ee{0.5, 0.1};
    NormalParams ei{0.5, 0.1};
    NormalParams ie{1.0, 0.2};
    NormalParams ii{1.0, 0.2};
    NormalParams interlayer{0.5, 0.1};

    bool operator==(const WeightInitConfig&) const = default;
};

/// One liquid's realized populations. Neuron ids are assigned contiguously
/// in (layer, liquid) order with the excitatory block first.
struct NeuronPopulation {
    int layer_index = 0;
    int liquid_index = 0;
    int first_neuron = 0;
    int excitatory_count = 0;
    int inhibitory_count = 0;

    int neuron_count() const { return excitatory_count + inhibitory_count; }

    bool operator==(const NeuronPopulation&) const = default;
};

enum class ConnectionClass : int {
    input_to_e = 0,
    input_to_i,
    ee,
    ei,
    ie,
    ii,
    inter_ee,
    inter_ei,
    inter_ie,
    inter_ii,
    count
};

const char* connection_class_name(ConnectionClass cls);

struct ConnectionCounts {
    std::array<long long, static_cast<int>(ConnectionClass::count)> by_class{};

    long long& operator[](ConnectionClass cls) { return by_class[static_cast<int>(cls)]; }
    long long operator[](ConnectionClass cls) const { return by_class[static_cast<int>(cls)]; }
    long long total() const;
};

/// A concrete network realized from a genome: populations plus the input
/// and liquid synapse lists. Immutable after construction and safe to share
/// across threads.
struct NetworkInstance {
    std::vector<NeuronPopulation> populations;
    int input_channels = 0;
    int neuron_count = 0;
    int excitatory_count = 0;
    std::uint64_t seed = 0;

    std::vector<Synapse> input_synapses;   // pre is an input channel id
    std::vector<Synapse> liquid_synapses;  // pre/post are liquid neuron ids

    /// Index into populations for a liquid neuron id.
    int population_of(int neuron_id) const;
    bool is_excitatory(int neuron_id) const;
};

/// Realizes a network. Each candidate connection is an independent
/// Bernoulli draw per ordered neuron pair (self-pairs excluded), so no
/// duplicates arise by construction. Fully deterministic given the seed.
NetworkInstance instantiate(const LsmGenome& genome, const TopologyConfig& topology,
                            const WeightInitConfig& weights, int input_channels,
                            std::uint64_t seed);

/// Exact per-class synapse counts, re-derived from the synapse lists.
ConnectionCounts realized_connection_count(const NetworkInstance& net);

/// Versioned binary snapshot for replay.
void save_network(const NetworkInstance& net, const std::string& path);
NetworkInstance load_network(const std::string& path);

}  // namespace lsmnas
