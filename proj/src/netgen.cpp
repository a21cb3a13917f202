#include "lsmnas/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "lsmnas/errors.hpp"

namespace lsmnas {

namespace {

constexpr std::uint32_t kSnapshotMagic = 0x4c534d4e;  // "LSMN"
constexpr std::uint32_t kSnapshotVersion = 1;

// Exact floor(n * ratio) for ratios on the 0.1 grid.
int excitatory_count_for(int neuron_count, double ratio)
{
    const int tenths = static_cast<int>(std::lround(ratio * 10.0));
    return neuron_count * tenths / 10;
}

double sample_weight(Rng& rng, const NormalParams& params)
{
    return std::max(0.0, rng.normal(params.mean, params.stddev));
}

// Bernoulli sweep over the ordered (pre, post) cross product of two id
// ranges. exclude_self skips pre == post and only applies where both
// ranges index the same neuron space (intra-liquid blocks); input channels
// live in their own id space.
void connect_blocks(std::vector<Synapse>& out, Rng& rng, double probability,
                    const NormalParams& weight, SynapseSign sign, int pre_first,
                    int pre_count, int post_first, int post_count, bool exclude_self)
{
    if (probability <= 0.0 || pre_count <= 0 || post_count <= 0) {
        return;
    }
    for (int pre = pre_first; pre < pre_first + pre_count; ++pre) {
        for (int post = post_first; post < post_first + post_count; ++post) {
            if (exclude_self && pre == post) {
                continue;
            }
            if (rng.bernoulli(probability)) {
                out.push_back({pre, post, sample_weight(rng, weight), sign});
            }
        }
    }
}

}  // namespace

const char* connection_class_name(ConnectionClass cls)
{
    switch (cls) {
    case ConnectionClass::input_to_e: return "input_to_e";
    case ConnectionClass::input_to_i: return "input_to_i";
    case ConnectionClass::ee: return "ee";
    case ConnectionClass::ei: return "ei";
    case ConnectionClass::ie: return "ie";
    case ConnectionClass::ii: return "ii";
    case ConnectionClass::inter_ee: return "inter_ee";
    case ConnectionClass::inter_ei: return "inter_ei";
    case ConnectionClass::inter_ie: return "inter_ie";
    case ConnectionClass::inter_ii: return "inter_ii";
    default: return "unknown";
    }
}

long long ConnectionCounts::total() const
{
    return std::accumulate(by_class.begin(), by_class.end(), 0LL);
}

int NetworkInstance::population_of(int neuron_id) const
{
    int lo = 0;
    int hi = static_cast<int>(populations.size()) - 1;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (populations[mid].first_neuron <= neuron_id) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    return lo;
}

bool NetworkInstance::is_excitatory(int neuron_id) const
{
    const auto& pop = populations[population_of(neuron_id)];
    return neuron_id < pop.first_neuron + pop.excitatory_count;
}

NetworkInstance instantiate(const LsmGenome& genome, const TopologyConfig& topology,
                            const WeightInitConfig& weights, int input_channels,
                            std::uint64_t seed)
{
    if (input_channels < 1) {
        throw std::invalid_argument("network needs at least one input channel");
    }
    validate(genome);

    NetworkInstance net;
    net.input_channels = input_channels;
    net.seed = seed;

    int next_id = 0;
    int liquid_index = 0;
    for (int layer = 0; layer < genome.layer_count(); ++layer) {
        for (const auto& liquid : genome.layers[layer]) {
            NeuronPopulation pop;
            pop.layer_index = layer;
            pop.liquid_index = liquid_index++;
            pop.first_neuron = next_id;
            pop.excitatory_count =
                excitatory_count_for(liquid.neuron_count, liquid.excitatory_ratio);
            pop.inhibitory_count = liquid.neuron_count - pop.excitatory_count;
            next_id += liquid.neuron_count;
            net.excitatory_count += pop.excitatory_count;
            net.populations.push_back(pop);
        }
    }
    net.neuron_count = next_id;

    Rng rng(seed);

    // Input fan-in: the encoding layer is all-excitatory and feeds every
    // liquid in every layer.
    for (int channel = 0; channel < input_channels; ++channel) {
        for (const auto& pop : net.populations) {
            connect_blocks(net.input_synapses, rng, topology.p_input_to_e, weights.input,
                           SynapseSign::excitatory, channel, 1, pop.first_neuron,
                           pop.excitatory_count, false);
            connect_blocks(net.input_synapses, rng, topology.p_input_to_i, weights.input,
                           SynapseSign::excitatory, channel, 1,
                           pop.first_neuron + pop.excitatory_count, pop.inhibitory_count,
                           false);
        }
    }

    // Recurrent connections inside each liquid.
    const auto flat = genome.flat();
    for (std::size_t i = 0; i < net.populations.size(); ++i) {
        const auto& pop = net.populations[i];
        const auto& spec = flat[i];
        const int e0 = pop.first_neuron;
        const int i0 = pop.first_neuron + pop.excitatory_count;
        connect_blocks(net.liquid_synapses, rng, spec.p_ee, weights.ee,
                       SynapseSign::excitatory, e0, pop.excitatory_count, e0,
                       pop.excitatory_count, true);
        connect_blocks(net.liquid_synapses, rng, spec.p_ei, weights.ei,
                       SynapseSign::excitatory, e0, pop.excitatory_count, i0,
                       pop.inhibitory_count, true);
        connect_blocks(net.liquid_synapses, rng, spec.p_ie, weights.ie,
                       SynapseSign::inhibitory, i0, pop.inhibitory_count, e0,
                       pop.excitatory_count, true);
        connect_blocks(net.liquid_synapses, rng, spec.p_ii, weights.ii,
                       SynapseSign::inhibitory, i0, pop.inhibitory_count, i0,
                       pop.inhibitory_count, true);
    }

    // Forward inter-layer connections: every liquid feeds every liquid in
    // every later layer, never the other way around.
    for (std::size_t a = 0; a < net.populations.size(); ++a) {
        for (std::size_t b = 0; b < net.populations.size(); ++b) {
            const auto& pre = net.populations[a];
            const auto& post = net.populations[b];
            if (post.layer_index <= pre.layer_index) {
                continue;
            }
            const int pre_e0 = pre.first_neuron;
            const int pre_i0 = pre.first_neuron + pre.excitatory_count;
            const int post_e0 = post.first_neuron;
            const int post_i0 = post.first_neuron + post.excitatory_count;
            connect_blocks(net.liquid_synapses, rng, topology.p_interlayer_ee,
                           weights.interlayer, SynapseSign::excitatory, pre_e0,
                           pre.excitatory_count, post_e0, post.excitatory_count, false);
            connect_blocks(net.liquid_synapses, rng, topology.p_interlayer_ei,
                           weights.interlayer, SynapseSign::excitatory, pre_e0,
                           pre.excitatory_count, post_i0, post.inhibitory_count, false);
            connect_blocks(net.liquid_synapses, rng, topology.p_interlayer_ie,
                           weights.interlayer, SynapseSign::inhibitory, pre_i0,
                           pre.inhibitory_count, post_e0, post.excitatory_count, false);
            connect_blocks(net.liquid_synapses, rng, topology.p_interlayer_ii,
                           weights.interlayer, SynapseSign::inhibitory, pre_i0,
                           pre.inhibitory_count, post_i0, post.inhibitory_count, false);
        }
    }

    return net;
}

ConnectionCounts realized_connection_count(const NetworkInstance& net)
{
    ConnectionCounts counts;
    for (const auto& synapse : net.input_synapses) {
        if (net.is_excitatory(synapse.post)) {
            ++counts[ConnectionClass::input_to_e];
        } else {
            ++counts[ConnectionClass::input_to_i];
        }
    }
    for (const auto& synapse : net.liquid_synapses) {
        const int pre_pop = net.population_of(synapse.pre);
        const int post_pop = net.population_of(synapse.post);
        const bool pre_exc = net.is_excitatory(synapse.pre);
        const bool post_exc = net.is_excitatory(synapse.post);
        ConnectionClass cls;
        if (pre_pop == post_pop) {
            cls = pre_exc ? (post_exc ? ConnectionClass::ee : ConnectionClass::ei)
                          : (post_exc ? ConnectionClass::ie : ConnectionClass::ii);
        } else {
            cls = pre_exc ? (post_exc ? ConnectionClass::inter_ee : ConnectionClass::inter_ei)
                          : (post_exc ? ConnectionClass::inter_ie : ConnectionClass::inter_ii);
        }
        ++counts[cls];
    }
    return counts;
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& value)
{
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path, std::size_t& offset)
{
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (in.gcount() != sizeof(T)) {
        throw TruncatedFileError(path, offset + static_cast<std::size_t>(in.gcount()));
    }
    offset += sizeof(T);
    return value;
}

void write_synapses(std::ofstream& out, const std::vector<Synapse>& synapses)
{
    write_pod(out, static_cast<std::uint64_t>(synapses.size()));
    for (const auto& s : synapses) {
        write_pod(out, s.pre);
        write_pod(out, s.post);
        write_pod(out, s.weight);
        write_pod(out, static_cast<std::uint8_t>(s.sign));
    }
}

std::vector<Synapse> read_synapses(std::ifstream& in, const std::string& path,
                                   std::size_t& offset)
{
    const auto count = read_pod<std::uint64_t>(in, path, offset);
    std::vector<Synapse> synapses;
    synapses.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Synapse s;
        s.pre = read_pod<std::int32_t>(in, path, offset);
        s.post = read_pod<std::int32_t>(in, path, offset);
        s.weight = read_pod<double>(in, path, offset);
        s.sign = static_cast<SynapseSign>(read_pod<std::uint8_t>(in, path, offset));
        synapses.push_back(s);
    }
    return synapses;
}

}  // namespace

void save_network(const NetworkInstance& net, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    write_pod(out, kSnapshotMagic);
    write_pod(out, kSnapshotVersion);
    write_pod(out, net.seed);
    write_pod(out, static_cast<std::int32_t>(net.input_channels));
    write_pod(out, static_cast<std::uint32_t>(net.populations.size()));
    for (const auto& pop : net.populations) {
        write_pod(out, static_cast<std::int32_t>(pop.layer_index));
        write_pod(out, static_cast<std::int32_t>(pop.excitatory_count));
        write_pod(out, static_cast<std::int32_t>(pop.inhibitory_count));
    }
    write_synapses(out, net.input_synapses);
    write_synapses(out, net.liquid_synapses);
    if (!out) {
        throw DataError("write failure on " + path);
    }
}

NetworkInstance load_network(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open network snapshot " + path);
    }
    std::size_t offset = 0;
    const auto magic = read_pod<std::uint32_t>(in, path, offset);
    if (magic != kSnapshotMagic) {
        throw BadMagicError(path + ": not a network snapshot");
    }
    const auto version = read_pod<std::uint32_t>(in, path, offset);
    if (version != kSnapshotVersion) {
        throw DataError(path + ": unsupported snapshot version " + std::to_string(version));
    }

    NetworkInstance net;
    net.seed = read_pod<std::uint64_t>(in, path, offset);
    net.input_channels = read_pod<std::int32_t>(in, path, offset);
    const auto population_count = read_pod<std::uint32_t>(in, path, offset);
    int next_id = 0;
    int liquid_index = 0;
    for (std::uint32_t i = 0; i < population_count; ++i) {
        NeuronPopulation pop;
        pop.layer_index = read_pod<std::int32_t>(in, path, offset);
        pop.excitatory_count = read_pod<std::int32_t>(in, path, offset);
        pop.inhibitory_count = read_pod<std::int32_t>(in, path, offset);
        pop.liquid_index = liquid_index++;
        pop.first_neuron = next_id;
        next_id += pop.neuron_count();
        net.excitatory_count += pop.excitatory_count;
        net.populations.push_back(pop);
    }
    net.neuron_count = next_id;
    net.input_synapses = read_synapses(in, path, offset);
    net.liquid_synapses = read_synapses(in, path, offset);
    return net;
}

}  // namespace lsmnas
