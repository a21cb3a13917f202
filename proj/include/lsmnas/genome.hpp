#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsmnas/rng.hpp"

namespace lsmnas {

/// Smallest liquid the generators and mutation operators will produce.
/// Keeps every liquid with a usable excitatory population.
inline constexpr int kMinLiquidNeurons = 10;

/// Searchable parameters per liquid: excitatory ratio plus the four
/// intra-liquid connection probabilities.
inline constexpr int kLiquidParamCount = 5;

/// One recurrent group of spiking neurons. The five parameters live on a
/// 0.1 grid inside [0.0, 0.9]; the defaults are the pre-search values.
struct LiquidSpec {
    int neuron_count = 0;
    double excitatory_ratio = 0.8;
    double p_ee = 0.4;
    double p_ei = 0.4;
    double p_ie = 0.5;
    double p_ii = 0.1;

    /// Parameter access by index 0..4 in the order
    /// (excitatory_ratio, p_ee, p_ei, p_ie, p_ii).
    double param(int index) const;
    void set_param(int index, double value);

    bool operator==(const LiquidSpec&) const = default;
};

/// Connection probabilities outside the liquids: input fan-in and the
/// forward inter-layer classes.
struct TopologyConfig {
    double p_input_to_e = 0.1;
    double p_input_to_i = 0.0;
    double p_interlayer_ee = 0.1;
    double p_interlayer_ei = 0.0;
    double p_interlayer_ie = 0.1;
    double p_interlayer_ii = 0.0;

    bool operator==(const TopologyConfig&) const = default;
};

/// Hierarchical multi-liquid architecture: an ordered list of layers, each a
/// non-empty list of parallel liquids. Layers are forward-connected only.
struct LsmGenome {
    std::vector<std::vector<LiquidSpec>> layers;

    int total_neurons() const;
    int group_count() const;
    int layer_count() const { return static_cast<int>(layers.size()); }

    /// Liquids per layer, e.g. [[A,B],[C]] -> {2,1}.
    std::vector<int> shape_signature() const;

    /// Flat liquid view in (layer, position) order.
    std::vector<LiquidSpec> flat() const;

    bool operator==(const LsmGenome&) const = default;
};

/// Throws std::invalid_argument on any structural or parameter-grid
/// violation.
void validate(const LsmGenome& genome);

/// Equal split of total_neurons over the given layer shape; the remainder
/// goes to the earliest liquids. All liquids carry `defaults` parameters.
LsmGenome genome_from_shape(const std::vector<int>& shape, int total_neurons,
                            const LiquidSpec& defaults = {});

/// Single layer of group_count equal liquids.
LsmGenome uniform_genome(int total_neurons, int group_count,
                         const LiquidSpec& defaults = {});

/// Every ordered composition of group_count, i.e. every layer-shape
/// signature reachable by the architecture search. Size is 2^(n-1).
/// Guarded to group_count <= 12.
std::vector<std::vector<int>> enumerate_layerings(int group_count);

struct MutationResult {
    LsmGenome genome;
    /// False when the genome was too small to disturb (single liquid).
    bool applied = true;
};

/// Step-1 move: one liquid relocated to a different layer (an existing one
/// or a new trailing layer). Emptied layers are compacted away and the
/// result always has a different shape signature than the parent.
MutationResult mutate_architecture(const LsmGenome& parent, Rng& rng);

/// Step-2 move: m ~ U{1..max_disturb} neurons from a random donor liquid to
/// a random distinct recipient; m is truncated so the donor keeps at least
/// kMinLiquidNeurons. Requires 0 < max_disturb < total/group.
MutationResult mutate_neuron_counts(const LsmGenome& parent, int max_disturb, Rng& rng);

/// Step-3 move: one liquid, one of its five parameters, +/-0.1, clamped to
/// [0.0, 0.9] on the 0.1 grid.
MutationResult mutate_parameters(const LsmGenome& parent, Rng& rng);

/// Potential intra-liquid connections: sum of n_i^2 over all liquids.
long long potential_connection_count(const LsmGenome& genome);

/// Intra-liquid plus forward inter-layer potential connections.
long long potential_connection_count_with_interlayer(const LsmGenome& genome);

/// Reduction of potential intra-liquid connections relative to one single
/// liquid holding the same neuron total, as a percentage.
double connection_reduction_percent(const LsmGenome& genome);

/// Proportional shrink of every liquid with largest-remainder rounding; the
/// new total equals round(total * keep_fraction). Throws if any liquid
/// would drop below kMinLiquidNeurons.
LsmGenome scale_neuron_counts(const LsmGenome& genome, double keep_fraction);

// --- serialization -------------------------------------------------------

/// Canonical JSON text; byte-stable for identical genomes.
std::string to_json_string(const LsmGenome& genome);
LsmGenome genome_from_json_string(const std::string& text);

void save_genome(const LsmGenome& genome, const std::string& path);
LsmGenome load_genome(const std::string& path);

/// Content hash of the canonical serialization.
std::uint64_t genome_hash(const LsmGenome& genome);

}  // namespace lsmnas
