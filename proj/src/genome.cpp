#include "lsmnas/genome.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lsmnas/errors.hpp"

namespace lsmnas {

namespace {

constexpr const char* kGenomeFormat = "lsm-genome/1";

int grid_tenths(double value)
{
    const double scaled = value * 10.0;
    const int tenths = static_cast<int>(std::lround(scaled));
    if (std::abs(scaled - tenths) > 1e-6 || tenths < 0 || tenths > 9) {
        throw std::invalid_argument("liquid parameter " + std::to_string(value) +
                                    " is not on the 0.1 grid in [0.0, 0.9]");
    }
    return tenths;
}

}  // namespace

double LiquidSpec::param(int index) const
{
    switch (index) {
    case 0: return excitatory_ratio;
    case 1: return p_ee;
    case 2: return p_ei;
    case 3: return p_ie;
    case 4: return p_ii;
    default: throw std::invalid_argument("liquid parameter index out of range");
    }
}

void LiquidSpec::set_param(int index, double value)
{
    switch (index) {
    case 0: excitatory_ratio = value; break;
    case 1: p_ee = value; break;
    case 2: p_ei = value; break;
    case 3: p_ie = value; break;
    case 4: p_ii = value; break;
    default: throw std::invalid_argument("liquid parameter index out of range");
    }
}

int LsmGenome::total_neurons() const
{
    int total = 0;
    for (const auto& layer : layers) {
        for (const auto& liquid : layer) {
            total += liquid.neuron_count;
        }
    }
    return total;
}

int LsmGenome::group_count() const
{
    int count = 0;
    for (const auto& layer : layers) {
        count += static_cast<int>(layer.size());
    }
    return count;
}

std::vector<int> LsmGenome::shape_signature() const
{
    std::vector<int> shape;
    shape.reserve(layers.size());
    for (const auto& layer : layers) {
        shape.push_back(static_cast<int>(layer.size()));
    }
    return shape;
}

std::vector<LiquidSpec> LsmGenome::flat() const
{
    std::vector<LiquidSpec> out;
    out.reserve(group_count());
    for (const auto& layer : layers) {
        out.insert(out.end(), layer.begin(), layer.end());
    }
    return out;
}

void validate(const LsmGenome& genome)
{
    if (genome.layers.empty()) {
        throw std::invalid_argument("genome has no layers");
    }
    for (const auto& layer : genome.layers) {
        if (layer.empty()) {
            throw std::invalid_argument("genome contains an empty layer");
        }
        for (const auto& liquid : layer) {
            if (liquid.neuron_count < kMinLiquidNeurons) {
                throw std::invalid_argument(
                    "liquid has " + std::to_string(liquid.neuron_count) +
                    " neurons, below the floor of " + std::to_string(kMinLiquidNeurons));
            }
            for (int p = 0; p < kLiquidParamCount; ++p) {
                grid_tenths(liquid.param(p));
            }
        }
    }
}

LsmGenome genome_from_shape(const std::vector<int>& shape, int total_neurons,
                            const LiquidSpec& defaults)
{
    int group_count = 0;
    for (int liquids : shape) {
        if (liquids < 1) {
            throw std::invalid_argument("layer shape entries must be positive");
        }
        group_count += liquids;
    }
    if (group_count < 1) {
        throw std::invalid_argument("group count must be at least 1");
    }
    if (total_neurons < group_count * kMinLiquidNeurons) {
        throw std::invalid_argument(
            "total of " + std::to_string(total_neurons) + " neurons cannot hold " +
            std::to_string(group_count) + " liquids of at least " +
            std::to_string(kMinLiquidNeurons));
    }

    const int base = total_neurons / group_count;
    const int remainder = total_neurons % group_count;

    LsmGenome genome;
    int liquid_index = 0;
    for (int liquids : shape) {
        std::vector<LiquidSpec> layer;
        layer.reserve(liquids);
        for (int i = 0; i < liquids; ++i, ++liquid_index) {
            LiquidSpec spec = defaults;
            spec.neuron_count = base + (liquid_index < remainder ? 1 : 0);
            layer.push_back(spec);
        }
        genome.layers.push_back(std::move(layer));
    }
    validate(genome);
    return genome;
}

LsmGenome uniform_genome(int total_neurons, int group_count, const LiquidSpec& defaults)
{
    if (group_count < 1) {
        throw std::invalid_argument("group count must be at least 1");
    }
    return genome_from_shape({group_count}, total_neurons, defaults);
}

std::vector<std::vector<int>> enumerate_layerings(int group_count)
{
    if (group_count < 1 || group_count > 12) {
        throw std::invalid_argument("layering enumeration supports 1..12 liquids");
    }
    // A composition of n corresponds to a subset of the n-1 gaps between
    // consecutive liquids: a set bit closes the current layer.
    const int gaps = group_count - 1;
    std::vector<std::vector<int>> shapes;
    shapes.reserve(std::size_t{1} << gaps);
    for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << gaps); ++mask) {
        std::vector<int> shape;
        int run = 1;
        for (int gap = 0; gap < gaps; ++gap) {
            if (mask & (std::uint32_t{1} << gap)) {
                shape.push_back(run);
                run = 1;
            } else {
                ++run;
            }
        }
        shape.push_back(run);
        shapes.push_back(std::move(shape));
    }
    return shapes;
}

MutationResult mutate_architecture(const LsmGenome& parent, Rng& rng)
{
    if (parent.group_count() < 2) {
        return {parent, false};
    }

    // Pick the liquid to move, uniformly over all liquids.
    const int flat_choice = rng.index(parent.group_count());
    int source_layer = 0;
    int source_pos = flat_choice;
    while (source_pos >= static_cast<int>(parent.layers[source_layer].size())) {
        source_pos -= static_cast<int>(parent.layers[source_layer].size());
        ++source_layer;
    }

    const int layer_count = parent.layer_count();

    // Moving a singleton layer to a new trailing layer keeps the shape
    // signature when everything from the source layer onward is a singleton;
    // such a target is excluded because the move must change the shape.
    bool new_layer_changes_shape = parent.layers[source_layer].size() > 1;
    if (!new_layer_changes_shape) {
        for (int l = source_layer; l < layer_count; ++l) {
            if (parent.layers[l].size() > 1) {
                new_layer_changes_shape = true;
                break;
            }
        }
    }

    std::vector<int> targets;  // layer index, or layer_count for a new layer
    targets.reserve(layer_count + 1);
    for (int l = 0; l < layer_count; ++l) {
        if (l != source_layer) {
            targets.push_back(l);
        }
    }
    if (new_layer_changes_shape) {
        targets.push_back(layer_count);
    }

    const int target = targets[rng.index(static_cast<int>(targets.size()))];

    LsmGenome child = parent;
    const LiquidSpec moved = child.layers[source_layer][source_pos];
    child.layers[source_layer].erase(child.layers[source_layer].begin() + source_pos);
    if (target == layer_count) {
        child.layers.push_back({moved});
    } else {
        child.layers[target].push_back(moved);
    }
    child.layers.erase(
        std::remove_if(child.layers.begin(), child.layers.end(),
                       [](const std::vector<LiquidSpec>& layer) { return layer.empty(); }),
        child.layers.end());
    return {std::move(child), true};
}

MutationResult mutate_neuron_counts(const LsmGenome& parent, int max_disturb, Rng& rng)
{
    const int groups = parent.group_count();
    if (groups < 2) {
        return {parent, false};
    }
    if (max_disturb < 1 ||
        static_cast<long long>(max_disturb) * groups >= parent.total_neurons()) {
        throw std::invalid_argument("max_disturb must satisfy 0 < M < total/group");
    }

    const int donor = rng.index(groups);
    int moved = 1 + rng.index(max_disturb);
    int recipient = rng.index(groups - 1);
    if (recipient >= donor) {
        ++recipient;
    }

    LsmGenome child = parent;
    std::vector<LiquidSpec*> liquids;
    liquids.reserve(groups);
    for (auto& layer : child.layers) {
        for (auto& liquid : layer) {
            liquids.push_back(&liquid);
        }
    }

    moved = std::min(moved, liquids[donor]->neuron_count - kMinLiquidNeurons);
    if (moved > 0) {
        liquids[donor]->neuron_count -= moved;
        liquids[recipient]->neuron_count += moved;
    }
    return {std::move(child), true};
}

MutationResult mutate_parameters(const LsmGenome& parent, Rng& rng)
{
    const int groups = parent.group_count();
    const int liquid_choice = rng.index(groups);
    const int param_index = rng.index(kLiquidParamCount);
    const int delta = rng.bernoulli(0.5) ? 1 : -1;

    LsmGenome child = parent;
    int seen = 0;
    for (auto& layer : child.layers) {
        for (auto& liquid : layer) {
            if (seen++ == liquid_choice) {
                int tenths = grid_tenths(liquid.param(param_index)) + delta;
                tenths = std::clamp(tenths, 0, 9);
                liquid.set_param(param_index, tenths / 10.0);
            }
        }
    }
    return {std::move(child), true};
}

long long potential_connection_count(const LsmGenome& genome)
{
    long long total = 0;
    for (const auto& layer : genome.layers) {
        for (const auto& liquid : layer) {
            total += static_cast<long long>(liquid.neuron_count) * liquid.neuron_count;
        }
    }
    return total;
}

long long potential_connection_count_with_interlayer(const LsmGenome& genome)
{
    long long total = potential_connection_count(genome);
    std::vector<long long> layer_totals;
    layer_totals.reserve(genome.layers.size());
    for (const auto& layer : genome.layers) {
        long long n = 0;
        for (const auto& liquid : layer) {
            n += liquid.neuron_count;
        }
        layer_totals.push_back(n);
    }
    for (std::size_t i = 0; i < layer_totals.size(); ++i) {
        for (std::size_t j = i + 1; j < layer_totals.size(); ++j) {
            total += layer_totals[i] * layer_totals[j];
        }
    }
    return total;
}

double connection_reduction_percent(const LsmGenome& genome)
{
    const long long n = genome.total_neurons();
    const long long single = n * n;
    const long long multi = potential_connection_count(genome);
    return 100.0 * (1.0 - static_cast<double>(multi) / static_cast<double>(single));
}

LsmGenome scale_neuron_counts(const LsmGenome& genome, double keep_fraction)
{
    if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
        throw std::invalid_argument("keep_fraction must be in (0, 1]");
    }

    const auto flat = genome.flat();
    const long long target = std::llround(genome.total_neurons() * keep_fraction);

    // Largest-remainder apportionment: floor every quota, then hand the
    // leftover units to the largest fractional remainders (ties to the
    // earliest liquid).
    std::vector<int> counts(flat.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    long long floored = 0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double quota = flat[i].neuron_count * keep_fraction;
        counts[i] = static_cast<int>(std::floor(quota));
        floored += counts[i];
        remainders.emplace_back(quota - counts[i], i);
    }
    long long leftover = target - floored;
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; leftover > 0 && r < remainders.size(); ++r, --leftover) {
        ++counts[remainders[r].second];
    }

    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] < kMinLiquidNeurons) {
            throw std::invalid_argument(
                "keep_fraction " + std::to_string(keep_fraction) + " drops liquid " +
                std::to_string(i) + " to " + std::to_string(counts[i]) +
                " neurons, below the floor of " + std::to_string(kMinLiquidNeurons));
        }
    }

    LsmGenome scaled = genome;
    std::size_t index = 0;
    for (auto& layer : scaled.layers) {
        for (auto& liquid : layer) {
            liquid.neuron_count = counts[index++];
        }
    }
    return scaled;
}

std::string to_json_string(const LsmGenome& genome)
{
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : genome.layers) {
        nlohmann::json jl = nlohmann::json::array();
        for (const auto& liquid : layer) {
            jl.push_back({{"neurons", liquid.neuron_count},
                          {"exc_ratio", liquid.excitatory_ratio},
                          {"p_ee", liquid.p_ee},
                          {"p_ei", liquid.p_ei},
                          {"p_ie", liquid.p_ie},
                          {"p_ii", liquid.p_ii}});
        }
        layers.push_back(std::move(jl));
    }
    nlohmann::json doc{{"format", kGenomeFormat}, {"layers", std::move(layers)}};
    return doc.dump(2) + "\n";
}

LsmGenome genome_from_json_string(const std::string& text)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("genome JSON parse failure: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != kGenomeFormat) {
        throw DataError("not a recognized genome file (expected format " +
                        std::string(kGenomeFormat) + ")");
    }
    LsmGenome genome;
    try {
        for (const auto& jl : doc.at("layers")) {
            std::vector<LiquidSpec> layer;
            for (const auto& jliq : jl) {
                LiquidSpec spec;
                spec.neuron_count = jliq.at("neurons").get<int>();
                spec.excitatory_ratio = jliq.at("exc_ratio").get<double>();
                spec.p_ee = jliq.at("p_ee").get<double>();
                spec.p_ei = jliq.at("p_ei").get<double>();
                spec.p_ie = jliq.at("p_ie").get<double>();
                spec.p_ii = jliq.at("p_ii").get<double>();
                layer.push_back(spec);
            }
            genome.layers.push_back(std::move(layer));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("genome JSON field failure: ") + e.what());
    }
    validate(genome);
    return genome;
}

void save_genome(const LsmGenome& genome, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    out << to_json_string(genome);
}

LsmGenome load_genome(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open genome file " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return genome_from_json_string(buffer.str());
}

std::uint64_t genome_hash(const LsmGenome& genome)
{
    const std::string canonical = to_json_string(genome);
    return fnv1a(canonical.data(), canonical.size());
}

}  // namespace lsmnas
