#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "lsmnas/errors.hpp"
#include "lsmnas/netgen.hpp"

using namespace lsmnas;

namespace {

// Binomial 4-sigma window around p * trials.
bool within_4sigma(long long observed, double p, double trials)
{
    const double mean = p * trials;
    const double sigma = std::sqrt(trials * p * (1.0 - p));
    return std::abs(observed - mean) <= 4.0 * sigma;
}

LsmGenome single_liquid(int neurons, double p_ee = 0.4)
{
    LsmGenome genome;
    genome.layers = {{{neurons, 0.8, p_ee, 0.4, 0.5, 0.1}}};
    return genome;
}

}  // namespace

TEST_CASE("excitatory split uses the exact floor of the grid ratio")
{
    for (double ratio : {0.0, 0.1, 0.3, 0.7, 0.8, 0.9}) {
        LsmGenome genome;
        genome.layers = {{{100, ratio, 0.4, 0.4, 0.5, 0.1}}};
        const auto net = instantiate(genome, {}, {}, 4, 1);
        CHECK(net.populations[0].excitatory_count == static_cast<int>(ratio * 10) * 10);
        CHECK(net.populations[0].neuron_count() == 100);
    }
    // a count that does not divide evenly: floor(101 * 0.7) = 70
    LsmGenome genome;
    genome.layers = {{{101, 0.7, 0.4, 0.4, 0.5, 0.1}}};
    const auto net = instantiate(genome, {}, {}, 4, 1);
    CHECK(net.populations[0].excitatory_count == 70);
    CHECK(net.populations[0].inhibitory_count == 31);
}

TEST_CASE("instantiation is deterministic given the seed")
{
    const auto genome = uniform_genome(200, 2);
    const auto a = instantiate(genome, {}, {}, 16, 99);
    const auto b = instantiate(genome, {}, {}, 16, 99);
    CHECK(a.liquid_synapses == b.liquid_synapses);
    CHECK(a.input_synapses == b.input_synapses);

    const auto c = instantiate(genome, {}, {}, 16, 100);
    CHECK(a.liquid_synapses != c.liquid_synapses);
}

TEST_CASE("realized intra-liquid counts sit inside 4-sigma binomial bounds")
{
    const auto genome = single_liquid(1000, 0.4);
    const int n_e = 800, n_i = 200;
    int misses = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto net = instantiate(genome, {}, {}, 4, seed);
        const auto counts = realized_connection_count(net);
        if (!within_4sigma(counts[ConnectionClass::ee], 0.4,
                           static_cast<double>(n_e) * (n_e - 1))) {
            ++misses;
        }
        CHECK(within_4sigma(counts[ConnectionClass::ei], 0.4,
                            static_cast<double>(n_e) * n_i));
        CHECK(within_4sigma(counts[ConnectionClass::ie], 0.5,
                            static_cast<double>(n_i) * n_e));
        CHECK(within_4sigma(counts[ConnectionClass::ii], 0.1,
                            static_cast<double>(n_i) * (n_i - 1)));
        CHECK(counts.total() ==
              static_cast<long long>(net.input_synapses.size() + net.liquid_synapses.size()));
    }
    CHECK(misses == 0);
}

TEST_CASE("no self connections and no duplicate pairs")
{
    const auto net = instantiate(single_liquid(200), {}, {}, 8, 5);
    std::set<std::pair<int, int>> seen;
    for (const auto& s : net.liquid_synapses) {
        CHECK(s.pre != s.post);
        CHECK(seen.emplace(s.pre, s.post).second);
        CHECK(s.weight >= 0.0);
        // sign follows the presynaptic class
        CHECK((s.sign == SynapseSign::inhibitory) == !net.is_excitatory(s.pre));
    }
}

TEST_CASE("input feeds excitatory populations only under the default topology")
{
    const auto net = instantiate(single_liquid(300), {}, {}, 32, 3);
    const auto counts = realized_connection_count(net);
    CHECK(counts[ConnectionClass::input_to_i] == 0);
    CHECK(counts[ConnectionClass::input_to_e] > 0);
    CHECK(within_4sigma(counts[ConnectionClass::input_to_e], 0.1, 32.0 * 240));
    for (const auto& s : net.input_synapses) {
        CHECK(net.is_excitatory(s.post));
        CHECK(s.sign == SynapseSign::excitatory);
    }

    // enabling input->I produces inhibitory-population targets
    TopologyConfig topo;
    topo.p_input_to_i = 0.2;
    const auto net2 = instantiate(single_liquid(300), topo, {}, 32, 3);
    CHECK(realized_connection_count(net2)[ConnectionClass::input_to_i] > 0);
}

TEST_CASE("layers connect forward only")
{
    LsmGenome genome;
    genome.layers = {{{100, 0.8, 0.4, 0.4, 0.5, 0.1}, {80, 0.8, 0.4, 0.4, 0.5, 0.1}},
                     {{120, 0.8, 0.4, 0.4, 0.5, 0.1}}};
    const auto net = instantiate(genome, {}, {}, 16, 21);

    for (const auto& s : net.liquid_synapses) {
        const auto& pre = net.populations[net.population_of(s.pre)];
        const auto& post = net.populations[net.population_of(s.post)];
        if (pre.liquid_index != post.liquid_index) {
            CHECK(pre.layer_index < post.layer_index);
        }
    }
    const auto counts = realized_connection_count(net);
    CHECK(counts[ConnectionClass::inter_ee] > 0);
    CHECK(counts[ConnectionClass::inter_ie] > 0);
    CHECK(counts[ConnectionClass::inter_ei] == 0);  // default p is 0
    CHECK(counts[ConnectionClass::inter_ii] == 0);

    // parallel liquids in one layer never touch each other
    const auto parallel = instantiate(uniform_genome(200, 2), {}, {}, 16, 22);
    for (const auto& s : parallel.liquid_synapses) {
        CHECK(parallel.population_of(s.pre) == parallel.population_of(s.post));
    }
}

TEST_CASE("all-zero probabilities yield an empty synapse list")
{
    LsmGenome genome;
    genome.layers = {{{50, 0.8, 0.0, 0.0, 0.0, 0.0}}};
    TopologyConfig topo;
    topo.p_input_to_e = 0.0;
    const auto net = instantiate(genome, topo, {}, 8, 1);
    CHECK(net.input_synapses.empty());
    CHECK(net.liquid_synapses.empty());
    CHECK(realized_connection_count(net).total() == 0);
}

TEST_CASE("five equal liquids carry about a fifth of the single-liquid connections")
{
    // identical probabilities everywhere; expectation ratio is
    // 5 * 160 * 159 / (800 * 799) ~ 0.199
    const LiquidSpec defaults{0, 0.8, 0.4, 0.4, 0.5, 0.1};
    auto single = uniform_genome(1000, 1, defaults);
    auto multi = uniform_genome(1000, 5, defaults);
    TopologyConfig no_input;
    no_input.p_input_to_e = 0.0;

    double single_total = 0.0, multi_total = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        single_total += static_cast<double>(
            instantiate(single, no_input, {}, 1, seed).liquid_synapses.size());
        multi_total += static_cast<double>(
            instantiate(multi, no_input, {}, 1, seed).liquid_synapses.size());
    }
    CHECK(multi_total / single_total == doctest::Approx(0.2).epsilon(0.03));
}

TEST_CASE("every published genome fixture parses and instantiates")
{
    for (const char* name :
         {"mnist_parallel4", "nmnist_parallel3", "fsdd_parallel3", "nmnist_twolayer8",
          "fsdd_twolayer8"}) {
        const auto genome =
            load_genome(testutil::source_path(std::string("data/genomes/") + name + ".json"));
        CHECK(genome.total_neurons() == 1000);
        const auto net = instantiate(genome, {}, {}, 784, 1);
        CHECK(net.neuron_count == 1000);
        CHECK(realized_connection_count(net).total() ==
              static_cast<long long>(net.input_synapses.size() + net.liquid_synapses.size()));
    }
}

TEST_CASE("network snapshot round-trips")
{
    testutil::TempDir tmp;
    LsmGenome genome;
    genome.layers = {{{60, 0.8, 0.4, 0.4, 0.5, 0.1}}, {{40, 0.7, 0.3, 0.4, 0.5, 0.1}}};
    const auto net = instantiate(genome, {}, {}, 12, 77);
    save_network(net, tmp.file("net.bin"));
    const auto loaded = load_network(tmp.file("net.bin"));

    CHECK(loaded.seed == net.seed);
    CHECK(loaded.input_channels == net.input_channels);
    CHECK(loaded.neuron_count == net.neuron_count);
    CHECK(loaded.excitatory_count == net.excitatory_count);
    CHECK(loaded.populations == net.populations);
    CHECK(loaded.input_synapses == net.input_synapses);
    CHECK(loaded.liquid_synapses == net.liquid_synapses);

    // corrupt magic
    {
        std::ofstream out(tmp.file("bad.bin"), std::ios::binary);
        out << "garbage";
    }
    CHECK_THROWS_AS(load_network(tmp.file("bad.bin")), BadMagicError);
}
