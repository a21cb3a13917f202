#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lsmnas/encoding.hpp"
#include "lsmnas/netgen.hpp"

namespace lsmnas {

/// LIF constants for one neuron class. Conductances are dimensionless and
/// enter the membrane equation scaled by 1/tau_m:
///   tau_m dV/dt = (E_rest - V) + g_e (E_exc - V) + g_i (E_inh - V)
/// with dg/dt = -g/tau_g between presynaptic spikes.
struct NeuronClassParams {
    double tau_m_ms = 100.0;
    double rest_mv = -65.0;
    double reset_mv = -65.0;
    double threshold_mv = -52.0;
    double refractory_ms = 5.0;
    double tau_ge_ms = 1.0;
    double tau_gi_ms = 2.0;
    double e_exc_mv = 0.0;
    double e_inh_mv = -100.0;

    bool operator==(const NeuronClassParams&) const = default;
};

struct LifParams {
    NeuronClassParams exc{100.0, -65.0, -65.0, -52.0, 5.0, 1.0, 2.0, 0.0, -100.0};
    NeuronClassParams inh{10.0, -60.0, -45.0, -40.0, 2.0, 1.0, 2.0, 0.0, -100.0};

    bool operator==(const LifParams&) const = default;
};

void validate(const LifParams& params);

struct SimConfig {
    double dt_ms = 0.5;
    /// Stimulus window per example; must be a positive multiple of dt.
    double duration_ms = 350.0;
    /// Extra input-free steps appended after the stimulus (state is
    /// hard-reset between examples, so the default is none).
    double rest_ms = 0.0;

    bool operator==(const SimConfig&) const = default;
};

void validate(const SimConfig& config);
long steps_for(const SimConfig& config);

/// Normalized spike counts of every excitatory liquid neuron, ordered by
/// (layer, liquid, neuron id). Entries lie in [0, 1].
using LiquidState = std::vector<double>;

/// (neuron id, spike time ms) events, for the debug raster dump.
using SpikeRaster = std::vector<std::pair<int, double>>;

/// Extremes observed while an example ran; test instrumentation.
struct RunStats {
    double v_min = 0.0;
    double v_max = 0.0;
    double g_min = 0.0;
    long total_spikes = 0;
};

/// Clock-driven engine bound to one immutable network. Each instance holds
/// per-example scratch state, so use one instance per thread.
class Simulator {
public:
    Simulator(const NetworkInstance& net, const LifParams& lif, const SimConfig& sim);

    /// Simulates one example from a fully reset state and returns the
    /// liquid state. Raster, when given, receives every liquid spike;
    /// stats, when given, collects post-update extremes.
    LiquidState run(const SpikeTrain& input, SpikeRaster* raster = nullptr,
                    RunStats* stats = nullptr);

private:
    struct Edge {
        std::int32_t target;
        double weight;
        bool inhibitory;
    };

    void reset();

    const NetworkInstance& net_;
    SimConfig sim_;
    long steps_ = 0;

    // per-neuron constants
    std::vector<double> rest_, reset_mv_, threshold_, inv_tau_m_;
    std::vector<double> decay_ge_, decay_gi_, e_exc_, e_inh_;
    std::vector<long> ref_steps_;

    // adjacency in CSR form
    std::vector<std::size_t> input_offsets_;
    std::vector<Edge> input_edges_;
    std::vector<std::size_t> liquid_offsets_;
    std::vector<Edge> liquid_edges_;

    // per-example state
    std::vector<double> v_, ge_, gi_;
    std::vector<long> refractory_until_;
    std::vector<int> spike_counts_;
    std::vector<int> fired_, fired_next_;
};

/// One-shot convenience wrapper around Simulator.
LiquidState run_example(const NetworkInstance& net, const SpikeTrain& input,
                        const LifParams& lif, const SimConfig& sim,
                        SpikeRaster* raster = nullptr);

/// Runs every example of the set; element i equals run_example on example i
/// regardless of the parallelism degree. threads == 0 picks the hardware
/// concurrency.
std::vector<LiquidState> run_batch(const NetworkInstance& net, const SpikeTrainSet& examples,
                                   const LifParams& lif, const SimConfig& sim,
                                   unsigned threads = 0);

}  // namespace lsmnas
