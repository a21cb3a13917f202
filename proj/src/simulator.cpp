#include "lsmnas/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "lsmnas/errors.hpp"

namespace lsmnas {

namespace {

void validate_class(const NeuronClassParams& p, const char* name)
{
    if (p.tau_m_ms <= 0.0 || p.tau_ge_ms <= 0.0 || p.tau_gi_ms <= 0.0) {
        throw std::invalid_argument(std::string(name) + ": time constants must be positive");
    }
    if (p.threshold_mv <= p.rest_mv) {
        throw std::invalid_argument(std::string(name) +
                                    ": threshold must exceed the resting potential");
    }
    if (p.refractory_ms < 0.0) {
        throw std::invalid_argument(std::string(name) + ": refractory must be non-negative");
    }
}

}  // namespace

void validate(const LifParams& params)
{
    validate_class(params.exc, "excitatory LIF parameters");
    validate_class(params.inh, "inhibitory LIF parameters");
}

void validate(const SimConfig& config)
{
    if (config.dt_ms <= 0.0) {
        throw std::invalid_argument("dt must be positive");
    }
    const double steps = config.duration_ms / config.dt_ms;
    if (config.duration_ms <= 0.0 || std::abs(steps - std::round(steps)) > 1e-9) {
        throw std::invalid_argument("duration must be a positive multiple of dt");
    }
    if (config.rest_ms < 0.0) {
        throw std::invalid_argument("rest interval must be non-negative");
    }
}

long steps_for(const SimConfig& config)
{
    return std::lround((config.duration_ms + config.rest_ms) / config.dt_ms);
}

Simulator::Simulator(const NetworkInstance& net, const LifParams& lif, const SimConfig& sim)
    : net_(net), sim_(sim)
{
    validate(lif);
    validate(sim);
    steps_ = steps_for(sim);

    const int n = net.neuron_count;
    rest_.resize(n);
    reset_mv_.resize(n);
    threshold_.resize(n);
    inv_tau_m_.resize(n);
    decay_ge_.resize(n);
    decay_gi_.resize(n);
    e_exc_.resize(n);
    e_inh_.resize(n);
    ref_steps_.resize(n);
    for (int id = 0; id < n; ++id) {
        const NeuronClassParams& p = net.is_excitatory(id) ? lif.exc : lif.inh;
        rest_[id] = p.rest_mv;
        reset_mv_[id] = p.reset_mv;
        threshold_[id] = p.threshold_mv;
        inv_tau_m_[id] = 1.0 / p.tau_m_ms;
        decay_ge_[id] = std::exp(-sim.dt_ms / p.tau_ge_ms);
        decay_gi_[id] = std::exp(-sim.dt_ms / p.tau_gi_ms);
        e_exc_[id] = p.e_exc_mv;
        e_inh_[id] = p.e_inh_mv;
        ref_steps_[id] = std::lround(p.refractory_ms / sim.dt_ms);
    }

    auto build_csr = [](const std::vector<Synapse>& synapses, int sources,
                        std::vector<std::size_t>& offsets, std::vector<Edge>& edges) {
        offsets.assign(sources + 1, 0);
        for (const auto& s : synapses) {
            ++offsets[s.pre + 1];
        }
        for (int i = 0; i < sources; ++i) {
            offsets[i + 1] += offsets[i];
        }
        edges.resize(synapses.size());
        std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
        for (const auto& s : synapses) {
            edges[cursor[s.pre]++] = {s.post, s.weight, s.sign == SynapseSign::inhibitory};
        }
    };
    build_csr(net.input_synapses, net.input_channels, input_offsets_, input_edges_);
    build_csr(net.liquid_synapses, net.neuron_count, liquid_offsets_, liquid_edges_);

    v_.resize(n);
    ge_.resize(n);
    gi_.resize(n);
    refractory_until_.resize(n);
    spike_counts_.resize(n);
    reset();
}

void Simulator::reset()
{
    for (int id = 0; id < net_.neuron_count; ++id) {
        v_[id] = rest_[id];
    }
    std::fill(ge_.begin(), ge_.end(), 0.0);
    std::fill(gi_.begin(), gi_.end(), 0.0);
    std::fill(refractory_until_.begin(), refractory_until_.end(), -1L);
    std::fill(spike_counts_.begin(), spike_counts_.end(), 0);
    fired_.clear();
    fired_next_.clear();
}

LiquidState Simulator::run(const SpikeTrain& input, SpikeRaster* raster, RunStats* stats)
{
    if (static_cast<int>(input.channels.size()) != net_.input_channels) {
        throw std::invalid_argument(
            "input has " + std::to_string(input.channels.size()) + " channels, network expects " +
            std::to_string(net_.input_channels));
    }
    reset();
    if (stats && net_.neuron_count > 0) {
        stats->v_min = stats->v_max = v_[0];
        stats->g_min = 0.0;
        stats->total_spikes = 0;
    }

    const double dt = sim_.dt_ms;
    std::vector<std::size_t> cursor(input.channels.size(), 0);

    for (long step = 0; step < steps_; ++step) {
        // Deliver input spikes falling inside this step's window, then the
        // liquid spikes emitted last step (one-step synaptic delay).
        const double window_end = (step + 1) * dt;
        for (std::size_t c = 0; c < input.channels.size(); ++c) {
            const auto& times = input.channels[c];
            while (cursor[c] < times.size() && times[cursor[c]] < window_end) {
                for (std::size_t e = input_offsets_[c]; e < input_offsets_[c + 1]; ++e) {
                    const Edge& edge = input_edges_[e];
                    (edge.inhibitory ? gi_ : ge_)[edge.target] += edge.weight;
                }
                ++cursor[c];
            }
        }
        for (int pre : fired_) {
            for (std::size_t e = liquid_offsets_[pre]; e < liquid_offsets_[pre + 1]; ++e) {
                const Edge& edge = liquid_edges_[e];
                (edge.inhibitory ? gi_ : ge_)[edge.target] += edge.weight;
            }
        }
        fired_next_.clear();

        for (int id = 0; id < net_.neuron_count; ++id) {
            if (step <= refractory_until_[id]) {
                continue;  // membrane clamped at reset; conductances still evolve
            }
            const double ge = ge_[id];
            const double gi = gi_[id];
            const double a = (1.0 + ge + gi) * inv_tau_m_[id];
            const double v_inf = (rest_[id] + ge * e_exc_[id] + gi * e_inh_[id]) / (1.0 + ge + gi);
            double v = v_inf + (v_[id] - v_inf) * std::exp(-a * dt);
            if (!std::isfinite(v)) {
                throw SimulationFault(id, step);
            }
            if (v >= threshold_[id]) {
                v = reset_mv_[id];
                refractory_until_[id] = step + ref_steps_[id];
                ++spike_counts_[id];
                fired_next_.push_back(id);
                if (raster) {
                    raster->emplace_back(id, (step + 1) * dt);
                }
            }
            v_[id] = v;
        }

        for (int id = 0; id < net_.neuron_count; ++id) {
            ge_[id] *= decay_ge_[id];
            gi_[id] *= decay_gi_[id];
        }
        if (stats) {
            for (int id = 0; id < net_.neuron_count; ++id) {
                stats->v_min = std::min(stats->v_min, v_[id]);
                stats->v_max = std::max(stats->v_max, v_[id]);
                stats->g_min = std::min({stats->g_min, ge_[id], gi_[id]});
            }
        }
        std::swap(fired_, fired_next_);
    }
    if (stats) {
        for (int count : spike_counts_) {
            stats->total_spikes += count;
        }
    }

    // Liquid state: per-example max-normalized excitatory spike counts.
    LiquidState state(net_.excitatory_count, 0.0);
    int max_count = 0;
    std::size_t out = 0;
    for (const auto& pop : net_.populations) {
        for (int id = pop.first_neuron; id < pop.first_neuron + pop.excitatory_count; ++id) {
            max_count = std::max(max_count, spike_counts_[id]);
        }
    }
    if (max_count > 0) {
        for (const auto& pop : net_.populations) {
            for (int id = pop.first_neuron; id < pop.first_neuron + pop.excitatory_count; ++id) {
                state[out++] = static_cast<double>(spike_counts_[id]) / max_count;
            }
        }
    }
    return state;
}

LiquidState run_example(const NetworkInstance& net, const SpikeTrain& input,
                        const LifParams& lif, const SimConfig& sim, SpikeRaster* raster)
{
    Simulator simulator(net, lif, sim);
    return simulator.run(input, raster);
}

std::vector<LiquidState> run_batch(const NetworkInstance& net, const SpikeTrainSet& examples,
                                   const LifParams& lif, const SimConfig& sim, unsigned threads)
{
    const std::size_t n = examples.size();
    std::vector<LiquidState> states(n);
    if (n == 0) {
        return states;
    }

    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min<unsigned>(threads, static_cast<unsigned>(n));

    std::vector<std::exception_ptr> faults(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        Simulator simulator(net, lif, sim);
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                states[i] = simulator.run(examples.examples[i]);
            } catch (const SimulationFault& fault) {
                faults[i] = std::make_exception_ptr(SimulationFault(
                    "example " + std::to_string(i) + ": " + fault.what(), fault.neuron_id,
                    fault.step));
            } catch (...) {
                faults[i] = std::current_exception();
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    for (const auto& fault : faults) {
        if (fault) {
            std::rethrow_exception(fault);  // lowest example index wins
        }
    }
    return states;
}

}  // namespace lsmnas
