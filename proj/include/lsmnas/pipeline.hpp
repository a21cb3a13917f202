#pragma once

#include <cstdint>

#include "lsmnas/netgen.hpp"
#include "lsmnas/readout.hpp"
#include "lsmnas/search.hpp"
#include "lsmnas/simulator.hpp"

namespace lsmnas {

/// Per-candidate evaluation stages shared by every genome.
struct PipelineStages {
    TopologyConfig topology{};
    WeightInitConfig weights{};
    LifParams lif{};
    SimConfig sim{};
    TrainConfig readout{};

    bool operator==(const PipelineStages&) const = default;
};

/// The search objective: realize the genome, drive it with the encoded
/// train/test sets, fit the readout on the train states and report test
/// accuracy. Every stochastic stage takes a seed derived from the master
/// seed and the genome hash, so the accuracy is a pure function of the
/// genome.
class PipelineObjective : public Objective {
public:
    PipelineObjective(const SpikeTrainSet& train, const SpikeTrainSet& test, int classes,
                      PipelineStages stages, std::uint64_t master_seed, unsigned threads = 0);

    double evaluate(const LsmGenome& genome) const override;
    std::uint64_t seed_for(const LsmGenome& genome) const override;

    /// The exact network the objective would evaluate this genome with.
    NetworkInstance instantiate_for(const LsmGenome& genome) const;

    /// Evaluate and keep the fitted readout.
    struct Detail {
        double accuracy = 0.0;
        PerceptronModel model;
        ConnectionCounts connections;
        int neuron_count = 0;
    };
    Detail evaluate_detailed(const LsmGenome& genome) const;

    const PipelineStages& stages() const { return stages_; }
    const SpikeTrainSet& test_set() const { return *test_; }
    int classes() const { return classes_; }

private:
    const SpikeTrainSet* train_;
    const SpikeTrainSet* test_;
    int classes_;
    PipelineStages stages_;
    std::uint64_t master_seed_;
    unsigned threads_;
};

}  // namespace lsmnas
