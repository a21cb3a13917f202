#include "lsmnas/pipeline.hpp"

#include <stdexcept>

namespace lsmnas {

namespace {

// Substream tags under the per-genome seed.
constexpr std::uint64_t kNetworkStream = 1;
constexpr std::uint64_t kSgdStream = 2;

}  // namespace

PipelineObjective::PipelineObjective(const SpikeTrainSet& train, const SpikeTrainSet& test,
                                     int classes, PipelineStages stages,
                                     std::uint64_t master_seed, unsigned threads)
    : train_(&train),
      test_(&test),
      classes_(classes),
      stages_(std::move(stages)),
      master_seed_(master_seed),
      threads_(threads)
{
    if (train.size() == 0 || test.size() == 0) {
        throw std::invalid_argument("objective needs non-empty train and test sets");
    }
    if (train.channel_count != test.channel_count) {
        throw std::invalid_argument("train and test sets disagree on channel count");
    }
    validate(stages_.lif);
    validate(stages_.sim);
}

std::uint64_t PipelineObjective::seed_for(const LsmGenome& genome) const
{
    return derive_seed(master_seed_, genome_hash(genome));
}

NetworkInstance PipelineObjective::instantiate_for(const LsmGenome& genome) const
{
    return instantiate(genome, stages_.topology, stages_.weights, train_->channel_count,
                       derive_seed(seed_for(genome), kNetworkStream));
}

double PipelineObjective::evaluate(const LsmGenome& genome) const
{
    const NetworkInstance net = instantiate_for(genome);
    const auto train_states = run_batch(net, *train_, stages_.lif, stages_.sim, threads_);
    const PerceptronModel model =
        train_readout(train_states, train_->labels, classes_, stages_.readout,
                      derive_seed(seed_for(genome), kSgdStream));
    const auto test_states = run_batch(net, *test_, stages_.lif, stages_.sim, threads_);
    return evaluate_accuracy(model, test_states, test_->labels);
}

PipelineObjective::Detail PipelineObjective::evaluate_detailed(const LsmGenome& genome) const
{
    const NetworkInstance net = instantiate_for(genome);
    const auto train_states = run_batch(net, *train_, stages_.lif, stages_.sim, threads_);
    Detail detail;
    detail.model = train_readout(train_states, train_->labels, classes_, stages_.readout,
                                 derive_seed(seed_for(genome), kSgdStream));
    const auto test_states = run_batch(net, *test_, stages_.lif, stages_.sim, threads_);
    detail.accuracy = evaluate_accuracy(detail.model, test_states, test_->labels);
    detail.connections = realized_connection_count(net);
    detail.neuron_count = net.neuron_count;
    return detail;
}

}  // namespace lsmnas
