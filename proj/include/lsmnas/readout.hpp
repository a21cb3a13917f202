#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsmnas/simulator.hpp"

namespace lsmnas {

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 20;
    int batch_size = 32;

    bool operator==(const TrainConfig&) const = default;
};

/// Single-layer softmax perceptron over liquid states.
struct PerceptronModel {
    int classes = 0;
    int dim = 0;
    std::vector<double> weights;  // classes x dim, row-major
    std::vector<double> bias;

    /// Argmax class for one state; ties resolve to the lowest class id.
    int predict(const LiquidState& state) const;
};

/// Softmax cross-entropy loss averaged over the given examples.
double batch_loss(const PerceptronModel& model, const std::vector<LiquidState>& states,
                  const std::vector<int>& labels, const std::vector<std::size_t>& indices);

/// Analytic gradient of batch_loss with respect to weights and bias,
/// accumulated into grad_w / grad_b (both zeroed first).
void batch_gradient(const PerceptronModel& model, const std::vector<LiquidState>& states,
                    const std::vector<int>& labels, const std::vector<std::size_t>& indices,
                    std::vector<double>& grad_w, std::vector<double>& grad_b);

/// Minibatch SGD with per-epoch shuffling driven by the seed. Deterministic
/// given (inputs, config, seed). Throws on dimension mismatch and aborts
/// with diagnostics when the loss turns non-finite.
PerceptronModel train_readout(const std::vector<LiquidState>& states,
                              const std::vector<int>& labels, int classes,
                              const TrainConfig& config, std::uint64_t seed);

/// Fraction of argmax-correct predictions. Rejects an empty test set.
double evaluate_accuracy(const PerceptronModel& model, const std::vector<LiquidState>& states,
                         const std::vector<int>& labels);

/// Versioned binary blob.
void save_model(const PerceptronModel& model, const std::string& path);
PerceptronModel load_model(const std::string& path);

}  // namespace lsmnas
