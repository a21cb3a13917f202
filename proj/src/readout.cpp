#include "lsmnas/readout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lsmnas/errors.hpp"
#include "lsmnas/rng.hpp"

namespace lsmnas {

namespace {

constexpr std::uint32_t kModelMagic = 0x4c534d52;  // "LSMR"
constexpr std::uint32_t kModelVersion = 1;

void check_dimensions(const PerceptronModel& model, const std::vector<LiquidState>& states,
                      const std::vector<int>& labels)
{
    if (states.size() != labels.size()) {
        throw std::invalid_argument("state/label counts differ: " +
                                    std::to_string(states.size()) + " vs " +
                                    std::to_string(labels.size()));
    }
    for (const auto& state : states) {
        if (static_cast<int>(state.size()) != model.dim) {
            throw std::invalid_argument("state dimension " + std::to_string(state.size()) +
                                        " does not match model dimension " +
                                        std::to_string(model.dim));
        }
    }
    for (int label : labels) {
        if (label < 0 || label >= model.classes) {
            throw std::invalid_argument("label " + std::to_string(label) +
                                        " outside the configured " +
                                        std::to_string(model.classes) + " classes");
        }
    }
}

void softmax_logits(const PerceptronModel& model, const LiquidState& state,
                    std::vector<double>& probs)
{
    probs.resize(model.classes);
    for (int k = 0; k < model.classes; ++k) {
        const double* row = model.weights.data() + static_cast<std::size_t>(k) * model.dim;
        double z = model.bias[k];
        for (int j = 0; j < model.dim; ++j) {
            z += row[j] * state[j];
        }
        probs[k] = z;
    }
    const double z_max = *std::max_element(probs.begin(), probs.end());
    double denom = 0.0;
    for (double& p : probs) {
        p = std::exp(p - z_max);
        denom += p;
    }
    for (double& p : probs) {
        p /= denom;
    }
}

}  // namespace

int PerceptronModel::predict(const LiquidState& state) const
{
    int best = 0;
    double best_z = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < classes; ++k) {
        const double* row = weights.data() + static_cast<std::size_t>(k) * dim;
        double z = bias[k];
        for (int j = 0; j < dim; ++j) {
            z += row[j] * state[j];
        }
        if (z > best_z) {
            best_z = z;
            best = k;
        }
    }
    return best;
}

double batch_loss(const PerceptronModel& model, const std::vector<LiquidState>& states,
                  const std::vector<int>& labels, const std::vector<std::size_t>& indices)
{
    std::vector<double> probs;
    double loss = 0.0;
    for (std::size_t i : indices) {
        softmax_logits(model, states[i], probs);
        loss += -std::log(std::max(probs[labels[i]], 1e-300));
    }
    return loss / static_cast<double>(indices.size());
}

void batch_gradient(const PerceptronModel& model, const std::vector<LiquidState>& states,
                    const std::vector<int>& labels, const std::vector<std::size_t>& indices,
                    std::vector<double>& grad_w, std::vector<double>& grad_b)
{
    grad_w.assign(model.weights.size(), 0.0);
    grad_b.assign(model.bias.size(), 0.0);
    std::vector<double> probs;
    for (std::size_t i : indices) {
        softmax_logits(model, states[i], probs);
        for (int k = 0; k < model.classes; ++k) {
            const double delta = probs[k] - (k == labels[i] ? 1.0 : 0.0);
            grad_b[k] += delta;
            double* row = grad_w.data() + static_cast<std::size_t>(k) * model.dim;
            const auto& x = states[i];
            for (int j = 0; j < model.dim; ++j) {
                row[j] += delta * x[j];
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (double& g : grad_w) {
        g *= inv;
    }
    for (double& g : grad_b) {
        g *= inv;
    }
}

PerceptronModel train_readout(const std::vector<LiquidState>& states,
                              const std::vector<int>& labels, int classes,
                              const TrainConfig& config, std::uint64_t seed)
{
    if (states.empty()) {
        throw std::invalid_argument("cannot train on an empty state set");
    }
    if (classes < 2) {
        throw std::invalid_argument("need at least two classes");
    }
    if (config.learning_rate <= 0.0 || config.epochs < 1 || config.batch_size < 1) {
        throw std::invalid_argument("bad training hyperparameters");
    }

    PerceptronModel model;
    model.classes = classes;
    model.dim = static_cast<int>(states[0].size());
    model.weights.assign(static_cast<std::size_t>(classes) * model.dim, 0.0);
    model.bias.assign(classes, 0.0);
    check_dimensions(model, states, labels);

    Rng rng(seed);
    std::vector<std::size_t> order(states.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> batch;
    std::vector<double> grad_w, grad_b;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates with the project generator keeps runs reproducible.
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i)]);
        }
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            batch.assign(order.begin() + start, order.begin() + end);
            batch_gradient(model, states, labels, batch, grad_w, grad_b);
            for (std::size_t w = 0; w < model.weights.size(); ++w) {
                model.weights[w] -= config.learning_rate * grad_w[w];
            }
            for (int k = 0; k < classes; ++k) {
                model.bias[k] -= config.learning_rate * grad_b[k];
            }
        }

        double probe = 0.0;
        for (double w : model.weights) {
            probe += w;
        }
        if (!std::isfinite(probe)) {
            throw std::runtime_error("readout training diverged: non-finite weights after epoch " +
                                     std::to_string(epoch) + " (lr=" +
                                     std::to_string(config.learning_rate) + ")");
        }
    }
    return model;
}

double evaluate_accuracy(const PerceptronModel& model, const std::vector<LiquidState>& states,
                         const std::vector<int>& labels)
{
    if (states.empty()) {
        throw std::invalid_argument("cannot evaluate on an empty test set");
    }
    check_dimensions(model, states, labels);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (model.predict(states[i]) == labels[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(states.size());
}

void save_model(const PerceptronModel& model, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    auto write = [&out](const auto& value) {
        out.write(reinterpret_cast<const char*>(&value), sizeof(value));
    };
    write(kModelMagic);
    write(kModelVersion);
    write(static_cast<std::int32_t>(model.classes));
    write(static_cast<std::int32_t>(model.dim));
    out.write(reinterpret_cast<const char*>(model.weights.data()),
              static_cast<std::streamsize>(model.weights.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(model.bias.data()),
              static_cast<std::streamsize>(model.bias.size() * sizeof(double)));
    if (!out) {
        throw DataError("write failure on " + path);
    }
}

PerceptronModel load_model(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open model file " + path);
    }
    auto read = [&in, &path](auto& value, std::size_t offset) {
        in.read(reinterpret_cast<char*>(&value), sizeof(value));
        if (in.gcount() != sizeof(value)) {
            throw TruncatedFileError(path, offset);
        }
    };
    std::uint32_t magic = 0, version = 0;
    std::int32_t classes = 0, dim = 0;
    read(magic, 0);
    if (magic != kModelMagic) {
        throw BadMagicError(path + ": not a readout model file");
    }
    read(version, 4);
    if (version != kModelVersion) {
        throw DataError(path + ": unsupported model version " + std::to_string(version));
    }
    read(classes, 8);
    read(dim, 12);

    PerceptronModel model;
    model.classes = classes;
    model.dim = dim;
    model.weights.resize(static_cast<std::size_t>(classes) * dim);
    model.bias.resize(classes);
    in.read(reinterpret_cast<char*>(model.weights.data()),
            static_cast<std::streamsize>(model.weights.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(model.bias.data()),
            static_cast<std::streamsize>(model.bias.size() * sizeof(double)));
    if (!in) {
        throw TruncatedFileError(path, 16);
    }
    return model;
}

}  // namespace lsmnas
