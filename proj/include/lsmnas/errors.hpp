#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lsmnas {

/// Bad run configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data (CLI exit code 3).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BadMagicError : DataError {
    using DataError::DataError;
};

struct TruncatedFileError : DataError {
    TruncatedFileError(const std::string& path, std::size_t byte_offset)
        : DataError(path + ": truncated at byte offset " + std::to_string(byte_offset)),
          offset(byte_offset)
    {
    }
    std::size_t offset;
};

struct CountMismatchError : DataError {
    using DataError::DataError;
};

/// Non-finite state during simulation (CLI exit code 4).
struct SimulationFault : std::runtime_error {
    SimulationFault(int neuron, long step_index)
        : std::runtime_error("non-finite membrane state at neuron " + std::to_string(neuron) +
                             ", step " + std::to_string(step_index)),
          neuron_id(neuron),
          step(step_index)
    {
    }
    SimulationFault(const std::string& message, int neuron, long step_index)
        : std::runtime_error(message), neuron_id(neuron), step(step_index)
    {
    }
    int neuron_id;
    long step;
};

}  // namespace lsmnas
