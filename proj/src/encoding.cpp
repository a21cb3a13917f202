#include "lsmnas/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "lsmnas/errors.hpp"
#include "lsmnas/rng.hpp"

namespace lsmnas {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& file, const std::string& path, std::size_t& offset)
{
    unsigned char bytes[4];
    file.read(reinterpret_cast<char*>(bytes), 4);
    if (file.gcount() != 4) {
        throw TruncatedFileError(path, offset + static_cast<std::size_t>(file.gcount()));
    }
    offset += 4;
    return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
           (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
}

double parse_cell(const std::string& cell, const std::string& path, std::size_t line_no)
{
    std::size_t parsed = 0;
    double value = 0.0;
    try {
        value = std::stod(cell, &parsed);
    } catch (const std::exception&) {
        throw DataError(path + ": non-numeric cell '" + cell + "' on line " +
                        std::to_string(line_no));
    }
    while (parsed < cell.size() && std::isspace(static_cast<unsigned char>(cell[parsed]))) {
        ++parsed;
    }
    if (parsed != cell.size()) {
        throw DataError(path + ": non-numeric cell '" + cell + "' on line " +
                        std::to_string(line_no));
    }
    return value;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream stream(line);
    while (std::getline(stream, cell, ',')) {
        cells.push_back(cell);
    }
    return cells;
}

}  // namespace

FeatureDataset load_idx(const std::string& images_path, const std::string& labels_path)
{
    std::ifstream images(images_path, std::ios::binary);
    if (!images) {
        throw DataError("cannot open image file " + images_path);
    }
    std::size_t img_offset = 0;
    const std::uint32_t img_magic = read_be32(images, images_path, img_offset);
    if (img_magic != kImagesMagic) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "0x%08x", img_magic);
        throw BadMagicError(images_path + ": bad image magic " + buf);
    }
    const std::uint32_t image_count = read_be32(images, images_path, img_offset);
    const std::uint32_t rows = read_be32(images, images_path, img_offset);
    const std::uint32_t cols = read_be32(images, images_path, img_offset);
    const std::size_t pixels = static_cast<std::size_t>(rows) * cols;

    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) {
        throw DataError("cannot open label file " + labels_path);
    }
    std::size_t lbl_offset = 0;
    const std::uint32_t lbl_magic = read_be32(labels, labels_path, lbl_offset);
    if (lbl_magic != kLabelsMagic) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "0x%08x", lbl_magic);
        throw BadMagicError(labels_path + ": bad label magic " + buf);
    }
    const std::uint32_t label_count = read_be32(labels, labels_path, lbl_offset);
    if (label_count != image_count) {
        throw CountMismatchError(images_path + " holds " + std::to_string(image_count) +
                                 " images but " + labels_path + " holds " +
                                 std::to_string(label_count) + " labels");
    }

    FeatureDataset dataset;
    dataset.channel_count = static_cast<int>(pixels);
    dataset.max_intensity = 255.0;
    dataset.examples.reserve(image_count);

    std::vector<unsigned char> pixel_buf(pixels);
    std::vector<unsigned char> label_buf(label_count);
    labels.read(reinterpret_cast<char*>(label_buf.data()), label_count);
    if (labels.gcount() != static_cast<std::streamsize>(label_count)) {
        throw TruncatedFileError(labels_path,
                                 lbl_offset + static_cast<std::size_t>(labels.gcount()));
    }

    for (std::uint32_t i = 0; i < image_count; ++i) {
        images.read(reinterpret_cast<char*>(pixel_buf.data()), pixel_buf.size());
        if (images.gcount() != static_cast<std::streamsize>(pixel_buf.size())) {
            throw TruncatedFileError(images_path,
                                     img_offset + static_cast<std::size_t>(images.gcount()));
        }
        img_offset += pixel_buf.size();
        FeatureExample example;
        example.channels.assign(pixel_buf.begin(), pixel_buf.end());
        example.label = label_buf[i];
        dataset.examples.push_back(std::move(example));
    }
    return dataset;
}

FeatureDataset load_feature_csv(const std::string& path, double max_intensity)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open feature file " + path);
    }

    std::vector<FeatureExample> raw;
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() < 2) {
            throw DataError(path + ": line " + std::to_string(line_no) +
                            " needs a label and at least one feature");
        }
        if (width == 0) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw DataError(path + ": ragged row on line " + std::to_string(line_no) +
                            " (expected " + std::to_string(width - 1) + " features, got " +
                            std::to_string(cells.size() - 1) + ")");
        }
        FeatureExample example;
        const double label = parse_cell(cells[0], path, line_no);
        example.label = static_cast<int>(std::lround(label));
        example.channels.reserve(width - 1);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            example.channels.push_back(parse_cell(cells[c], path, line_no));
        }
        raw.push_back(std::move(example));
    }
    if (raw.empty()) {
        throw DataError(path + ": no feature rows");
    }

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& example : raw) {
        for (double v : example.channels) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }

    FeatureDataset dataset;
    dataset.channel_count = static_cast<int>(width - 1);
    dataset.max_intensity = max_intensity;
    dataset.map.offset = lo;
    dataset.map.scale = hi > lo ? max_intensity / (hi - lo) : 0.0;
    dataset.examples = std::move(raw);
    for (auto& example : dataset.examples) {
        for (double& v : example.channels) {
            v = (v - dataset.map.offset) * dataset.map.scale;
        }
    }
    return dataset;
}

FeatureDataset truncate_dataset(const FeatureDataset& dataset, std::size_t count)
{
    if (count == 0 || count >= dataset.size()) {
        return dataset;
    }
    FeatureDataset out = dataset;
    out.examples.resize(count);
    return out;
}

std::pair<FeatureDataset, FeatureDataset> split_dataset(const FeatureDataset& dataset,
                                                        double train_fraction)
{
    if (!(train_fraction > 0.0) || train_fraction >= 1.0) {
        throw std::invalid_argument("train_fraction must be in (0, 1)");
    }
    const auto cut = static_cast<std::size_t>(
        std::llround(dataset.size() * train_fraction));
    FeatureDataset train = dataset;
    FeatureDataset test = dataset;
    train.examples.assign(dataset.examples.begin(), dataset.examples.begin() + cut);
    test.examples.assign(dataset.examples.begin() + cut, dataset.examples.end());
    return {std::move(train), std::move(test)};
}

std::size_t SpikeTrain::spike_count() const
{
    std::size_t count = 0;
    for (const auto& channel : channels) {
        count += channel.size();
    }
    return count;
}

SpikeTrain poisson_encode(const FeatureExample& example, double max_intensity,
                          double max_rate_hz, double duration_ms, double dt_ms,
                          std::uint64_t seed)
{
    if (max_intensity <= 0.0 || max_rate_hz <= 0.0 || duration_ms <= 0.0 || dt_ms <= 0.0) {
        throw std::invalid_argument("poisson_encode needs positive intensity/rate/timing");
    }
    const auto steps = static_cast<long>(std::llround(duration_ms / dt_ms));

    SpikeTrain train;
    train.channels.resize(example.channels.size());
    for (std::size_t c = 0; c < example.channels.size(); ++c) {
        const double intensity = example.channels[c];
        if (intensity < 0.0) {
            throw std::invalid_argument("negative intensity " + std::to_string(intensity) +
                                        " on channel " + std::to_string(c));
        }
        if (intensity == 0.0) {
            continue;
        }
        const double rate_hz = intensity / max_intensity * max_rate_hz;
        const double p = rate_hz * dt_ms / 1000.0;
        Rng channel_rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        auto& spikes = train.channels[c];
        for (long s = 0; s < steps; ++s) {
            if (channel_rng.bernoulli(p)) {
                spikes.push_back(s * dt_ms);
            }
        }
    }
    return train;
}

SpikeTrainSet encode_dataset(const FeatureDataset& dataset, double max_rate_hz,
                             double duration_ms, double dt_ms, std::uint64_t seed)
{
    SpikeTrainSet set;
    set.channel_count = dataset.channel_count;
    set.duration_ms = duration_ms;
    set.examples.reserve(dataset.size());
    set.labels.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        set.examples.push_back(poisson_encode(dataset.examples[i], dataset.max_intensity,
                                              max_rate_hz, duration_ms, dt_ms,
                                              derive_seed(seed, i)));
        set.labels.push_back(dataset.examples[i].label);
    }
    return set;
}

SpikeTrainSet load_spike_csv(const std::string& spikes_path, const std::string& labels_path,
                             int channel_count, double duration_ms)
{
    std::ifstream labels_in(labels_path);
    if (!labels_in) {
        throw DataError("cannot open spike label file " + labels_path);
    }
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(labels_in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (line_no == 1 && !cells.empty() && cells[0] == "example") {
            continue;  // header
        }
        if (cells.size() != 2) {
            throw DataError(labels_path + ": expected `example,label` on line " +
                            std::to_string(line_no));
        }
        const auto example = static_cast<std::size_t>(
            std::lround(parse_cell(cells[0], labels_path, line_no)));
        if (example != labels.size()) {
            throw DataError(labels_path + ": example ids must be contiguous from 0; got " +
                            std::to_string(example) + " on line " + std::to_string(line_no));
        }
        labels.push_back(static_cast<int>(std::lround(parse_cell(cells[1], labels_path, line_no))));
    }
    if (labels.empty()) {
        throw DataError(labels_path + ": no labels");
    }

    std::ifstream spikes_in(spikes_path);
    if (!spikes_in) {
        throw DataError("cannot open spike file " + spikes_path);
    }

    SpikeTrainSet set;
    set.labels = std::move(labels);
    set.examples.resize(set.labels.size());
    int max_channel = -1;
    double max_time = 0.0;
    line_no = 0;
    while (std::getline(spikes_in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (line_no == 1 && !cells.empty() && cells[0] == "example") {
            continue;  // header
        }
        if (cells.size() != 3) {
            throw DataError(spikes_path + ": expected `example,channel,time_ms` on line " +
                            std::to_string(line_no));
        }
        const auto example = static_cast<std::size_t>(
            std::lround(parse_cell(cells[0], spikes_path, line_no)));
        const int channel = static_cast<int>(
            std::lround(parse_cell(cells[1], spikes_path, line_no)));
        const double time_ms = parse_cell(cells[2], spikes_path, line_no);
        if (example >= set.examples.size()) {
            throw CountMismatchError(spikes_path + ": spike for example " +
                                     std::to_string(example) + " but only " +
                                     std::to_string(set.examples.size()) + " labels");
        }
        if (channel < 0 || time_ms < 0.0) {
            throw DataError(spikes_path + ": negative channel or time on line " +
                            std::to_string(line_no));
        }
        if (channel_count > 0 && channel >= channel_count) {
            throw DataError(spikes_path + ": channel " + std::to_string(channel) +
                            " outside the configured " + std::to_string(channel_count) +
                            " channels (line " + std::to_string(line_no) + ")");
        }
        auto& channels = set.examples[example].channels;
        if (channels.size() <= static_cast<std::size_t>(channel)) {
            channels.resize(channel + 1);
        }
        channels[channel].push_back(time_ms);
        max_channel = std::max(max_channel, channel);
        max_time = std::max(max_time, time_ms);
    }

    set.channel_count = channel_count > 0 ? channel_count : max_channel + 1;
    set.duration_ms = duration_ms > 0.0 ? duration_ms : std::ceil(max_time + 1.0);
    for (auto& example : set.examples) {
        example.channels.resize(set.channel_count);
        for (auto& channel : example.channels) {
            std::sort(channel.begin(), channel.end());
            channel.erase(std::unique(channel.begin(), channel.end()), channel.end());
        }
    }
    if (duration_ms > 0.0 && max_time >= duration_ms) {
        throw DataError(spikes_path + ": spike time " + std::to_string(max_time) +
                        " outside the configured duration of " + std::to_string(duration_ms));
    }
    return set;
}

}  // namespace lsmnas
