#include "lsmnas/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lsmnas/errors.hpp"

namespace lsmnas {

namespace {

using nlohmann::json;

json to_json(const NormalParams& p)
{
    return {{"mean", p.mean}, {"stddev", p.stddev}};
}

NormalParams normal_from(const json& j, const NormalParams& defaults)
{
    NormalParams p = defaults;
    p.mean = j.value("mean", p.mean);
    p.stddev = j.value("stddev", p.stddev);
    return p;
}

json to_json(const NeuronClassParams& p)
{
    return {{"tau_m_ms", p.tau_m_ms},       {"rest_mv", p.rest_mv},
            {"reset_mv", p.reset_mv},       {"threshold_mv", p.threshold_mv},
            {"refractory_ms", p.refractory_ms}, {"tau_ge_ms", p.tau_ge_ms},
            {"tau_gi_ms", p.tau_gi_ms},     {"e_exc_mv", p.e_exc_mv},
            {"e_inh_mv", p.e_inh_mv}};
}

NeuronClassParams class_from(const json& j, const NeuronClassParams& defaults)
{
    NeuronClassParams p = defaults;
    p.tau_m_ms = j.value("tau_m_ms", p.tau_m_ms);
    p.rest_mv = j.value("rest_mv", p.rest_mv);
    p.reset_mv = j.value("reset_mv", p.reset_mv);
    p.threshold_mv = j.value("threshold_mv", p.threshold_mv);
    p.refractory_ms = j.value("refractory_ms", p.refractory_ms);
    p.tau_ge_ms = j.value("tau_ge_ms", p.tau_ge_ms);
    p.tau_gi_ms = j.value("tau_gi_ms", p.tau_gi_ms);
    p.e_exc_mv = j.value("e_exc_mv", p.e_exc_mv);
    p.e_inh_mv = j.value("e_inh_mv", p.e_inh_mv);
    return p;
}

json to_json(const SaConfig& c)
{
    return {{"t_initial", c.t_initial}, {"t_min", c.t_min}, {"k", c.inner_iterations}};
}

SaConfig sa_from(const json& j, const SaConfig& defaults)
{
    SaConfig c = defaults;
    c.t_initial = j.value("t_initial", c.t_initial);
    c.t_min = j.value("t_min", c.t_min);
    c.inner_iterations = j.value("k", c.inner_iterations);
    return c;
}

json to_json(const DatasetSpec& d)
{
    return {{"format", d.format},
            {"train_images", d.train_images},
            {"train_labels", d.train_labels},
            {"test_images", d.test_images},
            {"test_labels", d.test_labels},
            {"train_features", d.train_features},
            {"test_features", d.test_features},
            {"split_fraction", d.split_fraction},
            {"train_spikes", d.train_spikes},
            {"train_spike_labels", d.train_spike_labels},
            {"test_spikes", d.test_spikes},
            {"test_spike_labels", d.test_spike_labels},
            {"channels", d.channels},
            {"train_truncate", d.train_truncate},
            {"test_truncate", d.test_truncate},
            {"max_intensity", d.max_intensity},
            {"max_rate_hz", d.max_rate_hz},
            {"classes", d.classes}};
}

DatasetSpec dataset_from(const json& j)
{
    DatasetSpec d;
    d.format = j.value("format", d.format);
    d.train_images = j.value("train_images", d.train_images);
    d.train_labels = j.value("train_labels", d.train_labels);
    d.test_images = j.value("test_images", d.test_images);
    d.test_labels = j.value("test_labels", d.test_labels);
    d.train_features = j.value("train_features", d.train_features);
    d.test_features = j.value("test_features", d.test_features);
    d.split_fraction = j.value("split_fraction", d.split_fraction);
    d.train_spikes = j.value("train_spikes", d.train_spikes);
    d.train_spike_labels = j.value("train_spike_labels", d.train_spike_labels);
    d.test_spikes = j.value("test_spikes", d.test_spikes);
    d.test_spike_labels = j.value("test_spike_labels", d.test_spike_labels);
    d.channels = j.value("channels", d.channels);
    d.train_truncate = j.value("train_truncate", d.train_truncate);
    d.test_truncate = j.value("test_truncate", d.test_truncate);
    d.max_intensity = j.value("max_intensity", d.max_intensity);
    d.max_rate_hz = j.value("max_rate_hz", d.max_rate_hz);
    d.classes = j.value("classes", d.classes);
    return d;
}

json to_json(const LiquidSpec& s)
{
    return {{"exc_ratio", s.excitatory_ratio},
            {"p_ee", s.p_ee},
            {"p_ei", s.p_ei},
            {"p_ie", s.p_ie},
            {"p_ii", s.p_ii}};
}

LiquidSpec liquid_from(const json& j, const LiquidSpec& defaults)
{
    LiquidSpec s = defaults;
    s.excitatory_ratio = j.value("exc_ratio", s.excitatory_ratio);
    s.p_ee = j.value("p_ee", s.p_ee);
    s.p_ei = j.value("p_ei", s.p_ei);
    s.p_ie = j.value("p_ie", s.p_ie);
    s.p_ii = j.value("p_ii", s.p_ii);
    return s;
}

void require_file(const std::string& path, const std::string& field)
{
    if (path.empty()) {
        throw ConfigError(field + ": path is required for this dataset format");
    }
    if (!std::filesystem::exists(path)) {
        throw ConfigError(field + ": file does not exist: " + path);
    }
}

void check_probability(double value, const std::string& field)
{
    if (value < 0.0 || value > 1.0) {
        throw ConfigError(field + ": probability " + std::to_string(value) +
                          " outside [0, 1]");
    }
}

}  // namespace

void validate(const RunConfig& config, bool check_files)
{
    const auto& d = config.dataset;
    if (d.format != "idx" && d.format != "feature_csv" && d.format != "spike_csv") {
        throw ConfigError("dataset.format: unknown format '" + d.format + "'");
    }
    if (check_files) {
        if (d.format == "idx") {
            require_file(d.train_images, "dataset.train_images");
            require_file(d.train_labels, "dataset.train_labels");
            require_file(d.test_images, "dataset.test_images");
            require_file(d.test_labels, "dataset.test_labels");
        } else if (d.format == "feature_csv") {
            require_file(d.train_features, "dataset.train_features");
            if (!d.test_features.empty()) {
                require_file(d.test_features, "dataset.test_features");
            }
        } else {
            require_file(d.train_spikes, "dataset.train_spikes");
            require_file(d.train_spike_labels, "dataset.train_spike_labels");
            require_file(d.test_spikes, "dataset.test_spikes");
            require_file(d.test_spike_labels, "dataset.test_spike_labels");
        }
    }
    if (d.format == "feature_csv" && d.test_features.empty() &&
        (!(d.split_fraction > 0.0) || d.split_fraction >= 1.0)) {
        throw ConfigError("dataset.split_fraction: must lie in (0, 1)");
    }
    if (d.classes < 2) {
        throw ConfigError("dataset.classes: need at least 2 classes");
    }
    if (d.max_rate_hz <= 0.0) {
        throw ConfigError("dataset.max_rate_hz: must be positive");
    }
    if (d.max_intensity <= 0.0) {
        throw ConfigError("dataset.max_intensity: must be positive");
    }
    if (d.train_truncate < 0 || d.test_truncate < 0) {
        throw ConfigError("dataset.train_truncate/test_truncate: must be non-negative");
    }

    if (config.n_group < 1) {
        throw ConfigError("n_group: must be at least 1");
    }
    if (config.n_total < config.n_group * kMinLiquidNeurons) {
        throw ConfigError("n_total: " + std::to_string(config.n_total) +
                          " neurons cannot hold " + std::to_string(config.n_group) +
                          " liquids of at least " + std::to_string(kMinLiquidNeurons));
    }

    try {
        validate(config.sa_step1);
        validate(config.sa_step2);
        validate(config.sa_step3);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("sa: ") + e.what());
    }
    for (const SaConfig* sa : {&config.sa_step1, &config.sa_step2, &config.sa_step3}) {
        if (!(sa->t_initial > sa->t_min)) {
            throw ConfigError("sa: t_initial must exceed t_min");
        }
    }
    try {
        validate(config.stages.lif);
        validate(config.stages.sim);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("lif/sim: ") + e.what());
    }

    for (int p = 0; p < kLiquidParamCount; ++p) {
        const double v = config.liquid_defaults.param(p);
        if (v < 0.0 || v > 0.9) {
            throw ConfigError("liquid_defaults: parameter " + std::to_string(v) +
                              " outside [0.0, 0.9]");
        }
    }
    const auto& topo = config.stages.topology;
    check_probability(topo.p_input_to_e, "topology.p_input_to_e");
    check_probability(topo.p_input_to_i, "topology.p_input_to_i");
    check_probability(topo.p_interlayer_ee, "topology.p_interlayer_ee");
    check_probability(topo.p_interlayer_ei, "topology.p_interlayer_ei");
    check_probability(topo.p_interlayer_ie, "topology.p_interlayer_ie");
    check_probability(topo.p_interlayer_ii, "topology.p_interlayer_ii");

    if (config.stages.readout.learning_rate <= 0.0 || config.stages.readout.epochs < 1 ||
        config.stages.readout.batch_size < 1) {
        throw ConfigError("readout: bad training hyperparameters");
    }
    if (config.out_dir.empty()) {
        throw ConfigError("out_dir: must not be empty");
    }
}

std::string to_json_string(const RunConfig& config)
{
    json doc{
        {"dataset", to_json(config.dataset)},
        {"n_total", config.n_total},
        {"n_group", config.n_group},
        {"liquid_defaults", to_json(config.liquid_defaults)},
        {"sa", json{{"step1", to_json(config.sa_step1)},
                    {"step2", to_json(config.sa_step2)},
                    {"step3", to_json(config.sa_step3)}}},
        {"lif", json{{"exc", to_json(config.stages.lif.exc)},
                     {"inh", to_json(config.stages.lif.inh)}}},
        {"sim", json{{"dt_ms", config.stages.sim.dt_ms},
                     {"duration_ms", config.stages.sim.duration_ms},
                     {"rest_ms", config.stages.sim.rest_ms}}},
        {"weights", json{{"input", to_json(config.stages.weights.input)},
                         {"ee", to_json(config.stages.weights.ee)},
                         {"ei", to_json(config.stages.weights.ei)},
                         {"ie", to_json(config.stages.weights.ie)},
                         {"ii", to_json(config.stages.weights.ii)},
                         {"interlayer", to_json(config.stages.weights.interlayer)}}},
        {"topology", json{{"p_input_to_e", config.stages.topology.p_input_to_e},
                          {"p_input_to_i", config.stages.topology.p_input_to_i},
                          {"p_interlayer_ee", config.stages.topology.p_interlayer_ee},
                          {"p_interlayer_ei", config.stages.topology.p_interlayer_ei},
                          {"p_interlayer_ie", config.stages.topology.p_interlayer_ie},
                          {"p_interlayer_ii", config.stages.topology.p_interlayer_ii}}},
        {"readout", json{{"learning_rate", config.stages.readout.learning_rate},
                         {"epochs", config.stages.readout.epochs},
                         {"batch_size", config.stages.readout.batch_size}}},
        {"seed", config.seed},
        {"out_dir", config.out_dir},
        {"threads", config.threads}};
    return doc.dump(2) + "\n";
}

RunConfig config_from_json_string(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config JSON parse failure: ") + e.what());
    }

    RunConfig config;
    try {
        if (doc.contains("dataset")) {
            config.dataset = dataset_from(doc["dataset"]);
        }
        config.n_total = doc.value("n_total", config.n_total);
        config.n_group = doc.value("n_group", config.n_group);
        if (doc.contains("liquid_defaults")) {
            config.liquid_defaults = liquid_from(doc["liquid_defaults"], config.liquid_defaults);
        }
        if (doc.contains("sa")) {
            const auto& sa = doc["sa"];
            if (sa.contains("step1")) config.sa_step1 = sa_from(sa["step1"], config.sa_step1);
            if (sa.contains("step2")) config.sa_step2 = sa_from(sa["step2"], config.sa_step2);
            if (sa.contains("step3")) config.sa_step3 = sa_from(sa["step3"], config.sa_step3);
        }
        if (doc.contains("lif")) {
            const auto& lif = doc["lif"];
            if (lif.contains("exc")) {
                config.stages.lif.exc = class_from(lif["exc"], config.stages.lif.exc);
            }
            if (lif.contains("inh")) {
                config.stages.lif.inh = class_from(lif["inh"], config.stages.lif.inh);
            }
        }
        if (doc.contains("sim")) {
            const auto& sim = doc["sim"];
            config.stages.sim.dt_ms = sim.value("dt_ms", config.stages.sim.dt_ms);
            config.stages.sim.duration_ms = sim.value("duration_ms", config.stages.sim.duration_ms);
            config.stages.sim.rest_ms = sim.value("rest_ms", config.stages.sim.rest_ms);
        }
        if (doc.contains("weights")) {
            const auto& w = doc["weights"];
            auto& out = config.stages.weights;
            if (w.contains("input")) out.input = normal_from(w["input"], out.input);
            if (w.contains("ee")) out.ee = normal_from(w["ee"], out.ee);
            if (w.contains("ei")) out.ei = normal_from(w["ei"], out.ei);
            if (w.contains("ie")) out.ie = normal_from(w["ie"], out.ie);
            if (w.contains("ii")) out.ii = normal_from(w["ii"], out.ii);
            if (w.contains("interlayer")) {
                out.interlayer = normal_from(w["interlayer"], out.interlayer);
            }
        }
        if (doc.contains("topology")) {
            const auto& t = doc["topology"];
            auto& out = config.stages.topology;
            out.p_input_to_e = t.value("p_input_to_e", out.p_input_to_e);
            out.p_input_to_i = t.value("p_input_to_i", out.p_input_to_i);
            out.p_interlayer_ee = t.value("p_interlayer_ee", out.p_interlayer_ee);
            out.p_interlayer_ei = t.value("p_interlayer_ei", out.p_interlayer_ei);
            out.p_interlayer_ie = t.value("p_interlayer_ie", out.p_interlayer_ie);
            out.p_interlayer_ii = t.value("p_interlayer_ii", out.p_interlayer_ii);
        }
        if (doc.contains("readout")) {
            const auto& r = doc["readout"];
            auto& out = config.stages.readout;
            out.learning_rate = r.value("learning_rate", out.learning_rate);
            out.epochs = r.value("epochs", out.epochs);
            out.batch_size = r.value("batch_size", out.batch_size);
        }
        config.seed = doc.value("seed", config.seed);
        config.out_dir = doc.value("out_dir", config.out_dir);
        config.threads = doc.value("threads", config.threads);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field failure: ") + e.what());
    }
    return config;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return config_from_json_string(buffer.str());
}

void save_config(const RunConfig& config, const std::string& path)
{
    atomic_write_file(path, to_json_string(config));
}

DatasetSpec load_dataset_spec(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open dataset spec file " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return dataset_from(json::parse(buffer.str()));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("dataset spec parse failure: ") + e.what());
    }
}

LoadedData load_and_encode(const DatasetSpec& spec, const SimConfig& sim,
                           std::uint64_t master_seed)
{
    // Fixed substreams keep train/test encodings independent of each other.
    const std::uint64_t train_seed = derive_seed(master_seed, 0x747261696eull);
    const std::uint64_t test_seed = derive_seed(master_seed, 0x74657374ull);

    LoadedData data;
    data.classes = spec.classes;
    if (spec.format == "spike_csv") {
        data.train = load_spike_csv(spec.train_spikes, spec.train_spike_labels, spec.channels,
                                    sim.duration_ms);
        data.test = load_spike_csv(spec.test_spikes, spec.test_spike_labels,
                                   data.train.channel_count, sim.duration_ms);
        if (spec.train_truncate > 0 &&
            data.train.size() > static_cast<std::size_t>(spec.train_truncate)) {
            data.train.examples.resize(spec.train_truncate);
            data.train.labels.resize(spec.train_truncate);
        }
        if (spec.test_truncate > 0 &&
            data.test.size() > static_cast<std::size_t>(spec.test_truncate)) {
            data.test.examples.resize(spec.test_truncate);
            data.test.labels.resize(spec.test_truncate);
        }
        return data;
    }

    FeatureDataset train;
    FeatureDataset test;
    if (spec.format == "idx") {
        train = load_idx(spec.train_images, spec.train_labels);
        test = load_idx(spec.test_images, spec.test_labels);
    } else if (spec.format == "feature_csv") {
        if (!spec.test_features.empty()) {
            train = load_feature_csv(spec.train_features, spec.max_intensity);
            test = load_feature_csv(spec.test_features, spec.max_intensity);
        } else {
            const auto whole = load_feature_csv(spec.train_features, spec.max_intensity);
            auto parts = split_dataset(whole, spec.split_fraction);
            train = std::move(parts.first);
            test = std::move(parts.second);
        }
    } else {
        throw ConfigError("dataset.format: unknown format '" + spec.format + "'");
    }

    train = truncate_dataset(train, static_cast<std::size_t>(spec.train_truncate));
    test = truncate_dataset(test, static_cast<std::size_t>(spec.test_truncate));
    data.train = encode_dataset(train, spec.max_rate_hz, sim.duration_ms, sim.dt_ms, train_seed);
    data.test = encode_dataset(test, spec.max_rate_hz, sim.duration_ms, sim.dt_ms, test_seed);
    return data;
}

void atomic_write_file(const std::string& path, const std::string& content)
{
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot open " + tmp + " for writing");
        }
        out << content;
        if (!out) {
            throw DataError("write failure on " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw DataError("cannot move " + tmp + " into place: " + ec.message());
    }
}

}  // namespace lsmnas
