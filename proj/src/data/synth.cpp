#include "condrnn/data/synth.hpp"

#include <algorithm>
#include <cmath>

#include "condrnn/diff/rng.hpp"
#include "condrnn/error.hpp"

namespace condrnn::data {

namespace {

constexpr double kNoiseSpread = 3.0;
constexpr double kFreqSpread = 0.4;
constexpr double kLevelSpread = 0.8;
constexpr double kNuisanceShift = 0.2;

struct SensorModel {
    std::vector<std::vector<double>> loading;  // [d][channels]
    std::vector<double> offset;
    std::vector<double> gain;
};

SensorModel make_sensors(std::size_t d, std::size_t channels, double cross, diff::RngStream rng) {
    SensorModel m;
    m.loading.assign(d, std::vector<double>(channels, 0.0));
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t c = 0; c < channels; ++c) m.loading[j][c] = cross * rng.normal();
        const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        m.loading[j][j % channels] = sign * rng.uniform(0.8, 1.2);
        m.offset.push_back(rng.uniform(-5.0, 5.0));
        m.gain.push_back(rng.uniform(0.5, 3.0));
    }
    return m;
}

Dataset make_header(const SynthConfig& cfg) {
    Dataset ds;
    ds.name = "synthetic";
    ds.catalog = cond::SensorCatalog::numbered(cfg.sensors);
    ds.task.kind = cfg.task;
    ds.task.classes = cfg.task == TaskKind::Classification ? cfg.classes : 0;
    ds.normalization = cfg.task == TaskKind::Classification ? Normalization::ZScore : Normalization::MinMax;
    return ds;
}

Dataset generate_classification(const SynthConfig& cfg) {
    const std::size_t d = cfg.sensors, k_classes = cfg.classes, t_len = cfg.length;
    const std::size_t channels = std::max<std::size_t>(2, d / 3);
    diff::RngStream root(cfg.seed);

    SensorModel sensors = make_sensors(d, channels, 0.15, root.split("sensors"));
    // The last sensor carries no signal at all.
    std::fill(sensors.loading[d - 1].begin(), sensors.loading[d - 1].end(), 0.0);
    std::vector<double> sensor_noise;
    auto noise_rng = root.split("noise");
    for (std::size_t j = 0; j < d; ++j) sensor_noise.push_back(cfg.noise * noise_rng.uniform(1.0, kNoiseSpread));

    struct ClassModel {
        std::vector<double> freq, level;
    };
    std::vector<double> base_freq;
    auto class_rng = root.split("classes");
    for (std::size_t c = 0; c < channels; ++c) base_freq.push_back(class_rng.uniform(0.4, 1.2));
    std::vector<ClassModel> classes(k_classes);
    for (auto& cm : classes) {
        for (std::size_t c = 0; c < channels; ++c) {
            cm.freq.push_back(base_freq[c] + class_rng.uniform(-kFreqSpread, kFreqSpread));
            cm.level.push_back(kLevelSpread * class_rng.normal());
        }
    }

    const double damping = 0.9, drive = 0.3;
    Dataset ds = make_header(cfg);
    auto inst_rng = root.split("instances");
    for (std::size_t i = 0; i < cfg.instances; ++i) {
        auto rng = inst_rng.split(static_cast<std::uint64_t>(i));
        const std::size_t label = i % k_classes;
        const auto& cm = classes[label];
        std::vector<double> z1(channels), z2(channels), shift(channels);
        for (std::size_t c = 0; c < channels; ++c) {
            z1[c] = 0.5 * rng.normal();
            z2[c] = 0.5 * rng.normal();
            shift[c] = cm.level[c] + kNuisanceShift * rng.normal();
        }
        diff::Tensor values(diff::Shape{t_len, d});
        for (std::size_t t = 0; t < t_len; ++t) {
            for (std::size_t c = 0; c < channels; ++c) {
                const double cs = std::cos(cm.freq[c]), sn = std::sin(cm.freq[c]);
                const double a = damping * (cs * z1[c] - sn * z2[c]) + drive * rng.normal();
                const double b = damping * (sn * z1[c] + cs * z2[c]) + drive * rng.normal();
                z1[c] = a;
                z2[c] = b;
            }
            for (std::size_t j = 0; j < d; ++j) {
                double v = sensor_noise[j] * rng.normal();
                for (std::size_t c = 0; c < channels; ++c) v += sensors.loading[j][c] * (z1[c] + shift[c]);
                values.at(t, j) = sensors.offset[j] + sensors.gain[j] * v;
            }
        }
        TimeSeriesInstance inst;
        inst.values = std::move(values);
        inst.active = ActiveSet::all(d);
        inst.label = label;
        inst.meta.id = "syn" + std::to_string(i);
        inst.meta.source = "synthetic";
        ds.instances.push_back(std::move(inst));
    }
    return ds;
}

Dataset generate_regression(const SynthConfig& cfg) {
    const std::size_t d = cfg.sensors, min_life = cfg.length;
    const std::size_t op_channels = 2;
    diff::RngStream root(cfg.seed);
    const SensorModel sensors = make_sensors(d, op_channels, 0.3, root.split("sensors"));
    std::vector<double> wear;
    auto wear_rng = root.split("wear");
    for (std::size_t j = 0; j < d; ++j) wear.push_back((wear_rng.bernoulli(0.5) ? 1.0 : -1.0) * wear_rng.uniform(0.5, 1.5));

    Dataset ds = make_header(cfg);
    auto inst_rng = root.split("engines");
    for (std::size_t i = 0; i < cfg.instances; ++i) {
        auto rng = inst_rng.split(static_cast<std::uint64_t>(i));
        const std::size_t lo = (3 * min_life + 1) / 2, hi = 3 * min_life;
        const std::size_t life = lo + rng.below(hi - lo + 1);
        const std::size_t observed = min_life + rng.below(life - min_life + 1);
        const double exponent = rng.uniform(1.5, 2.5);
        diff::Tensor values(diff::Shape{observed, d});
        std::vector<double> op(op_channels, 0.0);
        for (std::size_t t = 0; t < observed; ++t) {
            const double health = std::pow(static_cast<double>(t + 1) / static_cast<double>(life), exponent);
            for (auto& o : op) o = 0.7 * o + 0.5 * rng.normal();
            for (std::size_t j = 0; j < d; ++j) {
                double v = wear[j] * health + cfg.noise * rng.normal();
                for (std::size_t c = 0; c < op_channels; ++c) v += 0.2 * sensors.loading[j][c] * op[c];
                values.at(t, j) = sensors.offset[j] + sensors.gain[j] * v;
            }
        }
        TimeSeriesInstance inst;
        inst.values = std::move(values);
        inst.active = ActiveSet::all(d);
        inst.meta.id = "engine" + std::to_string(i);
        inst.meta.source = inst.meta.id;
        inst.meta.total_life = static_cast<double>(life);
        inst.rul = static_cast<double>(life - observed);
        ds.instances.push_back(std::move(inst));
    }
    return ds;
}

} // namespace

void validate(const SynthConfig& cfg) {
    if (cfg.sensors < 4) throw ConfigError("synthetic data needs d >= 4, got " + std::to_string(cfg.sensors));
    if (cfg.instances < 40) throw ConfigError("synthetic data needs N >= 40, got " + std::to_string(cfg.instances));
    if (cfg.length == 0) throw ConfigError("synthetic series length must be positive");
    if (cfg.task == TaskKind::Classification && cfg.classes < 2) throw ConfigError("synthetic classification needs K >= 2");
    if (cfg.noise < 0.0) throw ConfigError("noise must be non-negative");
}

Dataset synth_generate(const SynthConfig& config) {
    validate(config);
    return config.task == TaskKind::Classification ? generate_classification(config) : generate_regression(config);
}

} // namespace condrnn::data
