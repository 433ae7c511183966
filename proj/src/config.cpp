#include "eegad/config.hpp"

#include <fstream>

#include "json.hpp"

namespace eegad {

using nlohmann::json;

namespace {

json to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["paths"] = {{"data_dir", c.data_dir},
                  {"out_dir", c.out_dir},
                  {"model_file", c.model_file},
                  {"detector_file", c.detector_file}};
    j["synth"] = {{"channels", c.synth.base.channels},
                  {"sample_rate", c.synth.base.sample_rate},
                  {"recording_duration_s", c.synth.base.duration_s},
                  {"segment_duration_s", c.synth.segment_duration_s},
                  {"n_oscillators", c.synth.base.n_oscillators},
                  {"freq_band", {c.synth.base.freq_lo, c.synth.base.freq_hi}},
                  {"noise_std", c.synth.base.noise_std},
                  {"amplitude_decay", c.synth.base.amplitude_decay},
                  {"n_normal", c.synth.n_normal},
                  {"n_abnormal", c.synth.n_abnormal},
                  {"n_patients", c.synth.n_patients},
                  {"anomaly",
                   {{"kind", c.synth.anomaly.kind == AnomalyKind::SpikeWave ? "spike_wave"
                                                                            : "triphasic_like"},
                    {"burst_freq", c.synth.anomaly.burst_freq},
                    {"burst_duration_s", c.synth.anomaly.burst_duration_s},
                    {"amplitude_gain", c.synth.anomaly.amplitude_gain}}}};
    j["arch"] = {{"preset", c.arch_preset},
                 {"main_kernel", c.main_kernel},
                 {"branch_enabled", c.branch_enabled},
                 {"branch_width", c.branch_width},
                 {"time_stride", c.time_stride}};
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"weight_decay", c.train.weight_decay},
                  {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},
                  {"eps", c.train.eps},
                  {"max_epochs", c.train.max_epochs},
                  {"batch_normals", c.train.batch_normals},
                  {"patience", c.train.patience},
                  {"audit", c.train_audit}};
    j["augment"] = {{"amp_range", {c.augment.amp_lo, c.augment.amp_hi}},
                    {"window_range", {c.augment.window_lo, c.augment.window_hi}},
                    {"lowfreq_range", {c.augment.lowfreq_lo, c.augment.lowfreq_hi}},
                    {"highfreq_range", {c.augment.highfreq_lo, c.augment.highfreq_hi}},
                    {"fake_fraction", c.augment.fake_fraction},
                    {"combined_mode", c.augment.combined_mode},
                    {"amp_class", c.augment.amp_class_enabled},
                    {"freq_class", c.augment.freq_class_enabled}};
    j["split"] = {{"setting", c.split.setting == Setting::I ? "I" : "II"},
                  {"n_runs", c.split.n_runs},
                  {"fold_count", c.split.fold_count}};
    j["detector_bins"] = c.detector_bins;
    return j;
}

RunConfig from_json(const json& j) {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        c.data_dir = p.value("data_dir", c.data_dir);
        c.out_dir = p.value("out_dir", c.out_dir);
        c.model_file = p.value("model_file", c.model_file);
        c.detector_file = p.value("detector_file", c.detector_file);
    }
    if (j.contains("synth")) {
        const auto& s = j["synth"];
        c.synth.base.channels = s.value("channels", c.synth.base.channels);
        c.synth.base.sample_rate = s.value("sample_rate", c.synth.base.sample_rate);
        c.synth.base.duration_s = s.value("recording_duration_s", c.synth.base.duration_s);
        c.synth.segment_duration_s = s.value("segment_duration_s", c.synth.segment_duration_s);
        c.synth.base.n_oscillators = s.value("n_oscillators", c.synth.base.n_oscillators);
        if (s.contains("freq_band")) {
            c.synth.base.freq_lo = s["freq_band"][0].get<float>();
            c.synth.base.freq_hi = s["freq_band"][1].get<float>();
        }
        c.synth.base.noise_std = s.value("noise_std", c.synth.base.noise_std);
        c.synth.base.amplitude_decay = s.value("amplitude_decay", c.synth.base.amplitude_decay);
        c.synth.n_normal = s.value("n_normal", c.synth.n_normal);
        c.synth.n_abnormal = s.value("n_abnormal", c.synth.n_abnormal);
        c.synth.n_patients = s.value("n_patients", c.synth.n_patients);
        if (s.contains("anomaly")) {
            const auto& a = s["anomaly"];
            const std::string kind = a.value("kind", std::string("spike_wave"));
            if (kind == "spike_wave") {
                c.synth.anomaly.kind = AnomalyKind::SpikeWave;
            } else if (kind == "triphasic_like") {
                c.synth.anomaly.kind = AnomalyKind::TriphasicLike;
            } else {
                throw ConfigError("config: unknown anomaly kind: " + kind);
            }
            c.synth.anomaly.burst_freq = a.value("burst_freq", c.synth.anomaly.burst_freq);
            c.synth.anomaly.burst_duration_s =
                a.value("burst_duration_s", c.synth.anomaly.burst_duration_s);
            c.synth.anomaly.amplitude_gain =
                a.value("amplitude_gain", c.synth.anomaly.amplitude_gain);
        }
    }
    if (j.contains("arch")) {
        const auto& a = j["arch"];
        c.arch_preset = a.value("preset", c.arch_preset);
        if (c.arch_preset != "tiny" && c.arch_preset != "full") {
            throw ConfigError("config: arch preset must be 'tiny' or 'full'");
        }
        c.main_kernel = a.value("main_kernel", c.main_kernel);
        c.branch_enabled = a.value("branch_enabled", c.branch_enabled);
        c.branch_width = a.value("branch_width", c.branch_width);
        c.time_stride = a.value("time_stride", c.time_stride);
    }
    if (j.contains("train")) {
        const auto& t = j["train"];
        c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
        c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
        c.train.beta1 = t.value("beta1", c.train.beta1);
        c.train.beta2 = t.value("beta2", c.train.beta2);
        c.train.eps = t.value("eps", c.train.eps);
        c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
        c.train.batch_normals = t.value("batch_normals", c.train.batch_normals);
        c.train.patience = t.value("patience", c.train.patience);
        c.train_audit = t.value("audit", c.train_audit);
    }
    if (j.contains("augment")) {
        const auto& a = j["augment"];
        if (a.contains("amp_range")) {
            c.augment.amp_lo = a["amp_range"][0].get<double>();
            c.augment.amp_hi = a["amp_range"][1].get<double>();
        }
        if (a.contains("window_range")) {
            c.augment.window_lo = a["window_range"][0].get<std::size_t>();
            c.augment.window_hi = a["window_range"][1].get<std::size_t>();
        }
        if (a.contains("lowfreq_range")) {
            c.augment.lowfreq_lo = a["lowfreq_range"][0].get<double>();
            c.augment.lowfreq_hi = a["lowfreq_range"][1].get<double>();
        }
        if (a.contains("highfreq_range")) {
            c.augment.highfreq_lo = a["highfreq_range"][0].get<double>();
            c.augment.highfreq_hi = a["highfreq_range"][1].get<double>();
        }
        c.augment.fake_fraction = a.value("fake_fraction", c.augment.fake_fraction);
        c.augment.combined_mode = a.value("combined_mode", c.augment.combined_mode);
        c.augment.amp_class_enabled = a.value("amp_class", c.augment.amp_class_enabled);
        c.augment.freq_class_enabled = a.value("freq_class", c.augment.freq_class_enabled);
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        const std::string setting = s.value("setting", std::string("I"));
        if (setting == "I") {
            c.split.setting = Setting::I;
        } else if (setting == "II") {
            c.split.setting = Setting::II;
        } else {
            throw ConfigError("config: split setting must be 'I' or 'II'");
        }
        c.split.n_runs = s.value("n_runs", c.split.n_runs);
        c.split.fold_count = s.value("fold_count", c.split.fold_count);
    }
    c.detector_bins = j.value("detector_bins", c.detector_bins);
    return c;
}

}  // namespace

nn::ArchConfig RunConfig::make_arch() const {
    const std::size_t K = synth.base.channels;
    const std::size_t L = segment_length();
    nn::ArchConfig a = arch_preset == "full" ? nn::ArchConfig::full(K, L)
                                             : nn::ArchConfig::tiny(K, L);
    a.main_kernel = main_kernel;
    a.branch_enabled = branch_enabled;
    a.branch_width = branch_width;
    a.time_stride = time_stride;
    a.validate();
    return a;
}

std::string RunConfig::to_json_text() const { return to_json(*this).dump(2) + "\n"; }

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    try {
        return from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad field: ") + e.what());
    }
}

RunConfig RunConfig::load(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides,
                          const std::uint64_t* seed_override) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse error: ") + e.what());
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got: " + ov);
        }
        std::string keypath = "/" + ov.substr(0, eq);
        for (auto& ch : keypath) {
            if (ch == '.') ch = '/';
        }
        const std::string raw = ov.substr(eq + 1);
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::exception&) {
            value = raw;  // bare strings allowed
        }
        try {
            j[json::json_pointer(keypath)] = value;
        } catch (const json::exception& e) {
            throw ConfigError("--set " + ov + ": " + e.what());
        }
    }
    RunConfig c;
    try {
        c = from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad field: ") + e.what());
    }
    if (seed_override) c.seed = *seed_override;
    return c;
}

}  // namespace eegad
