#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eegad/eval.hpp"
#include "eegad/synth.hpp"

namespace eegad {

// Synthetic-data generation settings beyond the per-recording SynthConfig.
struct SynthRunConfig {
    SynthConfig base;               // base.duration_s = normal recording length
    float segment_duration_s = 2.0f;
    std::size_t n_normal = 2300;    // segments
    std::size_t n_abnormal = 300;   // segments (one per injected recording)
    std::size_t n_patients = 20;
    EvalAnomalySpec anomaly;
};

// One structured JSON config drives every command; any field can be
// overridden with --set key=value.
struct RunConfig {
    std::uint64_t seed = 42;

    std::string data_dir = "data";
    std::string out_dir = "out";
    std::string model_file = "model.tbm1";
    std::string detector_file = "detector.gdt1";

    SynthRunConfig synth;

    std::string arch_preset = "tiny";  // "tiny" | "full"
    std::size_t main_kernel = 7;
    bool branch_enabled = true;
    std::size_t branch_width = 32;
    std::size_t time_stride = 2;

    nn::TrainConfig train;
    bool train_audit = false;  // write ssl_audit.csv for the first epoch

    AugmentConfig augment;
    SplitCfg split;
    std::size_t detector_bins = 32;

    std::size_t segment_length() const {
        return static_cast<std::size_t>(
            std::llround(static_cast<double>(synth.base.sample_rate) * synth.segment_duration_s));
    }

    nn::ArchConfig make_arch() const;

    std::string to_json_text() const;
    static RunConfig from_json_text(const std::string& text);

    // Loads the file, applies dotted-path overrides ("train.max_epochs=20"),
    // then the optional seed override.
    static RunConfig load(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {},
                          const std::uint64_t* seed_override = nullptr);

    bool operator==(const RunConfig& o) const { return to_json_text() == o.to_json_text(); }
};

}  // namespace eegad
