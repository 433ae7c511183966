#pragma once

#include <vector>

#include "eegad/common.hpp"
#include "eegad/segment.hpp"

namespace eegad {

// Band-limited oscillator-bank generator for normal EEG-like recordings.
struct SynthConfig {
    std::size_t channels = 4;
    float sample_rate = 128.0f;
    float duration_s = 2.0f;  // per recording
    std::size_t n_oscillators = 8;
    float freq_lo = 0.5f;
    float freq_hi = 30.0f;
    float noise_std = 0.05f;        // relative to the oscillator sum's RMS
    float amplitude_decay = 1.0f;   // gamma in a_i = 1 / f_i^gamma

    void validate() const;
};

struct Oscillator {
    double freq_hz = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
};

// channel(t) = sum_i a_i sin(2 pi f_i t + phi_i), t in seconds.
std::vector<float> synth_channel(const std::vector<Oscillator>& oscillators,
                                 std::size_t n_samples, float sample_rate);

// Each channel: oscillator sum plus Gaussian noise with
// std = noise_std * sqrt(sum a_i^2 / 2). f_i ~ U[freq_lo, freq_hi),
// phi_i ~ U[0, 2 pi), a_i = 1 / f_i^gamma. Deterministic given the seed.
MatF gen_normal_recording(const SynthConfig& cfg, RandomSource& rng);

enum class AnomalyKind { SpikeWave, TriphasicLike };

// Evaluation anomalies are deliberately different waveforms from the training
// transforms, so detection requires features that generalize.
struct EvalAnomalySpec {
    AnomalyKind kind = AnomalyKind::SpikeWave;
    float burst_freq = 3.0f;       // Hz
    float burst_duration_s = 0.5f;
    float amplitude_gain = 3.0f;

    void validate(float recording_duration_s) const;
};

// Zero-mean burst waveform sampled at phase in [0, 1) within one cycle.
double anomaly_waveform(AnomalyKind kind, double phase);

// Adds a burst train to a uniform-random window of burst_duration_s, on all
// channels simultaneously, scaled by amplitude_gain * per-channel RMS.
// Output shape equals input shape; columns outside the window are untouched.
MatF inject_eval_anomaly(const MatF& recording, float sample_rate, const EvalAnomalySpec& spec,
                         RandomSource& rng);

}  // namespace eegad
