#include "eegad/synth.hpp"

#include <cmath>

namespace eegad {

void SynthConfig::validate() const {
    if (channels == 0) throw ConfigError("synth: channels must be positive");
    if (sample_rate <= 0) throw ConfigError("synth: sample_rate must be positive");
    if (duration_s <= 0) throw ConfigError("synth: duration_s must be positive");
    if (n_oscillators < 1) throw ConfigError("synth: n_oscillators must be >= 1");
    if (noise_std < 0) throw ConfigError("synth: noise_std must be >= 0");
    if (!(freq_lo > 0 && freq_lo < freq_hi && freq_hi < sample_rate / 2)) {
        throw ConfigError("synth: freq band must lie within (0, sample_rate/2)");
    }
}

std::vector<float> synth_channel(const std::vector<Oscillator>& oscillators,
                                 std::size_t n_samples, float sample_rate) {
    std::vector<float> out(n_samples, 0.0f);
    const double dt = 1.0 / static_cast<double>(sample_rate);
    for (const auto& osc : oscillators) {
        const double w = 2.0 * M_PI * osc.freq_hz;
        for (std::size_t t = 0; t < n_samples; ++t) {
            out[t] += static_cast<float>(osc.amplitude * std::sin(w * (t * dt) + osc.phase));
        }
    }
    return out;
}

MatF gen_normal_recording(const SynthConfig& cfg, RandomSource& rng) {
    cfg.validate();
    const auto T = static_cast<std::size_t>(
        std::llround(static_cast<double>(cfg.sample_rate) * cfg.duration_s));
    MatF rec(cfg.channels, T);
    std::vector<Oscillator> bank(cfg.n_oscillators);
    for (std::size_t c = 0; c < cfg.channels; ++c) {
        double power = 0.0;
        for (auto& osc : bank) {
            osc.freq_hz = rng.uniform(cfg.freq_lo, cfg.freq_hi);
            osc.phase = rng.uniform(0.0, 2.0 * M_PI);
            osc.amplitude = 1.0 / std::pow(osc.freq_hz, static_cast<double>(cfg.amplitude_decay));
            power += osc.amplitude * osc.amplitude;
        }
        auto wave = synth_channel(bank, T, cfg.sample_rate);
        if (cfg.noise_std > 0) {
            const double sigma = cfg.noise_std * std::sqrt(power / 2.0);
            for (auto& v : wave) v += static_cast<float>(rng.gaussian(0.0, sigma));
        }
        std::copy(wave.begin(), wave.end(), rec.row(c));
    }
    return rec;
}

void EvalAnomalySpec::validate(float recording_duration_s) const {
    if (burst_duration_s > recording_duration_s) {
        throw DataError("inject_eval_anomaly: burst longer than recording");
    }
    if (!(amplitude_gain > 1.0f)) {
        throw ConfigError("inject_eval_anomaly: amplitude_gain must be > 1");
    }
    if (burst_freq <= 0) throw ConfigError("inject_eval_anomaly: burst_freq must be positive");
}

double anomaly_waveform(AnomalyKind kind, double phase) {
    const double p = phase - std::floor(phase);
    if (kind == AnomalyKind::SpikeWave) {
        // Sharp positive triangular spike, then a slow negative half-sine.
        if (p < 0.125) return 1.5 * (1.0 - std::abs(p / 0.0625 - 1.0));
        return -std::sin(M_PI * (p - 0.125) / 0.875);
    }
    // TriphasicLike: three alternating-polarity deflections per cycle.
    if (p < 0.2) return -0.6 * std::sin(M_PI * p / 0.2);
    if (p < 0.45) return 1.5 * std::sin(M_PI * (p - 0.2) / 0.25);
    return -0.7 * std::sin(M_PI * (p - 0.45) / 0.55);
}

MatF inject_eval_anomaly(const MatF& recording, float sample_rate, const EvalAnomalySpec& spec,
                         RandomSource& rng) {
    const std::size_t T = recording.cols();
    const std::size_t K = recording.rows();
    const auto burst_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(spec.burst_duration_s) * sample_rate));
    if (burst_len > T) throw DataError("inject_eval_anomaly: burst longer than recording");
    spec.validate(static_cast<float>(T) / sample_rate);

    const auto start = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(T - burst_len)));
    const double period = static_cast<double>(sample_rate) / spec.burst_freq;  // samples

    MatF out = recording;
    for (std::size_t c = 0; c < K; ++c) {
        double ss = 0.0;
        const float* src = recording.row(c);
        for (std::size_t t = 0; t < T; ++t) ss += static_cast<double>(src[t]) * src[t];
        const double rms = std::sqrt(ss / static_cast<double>(T));
        float* dst = out.row(c);
        for (std::size_t t = 0; t < burst_len; ++t) {
            const double phase = static_cast<double>(t) / period;
            dst[start + t] += static_cast<float>(spec.amplitude_gain * rms *
                                                 anomaly_waveform(spec.kind, phase));
        }
    }
    return out;
}

}  // namespace eegad
