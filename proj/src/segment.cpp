#include "eegad/segment.hpp"

#include <algorithm>
#include <cmath>

namespace eegad {

const char* label_name(Label l) {
    switch (l) {
        case Label::Normal: return "normal";
        case Label::Abnormal: return "abnormal";
        case Label::SimAmplitude: return "sim_amplitude";
        case Label::SimFrequency: return "sim_frequency";
    }
    return "unknown";
}

Label label_from_name(const std::string& name) {
    if (name == "normal") return Label::Normal;
    if (name == "abnormal") return Label::Abnormal;
    if (name == "sim_amplitude") return Label::SimAmplitude;
    if (name == "sim_frequency") return Label::SimFrequency;
    throw DataError("unknown label name: " + name);
}

void Dataset::validate_uniform() const {
    if (segments.empty()) return;
    const auto k = segments.front().channels();
    const auto l = segments.front().length();
    const auto rate = segments.front().sample_rate;
    for (const auto& s : segments) {
        if (s.channels() != k || s.length() != l || s.sample_rate != rate) {
            throw DataError("dataset segments do not share identical K, L and sample rate");
        }
    }
}

std::size_t Dataset::count(Label l) const {
    return static_cast<std::size_t>(
        std::count_if(segments.begin(), segments.end(),
                      [&](const EegSegment& s) { return s.label == l; }));
}

std::vector<EegSegment> segment_recording(const MatF& recording, float sample_rate,
                                          float duration_s) {
    const double l_real = static_cast<double>(sample_rate) * static_cast<double>(duration_s);
    const double l_rounded = std::round(l_real);
    if (l_rounded < 1.0 || std::abs(l_real - l_rounded) > 1e-6 * std::max(1.0, l_real)) {
        throw ConfigError("segment_recording: duration_s * sample_rate must be a positive integer");
    }
    if (recording.rows() == 0) {
        throw DataError("segment_recording: recording has zero channels");
    }
    const std::size_t L = static_cast<std::size_t>(l_rounded);
    const std::size_t K = recording.rows();
    const std::size_t T = recording.cols();
    const std::size_t n = T / L;

    std::vector<EegSegment> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        EegSegment seg;
        seg.data = MatF(K, L);
        seg.sample_rate = sample_rate;
        for (std::size_t r = 0; r < K; ++r) {
            const float* src = recording.row(r) + i * L;
            std::copy(src, src + L, seg.data.row(r));
        }
        out.push_back(std::move(seg));
    }
    return out;
}

std::pair<float, float> fit_normalization(const std::vector<EegSegment>& train_segments) {
    if (train_segments.empty()) {
        throw DataError("fit_normalization: no segments");
    }
    float lo = train_segments.front().data.values().empty()
                   ? 0.0f
                   : train_segments.front().data.values().front();
    float hi = lo;
    for (const auto& s : train_segments) {
        for (float v : s.data.values()) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(lo < hi)) {
        throw DataError("fit_normalization: all values identical, zero dynamic range");
    }
    return {lo, hi};
}

EegSegment normalize(const EegSegment& segment, float norm_min, float norm_max) {
    if (!(norm_min < norm_max)) {
        throw ConfigError("normalize: norm_min must be < norm_max");
    }
    EegSegment out = segment;
    const float scale = 1.0f / (norm_max - norm_min);
    for (float& v : out.data.values()) {
        v = std::clamp((v - norm_min) * scale, 0.0f, 1.0f);
    }
    return out;
}

void fit_and_normalize(Dataset& ds) {
    auto [lo, hi] = fit_normalization(ds.segments);
    for (auto& s : ds.segments) {
        s = normalize(s, lo, hi);
    }
    ds.norm_min = lo;
    ds.norm_max = hi;
    ds.norm_fitted = true;
}

}  // namespace eegad
