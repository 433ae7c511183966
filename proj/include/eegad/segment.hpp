#pragma once

#include <string>
#include <vector>

#include "eegad/common.hpp"

namespace eegad {

enum class Label : std::uint8_t {
    Normal = 0,
    Abnormal = 1,
    SimAmplitude = 2,
    SimFrequency = 3,
};

const char* label_name(Label l);
Label label_from_name(const std::string& name);

// One fixed-duration window of a multichannel recording. data is K x L,
// one row per channel. After dataset normalization every value is in [0, 1].
struct EegSegment {
    MatF data;
    float sample_rate = 0.0f;
    Label label = Label::Normal;
    std::string patient_id;

    std::size_t channels() const { return data.rows(); }
    std::size_t length() const { return data.cols(); }
};

struct Dataset {
    std::vector<EegSegment> segments;
    float norm_min = 0.0f;
    float norm_max = 0.0f;
    bool norm_fitted = false;
    float duration_s = 0.0f;

    // All segments must share K, L and sample_rate; throws DataError otherwise.
    void validate_uniform() const;
    std::size_t count(Label l) const;
};

// Cuts a K x T recording into floor(T / L) consecutive non-overlapping
// segments of L = sample_rate * duration_s samples; the trailing remainder is
// discarded. duration_s * sample_rate must be a positive integer.
std::vector<EegSegment> segment_recording(const MatF& recording, float sample_rate,
                                          float duration_s);

// Global min and max over every value of the given (training) segments.
std::pair<float, float> fit_normalization(const std::vector<EegSegment>& train_segments);

// v -> (v - norm_min) / (norm_max - norm_min), clamped to [0, 1] so values
// outside the fitted range (possible for test data) keep the type invariant.
EegSegment normalize(const EegSegment& segment, float norm_min, float norm_max);

// Fits on the segments and normalizes them in place.
void fit_and_normalize(Dataset& ds);

}  // namespace eegad
