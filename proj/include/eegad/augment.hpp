#pragma once

#include <filesystem>
#include <vector>

#include "eegad/common.hpp"
#include "eegad/segment.hpp"

namespace eegad {

// Sampling ranges for the self-labeled anomaly transformations.
struct AugmentConfig {
    double amp_lo = 2.0, amp_hi = 4.0;          // alpha range, 1 < lo < hi
    std::size_t window_lo = 4, window_hi = 0;   // w range in samples; 0 = L
    double lowfreq_lo = 2.0, lowfreq_hi = 4.0;  // omega range, 1 < lo < hi
    double highfreq_lo = 0.1, highfreq_hi = 0.5;  // omega' range, 0 < lo < hi < 1
    double fake_fraction = 0.0;                 // p in [0, 1]
    bool combined_mode = false;
    // Class toggles for the ablation grid; both on by default.
    bool amp_class_enabled = true;
    bool freq_class_enabled = true;

    std::size_t window_hi_or(std::size_t L) const { return window_hi == 0 ? L : window_hi; }
    void validate(std::size_t L) const;
};

enum class TransformKind { None, Amplitude, LowerFreq, HigherFreq, Combined };

const char* transform_kind_name(TransformKind k);

// Audit record of one generated sample.
struct TransformRecord {
    TransformKind kind = TransformKind::None;
    double alpha = 0.0;          // amplitude factor (0 when unused)
    double omega = 0.0;          // frequency factor (omega or omega'; 0 when unused)
    std::size_t window_start = 0;
    std::size_t window_width = 0;
    std::size_t l_prime = 0;     // upsampled / tiled length (0 when unused)
    std::size_t crop_offset = 0;
};

// Endpoint-aligned linear interpolation: output index j samples the source at
// position j * (n_in - 1) / (n_out - 1), so first and last samples are exact.
std::vector<float> resample_linear(const float* src, std::size_t n_in, std::size_t n_out);

// w consecutive columns of every channel multiplied by alpha ~ U[amp_lo, amp_hi];
// values are not clamped back to [0, 1] -- super-unit values are the signal.
std::pair<EegSegment, TransformRecord> make_amplitude_abnormal(const EegSegment& x,
                                                               const AugmentConfig& cfg,
                                                               RandomSource& rng);

// Rows upsampled by omega ~ U[lowfreq range] to L' = floor(omega * L), then a
// random L-column crop.
std::pair<EegSegment, TransformRecord> make_lower_freq_abnormal(const EegSegment& x,
                                                                const AugmentConfig& cfg,
                                                                RandomSource& rng);

// Rows downsampled to m = floor(omega' * L) samples, tiled ceil(1/omega')
// times (extended when that still falls short of L), then a random L-column
// crop when the tiled length exceeds L.
std::pair<EegSegment, TransformRecord> make_higher_freq_abnormal(const EegSegment& x,
                                                                 const AugmentConfig& cfg,
                                                                 RandomSource& rng);

// One frequency transform (lower/higher, fair coin) followed by the amplitude
// transform.
std::pair<EegSegment, TransformRecord> make_combined_abnormal(const EegSegment& x,
                                                              const AugmentConfig& cfg,
                                                              RandomSource& rng);

// Deterministic variants taking pre-sampled factors; the random entry points
// above sample the factors and then call these.
EegSegment amplitude_with(const EegSegment& x, double alpha, std::size_t start, std::size_t w);
EegSegment lower_freq_with(const EegSegment& x, double omega, std::size_t crop_offset,
                           TransformRecord* rec = nullptr);
EegSegment higher_freq_with(const EegSegment& x, double omega_prime, std::size_t crop_offset,
                            TransformRecord* rec = nullptr);

// Derived length helpers (shared with tests).
std::size_t lower_freq_length(double omega, std::size_t L);       // L' = floor(omega L)
std::size_t higher_freq_samples(double omega_prime, std::size_t L);  // m = floor(omega' L)
std::size_t higher_freq_tiles(double omega_prime, std::size_t L);    // >= ceil(1/omega')

struct SslSample {
    EegSegment segment;
    int klass = 0;  // 0 normal, 1 amplitude-abnormal, 2 frequency-abnormal
    TransformRecord record;
};

// For B input normals: B normals (class 0), B amplitude-abnormal (class 1)
// and B frequency-abnormal (class 2, floor(B/2) lower / ceil(B/2) higher),
// with class slots dropped when toggled off. fake_fraction p replaces
// floor(p * n_abnormal) simulated samples with unmodified normals that keep
// the abnormal class label. Order is shuffled. Per-sample streams are derived
// from (rng.seed, slot), so results are independent of generation schedule.
std::vector<SslSample> make_ssl_batch(const std::vector<EegSegment>& normals,
                                      const AugmentConfig& cfg, RandomSource& rng);

void write_audit_csv(const std::filesystem::path& path, const std::vector<SslSample>& samples);

}  // namespace eegad
