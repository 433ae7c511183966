#include "eegad/augment.hpp"

#include <omp.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace eegad {

void AugmentConfig::validate(std::size_t L) const {
    if (!(amp_lo > 1.0 && amp_lo < amp_hi)) {
        throw ConfigError("augment: amplitude range requires 1 < amp_lo < amp_hi");
    }
    const std::size_t w_hi = window_hi_or(L);
    if (!(window_lo > 1 && window_lo <= w_hi && w_hi <= L)) {
        throw ConfigError("augment: window range requires 1 < window_lo <= window_hi <= L");
    }
    if (!(lowfreq_lo > 1.0 && lowfreq_lo < lowfreq_hi)) {
        throw ConfigError("augment: lower-frequency range requires 1 < lo < hi");
    }
    if (!(highfreq_lo > 0.0 && highfreq_lo < highfreq_hi && highfreq_hi < 1.0)) {
        throw ConfigError("augment: higher-frequency range requires 0 < lo < hi < 1");
    }
    if (fake_fraction < 0.0 || fake_fraction > 1.0) {
        throw ConfigError("augment: fake_fraction must be in [0, 1]");
    }
    if (freq_class_enabled &&
        higher_freq_samples(highfreq_lo, L) < 2) {
        throw ConfigError("augment: floor(highfreq_lo * L) must be >= 2");
    }
}

const char* transform_kind_name(TransformKind k) {
    switch (k) {
        case TransformKind::None: return "none";
        case TransformKind::Amplitude: return "amplitude";
        case TransformKind::LowerFreq: return "lower_freq";
        case TransformKind::HigherFreq: return "higher_freq";
        case TransformKind::Combined: return "combined";
    }
    return "unknown";
}

std::vector<float> resample_linear(const float* src, std::size_t n_in, std::size_t n_out) {
    std::vector<float> out(n_out);
    if (n_out == 1) {
        out[0] = src[0];
        return out;
    }
    const double step = static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1);
    for (std::size_t j = 0; j < n_out; ++j) {
        const double pos = static_cast<double>(j) * step;
        auto i0 = static_cast<std::size_t>(pos);
        if (i0 >= n_in - 1) {
            out[j] = src[n_in - 1];
            continue;
        }
        const double frac = pos - static_cast<double>(i0);
        out[j] = static_cast<float>((1.0 - frac) * src[i0] + frac * src[i0 + 1]);
    }
    return out;
}

std::size_t lower_freq_length(double omega, std::size_t L) {
    return static_cast<std::size_t>(std::floor(omega * static_cast<double>(L)));
}

std::size_t higher_freq_samples(double omega_prime, std::size_t L) {
    return static_cast<std::size_t>(std::floor(omega_prime * static_cast<double>(L)));
}

std::size_t higher_freq_tiles(double omega_prime, std::size_t L) {
    const std::size_t m = higher_freq_samples(omega_prime, L);
    if (m == 0) throw ConfigError("higher-frequency transform: floor(omega' * L) is zero");
    auto tiles = static_cast<std::size_t>(std::ceil(1.0 / omega_prime));
    // floor(omega' L) * ceil(1/omega') can fall short of L (e.g. omega'=0.34,
    // L=10 gives 3*3=9); extend minimally so an L-column crop always exists.
    if (m * tiles < L) tiles = (L + m - 1) / m;
    return tiles;
}

EegSegment amplitude_with(const EegSegment& x, double alpha, std::size_t start, std::size_t w) {
    EegSegment out = x;
    out.label = Label::SimAmplitude;
    const auto a = static_cast<float>(alpha);
    for (std::size_t r = 0; r < out.channels(); ++r) {
        float* row = out.data.row(r);
        for (std::size_t c = start; c < start + w; ++c) row[c] *= a;
    }
    return out;
}

EegSegment lower_freq_with(const EegSegment& x, double omega, std::size_t crop_offset,
                           TransformRecord* rec) {
    const std::size_t L = x.length();
    if (L < 2) throw DataError("lower-frequency transform requires L >= 2");
    const std::size_t Lp = lower_freq_length(omega, L);
    if (Lp < L) throw ConfigError("lower-frequency transform: omega < 1");
    if (crop_offset > Lp - L) throw ConfigError("lower-frequency transform: bad crop offset");

    EegSegment out = x;
    out.label = Label::SimFrequency;
    for (std::size_t r = 0; r < x.channels(); ++r) {
        const auto up = resample_linear(x.data.row(r), L, Lp);
        std::copy(up.begin() + static_cast<std::ptrdiff_t>(crop_offset),
                  up.begin() + static_cast<std::ptrdiff_t>(crop_offset + L), out.data.row(r));
    }
    if (rec) {
        rec->kind = TransformKind::LowerFreq;
        rec->omega = omega;
        rec->l_prime = Lp;
        rec->crop_offset = crop_offset;
    }
    return out;
}

EegSegment higher_freq_with(const EegSegment& x, double omega_prime, std::size_t crop_offset,
                            TransformRecord* rec) {
    const std::size_t L = x.length();
    const std::size_t m = higher_freq_samples(omega_prime, L);
    if (m < 2) throw ConfigError("higher-frequency transform: floor(omega' * L) < 2");
    const std::size_t tiles = higher_freq_tiles(omega_prime, L);
    const std::size_t Lpp = m * tiles;
    if (crop_offset > Lpp - L) throw ConfigError("higher-frequency transform: bad crop offset");

    EegSegment out = x;
    out.label = Label::SimFrequency;
    std::vector<float> tiled(Lpp);
    for (std::size_t r = 0; r < x.channels(); ++r) {
        const auto down = resample_linear(x.data.row(r), L, m);
        for (std::size_t t = 0; t < tiles; ++t) {
            std::copy(down.begin(), down.end(), tiled.begin() + static_cast<std::ptrdiff_t>(t * m));
        }
        std::copy(tiled.begin() + static_cast<std::ptrdiff_t>(crop_offset),
                  tiled.begin() + static_cast<std::ptrdiff_t>(crop_offset + L), out.data.row(r));
    }
    if (rec) {
        rec->kind = TransformKind::HigherFreq;
        rec->omega = omega_prime;
        rec->l_prime = Lpp;
        rec->crop_offset = crop_offset;
    }
    return out;
}

std::pair<EegSegment, TransformRecord> make_amplitude_abnormal(const EegSegment& x,
                                                               const AugmentConfig& cfg,
                                                               RandomSource& rng) {
    const std::size_t L = x.length();
    if (cfg.window_lo > L) throw ConfigError("amplitude transform: window_lo > L");
    const std::size_t w_hi = std::min(cfg.window_hi_or(L), L);
    const double alpha = rng.uniform(cfg.amp_lo, cfg.amp_hi);
    const auto w = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(cfg.window_lo), static_cast<std::int64_t>(w_hi)));
    const auto start =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(L - w)));

    TransformRecord rec;
    rec.kind = TransformKind::Amplitude;
    rec.alpha = alpha;
    rec.window_start = start;
    rec.window_width = w;
    return {amplitude_with(x, alpha, start, w), rec};
}

std::pair<EegSegment, TransformRecord> make_lower_freq_abnormal(const EegSegment& x,
                                                                const AugmentConfig& cfg,
                                                                RandomSource& rng) {
    const std::size_t L = x.length();
    const double omega = rng.uniform(cfg.lowfreq_lo, cfg.lowfreq_hi);
    const std::size_t Lp = lower_freq_length(omega, L);
    std::size_t offset = 0;
    if (Lp > L) {
        offset = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(Lp - L)));
    }
    TransformRecord rec;
    EegSegment out = lower_freq_with(x, omega, offset, &rec);
    return {std::move(out), rec};
}

std::pair<EegSegment, TransformRecord> make_higher_freq_abnormal(const EegSegment& x,
                                                                 const AugmentConfig& cfg,
                                                                 RandomSource& rng) {
    const std::size_t L = x.length();
    const double omega_prime = rng.uniform(cfg.highfreq_lo, cfg.highfreq_hi);
    const std::size_t m = higher_freq_samples(omega_prime, L);
    if (m < 2) throw ConfigError("higher-frequency transform: floor(omega' * L) < 2");
    const std::size_t Lpp = m * higher_freq_tiles(omega_prime, L);
    std::size_t offset = 0;
    if (Lpp > L) {
        offset = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(Lpp - L)));
    }
    TransformRecord rec;
    EegSegment out = higher_freq_with(x, omega_prime, offset, &rec);
    return {std::move(out), rec};
}

std::pair<EegSegment, TransformRecord> make_combined_abnormal(const EegSegment& x,
                                                              const AugmentConfig& cfg,
                                                              RandomSource& rng) {
    if (!cfg.combined_mode) {
        throw ConfigError("combined transform requires combined_mode");
    }
    const bool lower = rng.uniform() < 0.5;
    auto [warped, freq_rec] = lower ? make_lower_freq_abnormal(x, cfg, rng)
                                    : make_higher_freq_abnormal(x, cfg, rng);
    auto [out, amp_rec] = make_amplitude_abnormal(warped, cfg, rng);
    TransformRecord rec;
    rec.kind = TransformKind::Combined;
    rec.alpha = amp_rec.alpha;
    rec.omega = freq_rec.omega;
    rec.window_start = amp_rec.window_start;
    rec.window_width = amp_rec.window_width;
    rec.l_prime = freq_rec.l_prime;
    rec.crop_offset = freq_rec.crop_offset;
    out.label = Label::SimFrequency;  // carries both; the batch class is authoritative
    return {std::move(out), rec};
}

std::vector<SslSample> make_ssl_batch(const std::vector<EegSegment>& normals,
                                      const AugmentConfig& cfg, RandomSource& rng) {
    if (normals.empty()) throw DataError("make_ssl_batch: empty input");
    if (!cfg.amp_class_enabled && !cfg.freq_class_enabled) {
        throw ConfigError("make_ssl_batch: at least one anomaly class must be enabled");
    }
    const std::size_t B = normals.size();
    cfg.validate(normals.front().length());

    struct Slot {
        int klass;
        std::size_t source;
        bool lower;  // frequency slots only
    };
    std::vector<Slot> slots;
    slots.reserve(3 * B);
    for (std::size_t i = 0; i < B; ++i) slots.push_back({0, i, false});
    if (cfg.amp_class_enabled) {
        for (std::size_t i = 0; i < B; ++i) slots.push_back({1, i, false});
    }
    if (cfg.freq_class_enabled) {
        // floor(B/2) lower, ceil(B/2) higher: the odd sample goes to higher.
        for (std::size_t i = 0; i < B; ++i) slots.push_back({2, i, i < B / 2});
    }

    std::vector<SslSample> out(slots.size());
    const auto n_slots = static_cast<std::int64_t>(slots.size());
    std::exception_ptr err;
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < n_slots; ++s) {
        try {
            const Slot& slot = slots[static_cast<std::size_t>(s)];
            auto& sample = out[static_cast<std::size_t>(s)];
            sample.klass = slot.klass;
            const EegSegment& src = normals[slot.source];
            if (slot.klass == 0) {
                sample.segment = src;
            } else {
                RandomSource sub = rng.derive(static_cast<std::uint64_t>(s));
                if (cfg.combined_mode) {
                    auto [seg, rec] = make_combined_abnormal(src, cfg, sub);
                    sample.segment = std::move(seg);
                    sample.record = rec;
                } else if (slot.klass == 1) {
                    auto [seg, rec] = make_amplitude_abnormal(src, cfg, sub);
                    sample.segment = std::move(seg);
                    sample.record = rec;
                } else if (slot.lower) {
                    auto [seg, rec] = make_lower_freq_abnormal(src, cfg, sub);
                    sample.segment = std::move(seg);
                    sample.record = rec;
                } else {
                    auto [seg, rec] = make_higher_freq_abnormal(src, cfg, sub);
                    sample.segment = std::move(seg);
                    sample.record = rec;
                }
            }
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);

    // Fake-abnormal injection: unmodified normals keeping the abnormal class.
    const std::size_t n_abnormal = slots.size() - B;
    const auto n_fake = static_cast<std::size_t>(cfg.fake_fraction * static_cast<double>(n_abnormal));
    if (n_fake > 0) {
        RandomSource fake_rng = rng.derive(static_cast<std::uint64_t>(slots.size()) + 1);
        std::vector<std::size_t> abnormal_idx;
        abnormal_idx.reserve(n_abnormal);
        for (std::size_t s = B; s < slots.size(); ++s) abnormal_idx.push_back(s);
        fake_rng.shuffle(abnormal_idx);
        for (std::size_t f = 0; f < n_fake; ++f) {
            const std::size_t s = abnormal_idx[f];
            std::size_t repl = slots[s].source;
            if (B > 1) {
                // A normal segment distinct from the slot's own source.
                auto j = static_cast<std::size_t>(
                    fake_rng.uniform_int(0, static_cast<std::int64_t>(B) - 2));
                if (j >= slots[s].source) ++j;
                repl = j;
            }
            out[s].segment = normals[repl];
            out[s].record = TransformRecord{};  // kind None marks the fake
        }
    }

    RandomSource order_rng = rng.derive(static_cast<std::uint64_t>(slots.size()) + 2);
    order_rng.shuffle(out);
    return out;
}

void write_audit_csv(const std::filesystem::path& path, const std::vector<SslSample>& samples) {
    std::ostringstream out;
    out << "index,class,kind,alpha,omega,window_start,window_width,l_prime,crop_offset\n";
    char buf[64];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& r = samples[i].record;
        std::snprintf(buf, sizeof(buf), "%.6g,%.6g", r.alpha, r.omega);
        out << i << ',' << samples[i].klass << ',' << transform_kind_name(r.kind) << ',' << buf
            << ',' << r.window_start << ',' << r.window_width << ',' << r.l_prime << ','
            << r.crop_offset << '\n';
    }
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path.string());
    f << out.str();
}

}  // namespace eegad
