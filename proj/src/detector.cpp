#include "eegad/detector.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "eegad/eseg_io.hpp"

namespace eegad {

std::vector<double> cholesky_lower(const std::vector<double>& a, std::size_t n) {
    std::vector<double> L(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
            if (i == j) {
                if (s <= 0.0) throw DataError("cholesky: matrix not positive definite");
                L[i * n + i] = std::sqrt(s);
            } else {
                L[i * n + j] = s / L[j * n + j];
            }
        }
    }
    return L;
}

GaussianDetector GaussianDetector::fit(const std::vector<std::vector<double>>& features,
                                       const EpsPolicy& policy, bool diagonal) {
    const std::size_t n = features.size();
    if (n < 2) throw DataError("fit_gaussian: need at least 2 feature vectors");
    const std::size_t d = features.front().size();
    for (const auto& f : features) {
        if (f.size() != d) throw DataError("fit_gaussian: inconsistent feature dimension");
        for (double v : f) {
            if (!std::isfinite(v)) throw DataError("fit_gaussian: non-finite feature value");
        }
    }

    std::vector<double> mu(d, 0.0);
    for (const auto& f : features) {
        for (std::size_t j = 0; j < d; ++j) mu[j] += f[j];
    }
    for (auto& m : mu) m /= static_cast<double>(n);

    // Unbiased sample covariance, divisor n - 1.
    std::vector<double> sigma(d * d, 0.0);
    if (diagonal) {
        for (const auto& f : features) {
            for (std::size_t j = 0; j < d; ++j) {
                const double c = f[j] - mu[j];
                sigma[j * d + j] += c * c;
            }
        }
        for (std::size_t j = 0; j < d; ++j) sigma[j * d + j] /= static_cast<double>(n - 1);
    } else {
        std::vector<double> centered(d);
        for (const auto& f : features) {
            for (std::size_t j = 0; j < d; ++j) centered[j] = f[j] - mu[j];
            for (std::size_t i = 0; i < d; ++i) {
                const double ci = centered[i];
                double* row = sigma.data() + i * d;
                for (std::size_t j = i; j < d; ++j) row[j] += ci * centered[j];
            }
        }
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) {
                const double v = sigma[i * d + j] / static_cast<double>(n - 1);
                sigma[i * d + j] = v;
                sigma[j * d + i] = v;
            }
        }
    }

    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += sigma[i * d + i];
    const double eps = std::max(policy.eps_abs, policy.eps_rel * trace / static_cast<double>(d));
    return from_moments(std::move(mu), std::move(sigma), eps);
}

GaussianDetector GaussianDetector::from_moments(std::vector<double> mu, std::vector<double> sigma,
                                                double eps) {
    GaussianDetector det;
    det.d_ = mu.size();
    if (sigma.size() != det.d_ * det.d_) throw DataError("gaussian: sigma size != d*d");
    det.mu_ = std::move(mu);
    det.sigma_ = std::move(sigma);
    det.eps_ = eps;
    std::vector<double> reg = det.sigma_;
    for (std::size_t i = 0; i < det.d_; ++i) reg[i * det.d_ + i] += eps;
    det.chol_ = cholesky_lower(reg, det.d_);
    return det;
}

double GaussianDetector::score(const std::vector<double>& f) const {
    if (f.size() != d_) throw DataError("score: feature length mismatch");
    // Solve L y = f - mu; the squared distance is |y|^2.
    std::vector<double> y(d_);
    for (std::size_t i = 0; i < d_; ++i) {
        double s = f[i] - mu_[i];
        for (std::size_t k = 0; k < i; ++k) s -= chol_[i * d_ + k] * y[k];
        y[i] = s / chol_[i * d_ + i];
    }
    double sq = 0.0;
    for (double v : y) sq += v * v;
    return std::sqrt(sq);
}

// GDT1: magic | d u32 | eps f64 | mu f64[d] | sigma f64[d*d], little-endian.
void GaussianDetector::save(const std::filesystem::path& path) const {
    std::string out;
    out.append("GDT1", 4);
    auto put = [&out](const void* p, std::size_t sz) {
        out.append(static_cast<const char*>(p), sz);
    };
    const auto d32 = static_cast<std::uint32_t>(d_);
    put(&d32, 4);
    put(&eps_, 8);
    for (double v : mu_) put(&v, 8);
    for (double v : sigma_) put(&v, 8);
    atomic_write_bytes(path, out);
}

GaussianDetector GaussianDetector::load(const std::filesystem::path& path) {
    std::ifstream fi(path, std::ios::binary);
    if (!fi) throw DataError("cannot open detector file: " + path.string());
    std::ostringstream ss;
    ss << fi.rdbuf();
    const std::string in = ss.str();
    if (in.size() < 16 || in.compare(0, 4, "GDT1") != 0) throw DataError("GDT1: bad magic");
    std::size_t off = 4;
    auto get = [&](void* p, std::size_t sz) {
        if (off + sz > in.size()) throw DataError("GDT1: truncated file");
        std::memcpy(p, in.data() + off, sz);
        off += sz;
    };
    std::uint32_t d32 = 0;
    get(&d32, 4);
    double eps = 0.0;
    get(&eps, 8);
    std::vector<double> mu(d32), sigma(static_cast<std::size_t>(d32) * d32);
    for (auto& v : mu) get(&v, 8);
    for (auto& v : sigma) get(&v, 8);
    return from_moments(std::move(mu), std::move(sigma), eps);
}

std::vector<double> raw_pooled_features(const EegSegment& seg, std::size_t bins) {
    const std::size_t K = seg.channels(), L = seg.length();
    const std::size_t eff_bins = std::min(bins, L);
    std::vector<double> out(K * eff_bins, 0.0);
    for (std::size_t r = 0; r < K; ++r) {
        const float* row = seg.data.row(r);
        for (std::size_t b = 0; b < eff_bins; ++b) {
            const std::size_t lo = b * L / eff_bins;
            const std::size_t hi = (b + 1) * L / eff_bins;
            double acc = 0.0;
            for (std::size_t i = lo; i < hi; ++i) acc += row[i];
            out[r * eff_bins + b] = acc / static_cast<double>(hi - lo);
        }
    }
    return out;
}

GaussianDetector fit_raw_baseline(const Dataset& train, std::size_t bins,
                                  const EpsPolicy& policy) {
    if (train.segments.empty()) throw DataError("fit_raw_baseline: empty training set");
    std::vector<std::vector<double>> feats;
    feats.reserve(train.segments.size());
    for (const auto& s : train.segments) feats.push_back(raw_pooled_features(s, bins));
    return GaussianDetector::fit(feats, policy, /*diagonal=*/true);
}

std::string scores_csv(const std::vector<ScoreRow>& rows) {
    std::string out = "segment_id,patient_id,true_label,score\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.9g", r.score);
        out += r.segment_id + "," + r.patient_id + "," + label_name(r.true_label) + "," + buf +
               "\n";
    }
    return out;
}

}  // namespace eegad
