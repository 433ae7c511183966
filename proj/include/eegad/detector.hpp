#pragma once

#include <filesystem>
#include <vector>

#include "eegad/segment.hpp"

namespace eegad {

struct EpsPolicy {
    double eps_abs = 1e-6;
    double eps_rel = 1e-3;  // of trace(Sigma)/d
};

// In-place lower Cholesky factor of the n x n SPD matrix a (row-major);
// throws DataError when the matrix is not positive definite.
std::vector<double> cholesky_lower(const std::vector<double>& a, std::size_t n);

// Multivariate Gaussian over feature vectors, scored by Mahalanobis distance
// via triangular solves against the stored factor of Sigma + eps I.
class GaussianDetector {
public:
    // features: n rows of dimension d. diagonal keeps only per-dimension
    // variances (the raw-signal baseline uses this).
    static GaussianDetector fit(const std::vector<std::vector<double>>& features,
                                const EpsPolicy& policy = {}, bool diagonal = false);

    double score(const std::vector<double>& f) const;

    std::size_t dim() const { return d_; }
    double epsilon() const { return eps_; }
    const std::vector<double>& mean() const { return mu_; }
    const std::vector<double>& covariance() const { return sigma_; }

    void save(const std::filesystem::path& path) const;
    static GaussianDetector load(const std::filesystem::path& path);

    // Builds a detector directly from moments (tests and deserialization).
    static GaussianDetector from_moments(std::vector<double> mu, std::vector<double> sigma,
                                         double eps);

private:
    std::size_t d_ = 0;
    std::vector<double> mu_;
    std::vector<double> sigma_;  // d x d row-major
    double eps_ = 0.0;
    std::vector<double> chol_;  // lower factor of sigma + eps I
};

// Average-pools each channel down to `bins` values and flattens to K * bins.
std::vector<double> raw_pooled_features(const EegSegment& seg, std::size_t bins = 32);

// Diagonal-covariance Gaussian over pooled raw signals; the comparison anchor
// for the learned detector.
GaussianDetector fit_raw_baseline(const Dataset& train, std::size_t bins = 32,
                                  const EpsPolicy& policy = {});

struct ScoreRow {
    std::string segment_id;
    std::string patient_id;
    Label true_label = Label::Normal;
    double score = 0.0;
};

std::string scores_csv(const std::vector<ScoreRow>& rows);

}  // namespace eegad
