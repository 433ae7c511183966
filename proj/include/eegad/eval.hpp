#pragma once

#include <vector>

#include "eegad/augment.hpp"
#include "eegad/detector.hpp"
#include "eegad/nn/train.hpp"
#include "eegad/segment.hpp"

namespace eegad {

enum class Setting { I, II };

struct SplitCfg {
    Setting setting = Setting::I;
    std::size_t n_runs = 5;      // Setting I: independent resampled runs
    std::size_t fold_count = 0;  // Setting II; 0 = n_patients when <= 10, else 5
};

struct SplitPlan {
    Setting setting = Setting::I;
    std::uint64_t seed = 0;
    struct Fold {
        std::vector<std::size_t> train_ids;
        std::vector<std::size_t> test_ids;
    };
    std::vector<Fold> folds;
};

// Uniform random sample of normals, equal in count to the abnormals, becomes
// test together with all abnormals; remaining normals train.
SplitPlan split_setting1(const Dataset& ds, RandomSource& rng);

// Patients partitioned into count-balanced folds (greedy largest-first);
// fold i tests its patients' normals plus all abnormals.
SplitPlan split_setting2(const Dataset& ds, std::size_t fold_count, RandomSource& rng);

// Mann-Whitney AUC with 0.5 tie credit, abnormal-higher convention.
double auc(const std::vector<double>& normal_scores,
           const std::vector<double>& abnormal_scores);

struct EerResult {
    double eer = 0.0;
    double threshold = 0.0;
};

// FPR(t) = fraction of normals >= t, FNR(t) = fraction of abnormals < t;
// the crossing of their piecewise-linear interpolation over candidate
// thresholds (midpoints of sorted unique scores). The reported rate is folded
// into [0, 0.5], which makes it invariant under swapping the two lists.
EerResult eer(const std::vector<double>& normal_scores,
              const std::vector<double>& abnormal_scores);

// F1 with abnormal as the positive class, predictions score >= threshold.
double f1_at_threshold(const std::vector<double>& normal_scores,
                       const std::vector<double>& abnormal_scores, double threshold);
double f1_at_eer(const std::vector<double>& normal_scores,
                 const std::vector<double>& abnormal_scores);

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};
std::vector<RocPoint> roc_points(const std::vector<double>& normal_scores,
                                 const std::vector<double>& abnormal_scores);

struct RunMetrics {
    std::size_t run = 0;
    std::size_t fold = 0;
    double auc = 0.0;
    double eer = 0.0;
    double eer_threshold = 0.0;
    double f1 = 0.0;
    double baseline_auc = 0.0;
    std::size_t n_normal = 0;
    std::size_t n_abnormal = 0;
    std::vector<ScoreRow> scores;
    std::vector<nn::EpochLog> train_log;
    std::vector<double> test_normal_scores;
    std::vector<double> test_abnormal_scores;
    std::shared_ptr<nn::TwoBranchModel<float>> model;
    std::shared_ptr<GaussianDetector> detector;
    float norm_min = 0.0f;
    float norm_max = 0.0f;
};

struct EvalReport {
    std::vector<RunMetrics> runs;

    double mean(double RunMetrics::* field) const;
    // Sample standard deviation (n - 1); reported as 0 for a single run.
    double stddev(double RunMetrics::* field) const;
};

struct ExperimentConfig {
    nn::ArchConfig arch;
    nn::TrainConfig train;
    AugmentConfig augment;
    SplitCfg split;
    std::uint64_t master_seed = 0;
    std::size_t detector_bins = 32;  // raw baseline pooling
};

// For each run/fold: split, fit normalization on the training normals, train
// the feature extractor, fit the Gaussian on training features, score the
// test set with both the learned detector and the raw baseline, and compute
// metrics. Deterministic given master_seed.
EvalReport run_experiment(const Dataset& dataset, const ExperimentConfig& cfg);

std::string report_csv(const EvalReport& report);
std::string roc_csv(const std::vector<RocPoint>& points);

}  // namespace eegad
