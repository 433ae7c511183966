#include "eegad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace eegad {

namespace {

std::vector<std::size_t> ids_with_label(const Dataset& ds, bool normal) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.segments.size(); ++i) {
        if ((ds.segments[i].label == Label::Normal) == normal) out.push_back(i);
    }
    return out;
}

}  // namespace

SplitPlan split_setting1(const Dataset& ds, RandomSource& rng) {
    auto normals = ids_with_label(ds, true);
    auto abnormals = ids_with_label(ds, false);
    if (abnormals.empty() || abnormals.size() >= normals.size()) {
        throw DataError("split_setting1: need abnormal count in [1, normal count)");
    }
    rng.shuffle(normals);
    SplitPlan plan;
    plan.setting = Setting::I;
    plan.seed = rng.seed();
    SplitPlan::Fold fold;
    fold.test_ids.assign(normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(abnormals.size()));
    fold.train_ids.assign(normals.begin() + static_cast<std::ptrdiff_t>(abnormals.size()), normals.end());
    fold.test_ids.insert(fold.test_ids.end(), abnormals.begin(), abnormals.end());
    std::sort(fold.train_ids.begin(), fold.train_ids.end());
    std::sort(fold.test_ids.begin(), fold.test_ids.end());
    plan.folds.push_back(std::move(fold));
    return plan;
}

SplitPlan split_setting2(const Dataset& ds, std::size_t fold_count, RandomSource& rng) {
    auto normals = ids_with_label(ds, true);
    auto abnormals = ids_with_label(ds, false);

    std::map<std::string, std::vector<std::size_t>> by_patient;
    for (auto id : normals) by_patient[ds.segments[id].patient_id].push_back(id);
    if (fold_count == 0) fold_count = by_patient.size() <= 10 ? by_patient.size() : 5;
    if (fold_count < 2 || by_patient.size() < fold_count) {
        throw ConfigError("split_setting2: need distinct patient count >= fold_count >= 2");
    }

    // Shuffle for tie-breaking, then stable-sort by descending segment count
    // and assign greedily to the lightest fold.
    std::vector<std::pair<std::string, std::vector<std::size_t>>> patients(by_patient.begin(),
                                                                           by_patient.end());
    rng.shuffle(patients);
    std::stable_sort(patients.begin(), patients.end(),
                     [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });

    std::vector<std::vector<std::size_t>> groups(fold_count);
    std::vector<std::size_t> totals(fold_count, 0);
    for (const auto& [pid, ids] : patients) {
        const std::size_t g = static_cast<std::size_t>(
            std::min_element(totals.begin(), totals.end()) - totals.begin());
        groups[g].insert(groups[g].end(), ids.begin(), ids.end());
        totals[g] += ids.size();
    }

    SplitPlan plan;
    plan.setting = Setting::II;
    plan.seed = rng.seed();
    for (std::size_t g = 0; g < fold_count; ++g) {
        SplitPlan::Fold fold;
        fold.test_ids = groups[g];
        fold.test_ids.insert(fold.test_ids.end(), abnormals.begin(), abnormals.end());
        for (std::size_t h = 0; h < fold_count; ++h) {
            if (h == g) continue;
            fold.train_ids.insert(fold.train_ids.end(), groups[h].begin(), groups[h].end());
        }
        std::sort(fold.train_ids.begin(), fold.train_ids.end());
        std::sort(fold.test_ids.begin(), fold.test_ids.end());
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

double auc(const std::vector<double>& normal_scores,
           const std::vector<double>& abnormal_scores) {
    if (normal_scores.empty() || abnormal_scores.empty()) {
        throw DataError("auc: both score lists must be nonempty");
    }
    struct Entry {
        double score;
        bool abnormal;
    };
    std::vector<Entry> pool;
    pool.reserve(normal_scores.size() + abnormal_scores.size());
    for (double s : normal_scores) pool.push_back({s, false});
    for (double s : abnormal_scores) pool.push_back({s, true});
    std::sort(pool.begin(), pool.end(),
              [](const Entry& a, const Entry& b) { return a.score < b.score; });

    // Midranks give exactly 0.5 credit per tied pair.
    double rank_sum_abnormal = 0.0;
    std::size_t i = 0;
    while (i < pool.size()) {
        std::size_t j = i;
        while (j < pool.size() && pool[j].score == pool[i].score) ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (pool[k].abnormal) rank_sum_abnormal += midrank;
        }
        i = j;
    }
    const double na = static_cast<double>(abnormal_scores.size());
    const double nn = static_cast<double>(normal_scores.size());
    const double u = rank_sum_abnormal - na * (na + 1.0) / 2.0;
    return u / (na * nn);
}

namespace {

struct RatePoint {
    double t, fpr, fnr;
};

std::vector<RatePoint> rate_curve(const std::vector<double>& normal_scores,
                                  const std::vector<double>& abnormal_scores) {
    std::vector<double> uniq;
    uniq.reserve(normal_scores.size() + abnormal_scores.size());
    uniq.insert(uniq.end(), normal_scores.begin(), normal_scores.end());
    uniq.insert(uniq.end(), abnormal_scores.begin(), abnormal_scores.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

    std::vector<double> candidates;
    candidates.push_back(uniq.front() - 1.0);
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) {
        candidates.push_back((uniq[i] + uniq[i + 1]) / 2.0);
    }
    candidates.push_back(uniq.back() + 1.0);

    auto frac_ge = [](const std::vector<double>& v, double t) {
        std::size_t c = 0;
        for (double s : v) c += (s >= t);
        return static_cast<double>(c) / static_cast<double>(v.size());
    };
    std::vector<RatePoint> out;
    out.reserve(candidates.size());
    for (double t : candidates) {
        out.push_back({t, frac_ge(normal_scores, t), 1.0 - frac_ge(abnormal_scores, t)});
    }
    return out;
}

}  // namespace

EerResult eer(const std::vector<double>& normal_scores,
              const std::vector<double>& abnormal_scores) {
    if (normal_scores.empty() || abnormal_scores.empty()) {
        throw DataError("eer: both score lists must be nonempty");
    }
    const auto curve = rate_curve(normal_scores, abnormal_scores);
    // g = FPR - FNR runs from +1 to -1; find the sign change and interpolate.
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        const double g0 = curve[i].fpr - curve[i].fnr;
        const double g1 = curve[i + 1].fpr - curve[i + 1].fnr;
        if (g0 == 0.0) {
            const double e = curve[i].fpr;
            return {std::min(e, 1.0 - e), curve[i].t};
        }
        if (g0 > 0.0 && g1 <= 0.0) {
            const double lambda = g0 / (g0 - g1);
            const double e = curve[i].fpr + lambda * (curve[i + 1].fpr - curve[i].fpr);
            const double t = curve[i].t + lambda * (curve[i + 1].t - curve[i].t);
            return {std::min(e, 1.0 - e), t};
        }
    }
    const double e = curve.back().fpr;  // unreachable for nonempty inputs
    return {std::min(e, 1.0 - e), curve.back().t};
}

double f1_at_threshold(const std::vector<double>& normal_scores,
                       const std::vector<double>& abnormal_scores, double threshold) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (double s : abnormal_scores) (s >= threshold ? tp : fn)++;
    for (double s : normal_scores) fp += (s >= threshold);
    if (tp == 0) return 0.0;
    const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * p * r / (p + r);
}

double f1_at_eer(const std::vector<double>& normal_scores,
                 const std::vector<double>& abnormal_scores) {
    return f1_at_threshold(normal_scores, abnormal_scores,
                           eer(normal_scores, abnormal_scores).threshold);
}

std::vector<RocPoint> roc_points(const std::vector<double>& normal_scores,
                                 const std::vector<double>& abnormal_scores) {
    if (normal_scores.empty() || abnormal_scores.empty()) {
        throw DataError("roc_points: both score lists must be nonempty");
    }
    const auto curve = rate_curve(normal_scores, abnormal_scores);
    std::vector<RocPoint> out;
    out.reserve(curve.size());
    for (const auto& p : curve) out.push_back({p.t, p.fpr, 1.0 - p.fnr});
    return out;
}

double EvalReport::mean(double RunMetrics::* field) const {
    if (runs.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& r : runs) acc += r.*field;
    return acc / static_cast<double>(runs.size());
}

double EvalReport::stddev(double RunMetrics::* field) const {
    if (runs.size() < 2) return 0.0;
    const double m = mean(field);
    double acc = 0.0;
    for (const auto& r : runs) {
        const double d = r.*field - m;
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(runs.size() - 1));
}

namespace {

std::vector<std::vector<double>> extract_features_batched(nn::TwoBranchModel<float>& model,
                                                          const std::vector<EegSegment>& segs) {
    const std::size_t K = model.arch.in_channels, L = model.arch.in_length;
    const std::size_t chunk = 128;
    std::vector<std::vector<double>> out;
    out.reserve(segs.size());
    for (std::size_t base = 0; base < segs.size(); base += chunk) {
        const std::size_t n = std::min(chunk, segs.size() - base);
        nn::Tensor<float> batch({n, 1, K, L});
        for (std::size_t i = 0; i < n; ++i) {
            const auto& vals = segs[base + i].data.values();
            std::copy(vals.begin(), vals.end(), batch.v.begin() + static_cast<std::ptrdiff_t>(i * K * L));
        }
        auto feats = model.features_eval(batch);
        const std::size_t d = feats.dim(1);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> f(d);
            for (std::size_t j = 0; j < d; ++j) f[j] = static_cast<double>(feats.v[i * d + j]);
            out.push_back(std::move(f));
        }
    }
    return out;
}

}  // namespace

EvalReport run_experiment(const Dataset& dataset, const ExperimentConfig& cfg) {
    dataset.validate_uniform();
    RandomSource master(cfg.master_seed);

    SplitPlan plan;
    std::size_t n_rounds = 0;
    if (cfg.split.setting == Setting::I) {
        n_rounds = cfg.split.n_runs;
        if (n_rounds == 0) throw ConfigError("run_experiment: n_runs must be >= 1");
    } else {
        RandomSource split_rng = master.derive(0xB000);
        plan = split_setting2(dataset, cfg.split.fold_count, split_rng);
        n_rounds = plan.folds.size();
    }

    EvalReport report;
    for (std::size_t r = 0; r < n_rounds; ++r) {
        try {
            SplitPlan::Fold fold;
            if (cfg.split.setting == Setting::I) {
                RandomSource split_rng = master.derive(0xA000 + r);
                fold = split_setting1(dataset, split_rng).folds.front();
            } else {
                fold = plan.folds[r];
            }

            std::vector<EegSegment> train_segs;
            train_segs.reserve(fold.train_ids.size());
            for (auto id : fold.train_ids) train_segs.push_back(dataset.segments[id]);
            auto [lo, hi] = fit_normalization(train_segs);
            for (auto& s : train_segs) s = normalize(s, lo, hi);

            nn::TrainConfig tcfg = cfg.train;
            tcfg.seed = master.derive(0xC000 + r).seed();
            auto trained = nn::train<float>(train_segs, cfg.arch, tcfg, cfg.augment);

            auto train_feats = extract_features_batched(trained.model, train_segs);
            auto detector = GaussianDetector::fit(train_feats);

            Dataset train_ds;
            train_ds.segments = train_segs;
            auto baseline = fit_raw_baseline(train_ds, cfg.detector_bins);

            RunMetrics m;
            m.run = cfg.split.setting == Setting::I ? r : 0;
            m.fold = cfg.split.setting == Setting::II ? r : 0;
            m.train_log = trained.log;

            std::vector<EegSegment> test_segs;
            test_segs.reserve(fold.test_ids.size());
            std::vector<Label> test_labels;
            for (auto id : fold.test_ids) {
                test_segs.push_back(normalize(dataset.segments[id], lo, hi));
                test_labels.push_back(dataset.segments[id].label);
            }
            auto test_feats = extract_features_batched(trained.model, test_segs);

            std::vector<double> nrm, abn, nrm_base, abn_base;
            for (std::size_t i = 0; i < test_segs.size(); ++i) {
                const double s = detector.score(test_feats[i]);
                const double sb = baseline.score(raw_pooled_features(test_segs[i], cfg.detector_bins));
                ScoreRow row;
                row.segment_id = "seg" + std::to_string(fold.test_ids[i]);
                row.patient_id = test_segs[i].patient_id;
                row.true_label = test_labels[i];
                row.score = s;
                m.scores.push_back(row);
                if (test_labels[i] == Label::Normal) {
                    nrm.push_back(s);
                    nrm_base.push_back(sb);
                } else {
                    abn.push_back(s);
                    abn_base.push_back(sb);
                }
            }

            m.n_normal = nrm.size();
            m.n_abnormal = abn.size();
            m.auc = auc(nrm, abn);
            const auto e = eer(nrm, abn);
            m.eer = e.eer;
            m.eer_threshold = e.threshold;
            m.f1 = f1_at_threshold(nrm, abn, e.threshold);
            m.baseline_auc = auc(nrm_base, abn_base);
            m.test_normal_scores = std::move(nrm);
            m.test_abnormal_scores = std::move(abn);
            m.model = std::make_shared<nn::TwoBranchModel<float>>(std::move(trained.model));
            m.detector = std::make_shared<GaussianDetector>(std::move(detector));
            m.norm_min = lo;
            m.norm_max = hi;
            report.runs.push_back(std::move(m));
        } catch (const ConfigError& ex) {
            throw ConfigError("run " + std::to_string(r) + ": " + ex.what());
        } catch (const DivergenceError& ex) {
            throw DivergenceError("run " + std::to_string(r) + ": " + ex.what());
        } catch (const std::exception& ex) {
            throw DataError("run " + std::to_string(r) + ": " + ex.what());
        }
    }
    return report;
}

std::string report_csv(const EvalReport& report) {
    std::string out = "run,fold,auc,eer,eer_threshold,f1,baseline_auc,n_normal,n_abnormal\n";
    char buf[256];
    for (const auto& r : report.runs) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%zu\n", r.run,
                      r.fold, r.auc, r.eer, r.eer_threshold, r.f1, r.baseline_auc, r.n_normal,
                      r.n_abnormal);
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "mean,,%.6f,%.6f,%.6f,%.6f,%.6f,,\n",
                  report.mean(&RunMetrics::auc), report.mean(&RunMetrics::eer),
                  report.mean(&RunMetrics::eer_threshold), report.mean(&RunMetrics::f1),
                  report.mean(&RunMetrics::baseline_auc));
    out += buf;
    std::snprintf(buf, sizeof(buf), "std,,%.6f,%.6f,%.6f,%.6f,%.6f,,\n",
                  report.stddev(&RunMetrics::auc), report.stddev(&RunMetrics::eer),
                  report.stddev(&RunMetrics::eer_threshold), report.stddev(&RunMetrics::f1),
                  report.stddev(&RunMetrics::baseline_auc));
    out += buf;
    if (report.runs.size() == 1) {
        out += "# single run: std is 0 by convention\n";
    }
    return out;
}

std::string roc_csv(const std::vector<RocPoint>& points) {
    std::string out = "threshold,fpr,tpr\n";
    char buf[128];
    for (const auto& p : points) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.6f,%.6f\n", p.threshold, p.fpr, p.tpr);
        out += buf;
    }
    return out;
}

}  // namespace eegad
