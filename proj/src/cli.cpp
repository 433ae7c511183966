#include "eegad/cli.hpp"

#include <cmath>
#include <cstdio>

#include "eegad/eseg_io.hpp"

namespace eegad {

namespace fs = std::filesystem;

namespace {

std::string patient_name(std::int64_t idx) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%03lld", static_cast<long long>(idx));
    return buf;
}

ExperimentConfig experiment_config(const RunConfig& cfg) {
    ExperimentConfig ec;
    ec.arch = cfg.make_arch();
    ec.train = cfg.train;
    ec.augment = cfg.augment;
    ec.split = cfg.split;
    ec.master_seed = cfg.seed;
    ec.detector_bins = cfg.detector_bins;
    return ec;
}

Dataset load_config_dataset(const RunConfig& cfg) {
    Dataset ds = load_dataset(fs::path(cfg.data_dir) / "manifest.csv", cfg.synth.segment_duration_s);
    if (ds.segments.empty()) throw DataError("no segments in " + cfg.data_dir);
    const auto& front = ds.segments.front();
    if (front.channels() != cfg.synth.base.channels || front.length() != cfg.segment_length()) {
        throw DataError("dataset shape does not match config synth settings");
    }
    return ds;
}

}  // namespace

int cmd_synth(const RunConfig& cfg) {
    cfg.synth.base.validate();
    cfg.synth.anomaly.validate(cfg.synth.segment_duration_s);
    fs::create_directories(cfg.data_dir);

    std::vector<ManifestRow> manifest;
    std::uint64_t rec_index = 0;
    std::size_t seg_counter = 0;

    auto emit = [&](Label label, std::size_t count, bool inject) {
        std::size_t emitted = 0;
        while (emitted < count) {
            // Per-recording stream: seed = master seed + recording index.
            const std::uint64_t seed = cfg.seed + rec_index;
            RandomSource rng(seed);
            const std::string pid = patient_name(
                rng.uniform_int(0, static_cast<std::int64_t>(cfg.synth.n_patients) - 1));

            SynthConfig sc = cfg.synth.base;
            if (inject) sc.duration_s = cfg.synth.segment_duration_s;
            MatF rec = gen_normal_recording(sc, rng);
            if (inject) {
                rec = inject_eval_anomaly(rec, sc.sample_rate, cfg.synth.anomaly, rng);
            }
            auto segs = segment_recording(rec, sc.sample_rate, cfg.synth.segment_duration_s);
            for (auto& seg : segs) {
                if (emitted >= count) break;
                seg.label = label;
                seg.patient_id = pid;
                char name[32];
                std::snprintf(name, sizeof(name), "seg_%06zu.eseg", seg_counter++);
                write_eseg(fs::path(cfg.data_dir) / name, seg);
                manifest.push_back({name, label, pid, seed});
                ++emitted;
            }
            ++rec_index;
        }
    };

    emit(Label::Normal, cfg.synth.n_normal, false);
    emit(Label::Abnormal, cfg.synth.n_abnormal, true);
    write_manifest(fs::path(cfg.data_dir) / "manifest.csv", manifest);
    std::printf("synth: wrote %zu segments (%zu normal, %zu abnormal) to %s\n", manifest.size(),
                cfg.synth.n_normal, cfg.synth.n_abnormal, cfg.data_dir.c_str());
    return 0;
}

int cmd_train(const RunConfig& cfg) {
    Dataset ds = load_config_dataset(cfg);
    std::vector<EegSegment> normals;
    for (const auto& s : ds.segments) {
        if (s.label == Label::Normal) normals.push_back(s);
    }
    if (normals.empty()) throw DataError("cmd_train: no normal segments in data dir");

    auto [lo, hi] = fit_normalization(normals);
    for (auto& s : normals) s = normalize(s, lo, hi);

    nn::ArchConfig arch = cfg.make_arch();
    nn::TrainConfig tcfg = cfg.train;
    tcfg.seed = cfg.seed;

    std::vector<SslSample> audit;
    auto out = nn::train<float>(normals, arch, tcfg, cfg.augment,
                                cfg.train_audit ? &audit : nullptr);

    fs::create_directories(cfg.out_dir);
    out.model.save(fs::path(cfg.out_dir) / cfg.model_file,
                   {{"norm.min", {lo}}, {"norm.max", {hi}}});
    atomic_write_text(fs::path(cfg.out_dir) / "train_log.csv", nn::train_log_csv(out.log));
    if (cfg.train_audit) {
        write_audit_csv(fs::path(cfg.out_dir) / "ssl_audit.csv", audit);
    }
    std::printf("train: %zu epochs, final loss %.6f acc %.4f, model written to %s/%s\n",
                out.log.size(), out.log.empty() ? 0.0 : out.log.back().loss,
                out.log.empty() ? 0.0 : out.log.back().accuracy, cfg.out_dir.c_str(),
                cfg.model_file.c_str());
    return 0;
}

int cmd_eval(const RunConfig& cfg) {
    Dataset ds = load_config_dataset(cfg);
    const auto report = run_experiment(ds, experiment_config(cfg));

    fs::create_directories(cfg.out_dir);
    atomic_write_text(fs::path(cfg.out_dir) / "report.csv", report_csv(report));
    const auto& first = report.runs.front();
    atomic_write_text(fs::path(cfg.out_dir) / "roc.csv",
                      roc_csv(roc_points(first.test_normal_scores, first.test_abnormal_scores)));
    for (const auto& r : report.runs) {
        char name[48];
        std::snprintf(name, sizeof(name), "scores_run%zu.csv",
                      cfg.split.setting == Setting::I ? r.run : r.fold);
        atomic_write_text(fs::path(cfg.out_dir) / name, scores_csv(r.scores));
    }
    first.model->save(fs::path(cfg.out_dir) / cfg.model_file,
                      {{"norm.min", {first.norm_min}}, {"norm.max", {first.norm_max}}});
    first.detector->save(fs::path(cfg.out_dir) / cfg.detector_file);
    std::printf("eval: %zu runs, mean auc %.4f (baseline %.4f), eer %.4f, f1 %.4f\n",
                report.runs.size(), report.mean(&RunMetrics::auc),
                report.mean(&RunMetrics::baseline_auc), report.mean(&RunMetrics::eer),
                report.mean(&RunMetrics::f1));
    return 0;
}

int cmd_ablate(const RunConfig& cfg) {
    Dataset ds = load_config_dataset(cfg);

    struct Row {
        bool amp, freq, branch;
        std::size_t kernel;
        double auc_mean, auc_std, eer_mean, f1_mean, baseline_mean;
    };
    std::vector<Row> rows;
    for (int amp = 1; amp >= 0; --amp) {
        for (int freq = 1; freq >= 0; --freq) {
            if (!amp && !freq) continue;  // training undefined with no anomaly class
            for (int branch = 1; branch >= 0; --branch) {
                for (std::size_t kernel : {std::size_t{7}, std::size_t{3}}) {
                    ExperimentConfig ec = experiment_config(cfg);
                    ec.augment.amp_class_enabled = amp != 0;
                    ec.augment.freq_class_enabled = freq != 0;
                    ec.arch.branch_enabled = branch != 0;
                    ec.arch.main_kernel = kernel;
                    const auto report = run_experiment(ds, ec);
                    rows.push_back({amp != 0, freq != 0, branch != 0, kernel,
                                    report.mean(&RunMetrics::auc),
                                    report.stddev(&RunMetrics::auc),
                                    report.mean(&RunMetrics::eer), report.mean(&RunMetrics::f1),
                                    report.mean(&RunMetrics::baseline_auc)});
                    std::printf("ablate: amp=%d freq=%d branch=%d kernel=%zu -> auc %.4f\n", amp,
                                freq, branch, kernel, rows.back().auc_mean);
                }
            }
        }
    }

    std::string out = "# configs=" + std::to_string(rows.size()) + "\n";
    out += "amp_class,freq_class,two_branch,kernel,auc_mean,auc_std,eer_mean,f1_mean,"
           "baseline_auc_mean\n";
    char buf[192];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%d,%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.amp ? 1 : 0,
                      r.freq ? 1 : 0, r.branch ? 1 : 0, r.kernel, r.auc_mean, r.auc_std,
                      r.eer_mean, r.f1_mean, r.baseline_mean);
        out += buf;
    }
    fs::create_directories(cfg.out_dir);
    atomic_write_text(fs::path(cfg.out_dir) / "ablation.csv", out);
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    Dataset ds = load_config_dataset(cfg);
    const std::size_t L = cfg.segment_length();

    struct Row {
        std::string sweep;
        double value;
        double auc_mean, eer_mean, f1_mean, baseline_mean;
    };
    std::vector<Row> rows;
    auto run_point = [&](const std::string& sweep, double value, const AugmentConfig& acfg) {
        ExperimentConfig ec = experiment_config(cfg);
        ec.augment = acfg;
        const auto report = run_experiment(ds, ec);
        rows.push_back({sweep, value, report.mean(&RunMetrics::auc),
                        report.mean(&RunMetrics::eer), report.mean(&RunMetrics::f1),
                        report.mean(&RunMetrics::baseline_auc)});
        std::printf("sweep: %s=%g -> auc %.4f (baseline %.4f)\n", sweep.c_str(), value,
                    rows.back().auc_mean, rows.back().baseline_mean);
    };

    for (double v : {3.0, 4.0, 5.0, 6.0, 7.0}) {
        AugmentConfig a = cfg.augment;
        a.amp_hi = v;
        run_point("amp_hi", v, a);
    }
    for (std::size_t num = 1; num <= 5; ++num) {
        AugmentConfig a = cfg.augment;
        a.window_hi = num * L / 5;
        run_point("window_hi", static_cast<double>(a.window_hi), a);
    }
    for (double v : {3.0, 4.0, 5.0, 6.0, 7.0}) {
        AugmentConfig a = cfg.augment;
        a.lowfreq_hi = v;
        run_point("lowfreq_hi", v, a);
    }
    for (double v : {0.4, 0.5, 0.6, 0.7, 0.8}) {
        AugmentConfig a = cfg.augment;
        a.highfreq_hi = v;
        run_point("highfreq_hi", v, a);
    }
    for (double v : {0.0, 0.05, 0.10, 0.15, 0.20}) {
        AugmentConfig a = cfg.augment;
        a.fake_fraction = v;
        run_point("fake_fraction", v, a);
    }

    std::string out = "sweep,value,auc_mean,eer_mean,f1_mean,baseline_auc_mean\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6f,%.6f,%.6f,%.6f\n", r.sweep.c_str(), r.value,
                      r.auc_mean, r.eer_mean, r.f1_mean, r.baseline_mean);
        out += buf;
    }
    fs::create_directories(cfg.out_dir);
    atomic_write_text(fs::path(cfg.out_dir) / "sweep.csv", out);
    return 0;
}

}  // namespace eegad
