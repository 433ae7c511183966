#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "eegad/cli.hpp"

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("EEGAD_THREADS")) {
        const int n = std::atoi(threads);
        if (n > 0) omp_set_num_threads(n);
    }

    CLI::App app{"Self-supervised EEG anomaly detection pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--set", overrides, "Override a config field, e.g. train.max_epochs=20");
        sub->add_option("--seed", seed, "Override the master seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* synth = app.add_subcommand("synth", "Generate synthetic recordings and a manifest");
    auto* train = app.add_subcommand("train", "Train the feature extractor on normal segments");
    auto* eval = app.add_subcommand("eval", "Run the full experiment and report metrics");
    auto* ablate = app.add_subcommand("ablate", "AUC for every anomaly-class/architecture toggle");
    auto* sweep = app.add_subcommand("sweep", "AUC across the hyper-parameter grids");
    for (auto* sub : {synth, train, eval, ablate, sweep}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg =
            eegad::RunConfig::load(config_path, overrides, seed_set ? &seed : nullptr);
        if (synth->parsed()) return eegad::cmd_synth(cfg);
        if (train->parsed()) return eegad::cmd_train(cfg);
        if (eval->parsed()) return eegad::cmd_eval(cfg);
        if (ablate->parsed()) return eegad::cmd_ablate(cfg);
        if (sweep->parsed()) return eegad::cmd_sweep(cfg);
    } catch (const eegad::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const eegad::DivergenceError& e) {
        std::fprintf(stderr, "divergence: %s\n", e.what());
        return 4;
    } catch (const eegad::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
