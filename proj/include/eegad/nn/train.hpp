#pragma once

#include <chrono>
#include <cmath>

#include "eegad/augment.hpp"
#include "eegad/nn/model.hpp"

namespace eegad::nn {

struct TrainConfig {
    double learning_rate = 0.0001;
    double weight_decay = 0.00003;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t max_epochs = 300;
    std::size_t batch_normals = 64;  // B; the SSL batch holds up to 3B samples
    std::uint64_t seed = 0;
    std::size_t patience = 0;  // early stop on training loss; 0 = off

    void validate() const {
        if (learning_rate <= 0) throw ConfigError("train: learning_rate must be positive");
        if (weight_decay < 0) throw ConfigError("train: weight_decay must be >= 0");
        if (max_epochs == 0 || max_epochs > 300) {
            throw ConfigError("train: max_epochs must be in [1, 300]");
        }
        if (batch_normals == 0) throw ConfigError("train: batch_normals must be positive");
    }
};

struct EpochLog {
    std::size_t epoch = 0;
    double loss = 0.0;
    double accuracy = 0.0;
    double wall_time_s = 0.0;
};

// Adam with bias correction plus decoupled weight decay applied before the
// moment update; batch-norm scale/shift carry no_decay and are skipped.
template <typename T>
void adam_step(std::vector<Param<T>>& params, const TrainConfig& cfg, std::int64_t t) {
    if (t < 1) throw ConfigError("adam_step: step count must be >= 1");
    const T lr = static_cast<T>(cfg.learning_rate);
    const T wd = static_cast<T>(cfg.weight_decay);
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T eps = static_cast<T>(cfg.eps);
    const T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(t)));
    const T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(t)));

    for (auto& p : params) {
        if (p.grad.v.empty()) p.grad = Tensor<T>::zeros_like(p.value);
        if (p.m.v.empty()) {
            p.m = Tensor<T>::zeros_like(p.value);
            p.v2 = Tensor<T>::zeros_like(p.value);
        }
        const bool decay = wd > T(0) && !p.no_decay;
        for (std::size_t i = 0; i < p.value.numel(); ++i) {
            if (decay) p.value.v[i] -= lr * wd * p.value.v[i];
            const T g = p.grad.v[i];
            p.m.v[i] = b1 * p.m.v[i] + (T(1) - b1) * g;
            p.v2.v[i] = b2 * p.v2.v[i] + (T(1) - b2) * g * g;
            const T mhat = p.m.v[i] / bc1;
            const T vhat = p.v2.v[i] / bc2;
            p.value.v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template <typename T>
std::size_t argmax_row(const Tensor<T>& logits, std::size_t row) {
    const std::size_t C = logits.dim(1);
    std::size_t best = 0;
    for (std::size_t c = 1; c < C; ++c) {
        if (logits.v[row * C + c] > logits.v[row * C + best]) best = c;
    }
    return best;
}

template <typename T>
struct TrainOutput {
    TwoBranchModel<T> model;
    std::vector<EpochLog> log;
};

// Per epoch: shuffle the normals, form SSL batches, run
// forward / loss / backward / adam_step. The trailing partial batch is kept.
// Seeds derive from cfg.seed alone, so two runs with the same seed produce
// identical loss sequences.
template <typename T>
TrainOutput<T> train(const std::vector<EegSegment>& normals, const ArchConfig& arch,
                     const TrainConfig& cfg, const AugmentConfig& acfg,
                     std::vector<SslSample>* audit_epoch0 = nullptr) {
    cfg.validate();
    if (normals.empty()) throw DataError("train: no training segments");
    for (const auto& s : normals) {
        if (s.label != Label::Normal) {
            throw DataError("train: training set contains non-normal labels");
        }
    }

    RandomSource master(cfg.seed);
    RandomSource init_rng = master.derive(1);
    TrainOutput<T> out{TwoBranchModel<T>::build(arch, init_rng), {}};
    auto& model = out.model;

    std::vector<std::size_t> order(normals.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        RandomSource epoch_rng = master.derive(1000 + epoch);
        epoch_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t n_samples = 0, n_correct = 0;
        std::size_t batch_index = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_normals, ++batch_index) {
            const std::size_t bsz = std::min(cfg.batch_normals, order.size() - pos);
            std::vector<EegSegment> batch_normals;
            batch_normals.reserve(bsz);
            for (std::size_t i = 0; i < bsz; ++i) batch_normals.push_back(normals[order[pos + i]]);

            RandomSource batch_rng = epoch_rng.derive(batch_index + 1);
            auto samples = make_ssl_batch(batch_normals, acfg, batch_rng);
            if (epoch == 0 && audit_epoch0) {
                audit_epoch0->insert(audit_epoch0->end(), samples.begin(), samples.end());
            }

            const std::size_t n = samples.size();
            const std::size_t K = arch.in_channels, L = arch.in_length;
            Tensor<T> input({n, 1, K, L});
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                labels[i] = samples[i].klass;
                const auto& vals = samples[i].segment.data.values();
                for (std::size_t j = 0; j < K * L; ++j) {
                    input.v[i * K * L + j] = static_cast<T>(vals[j]);
                }
            }

            auto fwd = model.forward(input, true);
            auto loss = cross_entropy(fwd.logits, labels);
            const double loss_val = static_cast<double>(loss->val.v[0]);
            if (!std::isfinite(loss_val)) {
                throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                      " batch " + std::to_string(batch_index) +
                                      "; last finite epoch-mean loss " +
                                      std::to_string(n_samples ? loss_sum / n_samples : 0.0));
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (argmax_row(fwd.logits->val, i) == static_cast<std::size_t>(labels[i])) {
                    ++n_correct;
                }
            }
            loss_sum += loss_val * static_cast<double>(n);
            n_samples += n;

            model.zero_grads();
            backward(loss);
            model.accumulate_leaf_grads(fwd);
            adam_step(model.params, cfg, ++model.adam_t);
        }

        const auto t1 = std::chrono::steady_clock::now();
        EpochLog el;
        el.epoch = epoch;
        el.loss = loss_sum / static_cast<double>(n_samples);
        el.accuracy = static_cast<double>(n_correct) / static_cast<double>(n_samples);
        el.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
        out.log.push_back(el);

        if (cfg.patience > 0) {
            if (el.loss < best_loss - 1e-12) {
                best_loss = el.loss;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }
    }
    return out;
}

inline std::string train_log_csv(const std::vector<EpochLog>& log) {
    std::string out = "epoch,loss,accuracy,wall_time_s\n";
    char buf[128];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.3f\n", e.epoch, e.loss, e.accuracy,
                      e.wall_time_s);
        out += buf;
    }
    return out;
}

}  // namespace eegad::nn
