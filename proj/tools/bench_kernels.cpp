// Times the OpenMP kernels against the serial reference implementations on
// the shapes the training loop actually runs.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "eegad/common.hpp"
#include "eegad/nn/kernels.hpp"

using eegad::RandomSource;
using namespace eegad::nn::kern;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::vector<float> random_vec(std::size_t n, RandomSource& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

template <typename F>
double time_best(F&& fn, int reps) {
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_s();
        fn();
        best = std::min(best, now_s() - t0);
    }
    return best;
}

void bench_conv(const char* name, std::size_t B, std::size_t C, std::size_t H, std::size_t W,
                std::size_t OC, std::size_t KH, std::size_t KW, std::size_t SW, std::size_t PW,
                int reps) {
    const auto d = ConvDims::make(B, C, H, W, OC, KH, KW, 1, SW, 0, PW);
    RandomSource rng(7);
    auto in = random_vec(B * C * H * W, rng);
    auto w = random_vec(OC * C * KH * KW, rng);
    auto bias = random_vec(OC, rng);
    auto padded = pad_input(in.data(), d);
    std::vector<float> out(B * OC * d.OH * d.OW), out_ref(out.size());

    const double t_omp = time_best(
        [&] { conv2d_forward(padded.data(), w.data(), bias.data(), out.data(), d); }, reps);
    const double t_ref = time_best(
        [&] { ref::conv2d_forward(padded.data(), w.data(), bias.data(), out_ref.data(), d); },
        reps);

    float max_diff = 0.0f;
    for (std::size_t i = 0; i < out.size(); ++i) {
        max_diff = std::max(max_diff, std::abs(out[i] - out_ref[i]));
    }
    const double macs = static_cast<double>(B) * OC * d.OH * d.OW * C * KH * KW;
    std::printf("%-28s omp %8.3f ms (%6.2f GMAC/s)   serial %8.3f ms (%6.2f GMAC/s)   "
                "speedup %.2fx   max|diff| %.2e\n",
                name, t_omp * 1e3, macs / t_omp * 1e-9, t_ref * 1e3, macs / t_ref * 1e-9,
                t_ref / t_omp, static_cast<double>(max_diff));
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("EEGAD_THREADS")) {
        const int n = std::atoi(threads);
        if (n > 0) omp_set_num_threads(n);
    }
    const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
    std::printf("threads: %d, reps: %d\n", omp_get_max_threads(), reps);

    // Shapes from the tiny-preset training batch (B = 192 samples, K = 4,
    // L = 256) and the full-preset stem.
    bench_conv("stem 1->16 1x7 /2", 192, 1, 4, 256, 16, 1, 7, 2, 3, reps);
    bench_conv("stage1 16->16 1x7", 192, 16, 4, 128, 16, 1, 7, 1, 3, reps);
    bench_conv("stage2 16->32 1x7 /2", 192, 16, 4, 128, 32, 1, 7, 2, 3, reps);
    bench_conv("stage2 32->32 1x7", 192, 32, 4, 64, 32, 1, 7, 1, 3, reps);
    bench_conv("branch 16->32 4x7", 192, 16, 4, 128, 32, 4, 7, 1, 3, reps);
    bench_conv("full stem 1->64 1x7 /2", 64, 1, 19, 768, 64, 1, 7, 2, 3, reps);
    return 0;
}
