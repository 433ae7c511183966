#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace eegad {

// Error taxonomy. The CLI maps these onto exit codes:
//   ConfigError -> 2, DataError -> 3, DivergenceError -> 4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

std::uint64_t splitmix64(std::uint64_t x);

// ----------------------------------------------------------------------------
// RandomSource
//
// Deterministic random stream with a fixed, documented algorithm so the same
// seed and call sequence produce the same values on every platform:
//   engine        mt19937_64 (bit-exact per the C++ standard)
//   uniform       (x >> 11) * 2^-53                          -> [0, 1)
//   uniform_int   modulo rejection sampling on raw engine output
//   gaussian      Box-Muller (trigonometric form), no cached spare
//   derive        child seed = splitmix64(seed ^ golden * (salt + 1))
// <random> distribution adapters are deliberately not used; they are
// implementation-defined and would break cross-platform reproducibility.
//
// Instances are single-owner: hand them off, never share across threads.
// ----------------------------------------------------------------------------
class RandomSource {
public:
    static constexpr const char* kAlgorithm = "mt19937_64/u53/box-muller/v1";

    explicit RandomSource(std::uint64_t seed) : seed_(seed), eng_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform real in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform real in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    // Standard normal; consumes exactly two engine draws.
    double gaussian();
    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    // Independent child stream; derivation depends only on (seed, salt),
    // never on engine state, so forks are schedule-independent.
    RandomSource derive(std::uint64_t salt) const {
        return RandomSource(splitmix64(seed_ ^ (0x9E3779B97F4A7C15ULL * (salt + 1))));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
};

// ----------------------------------------------------------------------------
// Mat: dense row-major matrix of scalars.
// ----------------------------------------------------------------------------
template <typename T>
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return v_.empty(); }

    T& at(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
    const T& at(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }

    T* row(std::size_t r) { return v_.data() + r * cols_; }
    const T* row(std::size_t r) const { return v_.data() + r * cols_; }

    std::vector<T>& values() { return v_; }
    const std::vector<T>& values() const { return v_; }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && v_ == o.v_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> v_;
};

using MatF = Mat<float>;
using MatD = Mat<double>;

}  // namespace eegad
