#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "eegad/common.hpp"

namespace eegad::nn {

// Dense tensor with contiguous storage; 4-D tensors are laid out NCHW.
template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s)
        : shape(std::move(s)), v(numel_of(shape), T(0)) {}
    Tensor(std::vector<std::size_t> s, std::vector<T> values)
        : shape(std::move(s)), v(std::move(values)) {
        if (v.size() != numel_of(shape)) throw ConfigError("tensor: value count != shape product");
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

    std::size_t numel() const { return v.size(); }
    std::size_t ndim() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    static Tensor zeros_like(const Tensor& o) { return Tensor(o.shape); }

    T& at2(std::size_t r, std::size_t c) { return v[r * shape[1] + c]; }
    const T& at2(std::size_t r, std::size_t c) const { return v[r * shape[1] + c]; }

    T& at4(std::size_t b, std::size_t c, std::size_t h, std::size_t w) {
        return v[((b * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    const T& at4(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
        return v[((b * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

}  // namespace eegad::nn
