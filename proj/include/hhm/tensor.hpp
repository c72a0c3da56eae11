// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "hhm/common.hpp"

namespace hhm {

/// Row-major dense tensor. Double precision is used by the numerical tests,
/// single precision by training runs.
template <typename T>
struct Tensor {
    std::vector<int> dims;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> d, T fill = T(0)) : dims(std::move(d)), data(count(dims), fill) {}

    static std::size_t count(const std::vector<int>& d) {
        return std::accumulate(d.begin(), d.end(), std::size_t{1},
                               [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
    }

    std::size_t numel() const { return data.size(); }
    int rank() const { return static_cast<int>(dims.size()); }
    int dim(int i) const { return dims[static_cast<std::size_t>(i)]; }
    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }
    bool valid() const { return count(dims) == data.size(); }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.dims = dims;
        out.data.assign(data.begin(), data.end());
        return out;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::string dims_string(const std::vector<int>& dims);

}  // namespace hhm
