// Copyright (C) 2026 The hhm Authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "hhm/common.hpp"
#include "hhm/tensor.hpp"

namespace hhm::test {

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
Tensor<T> random_tensor(std::vector<int> dims, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<T> t(std::move(dims));
    for (auto& v : t.data) v = static_cast<T>(uniform(rng, lo, hi));
    return t;
}

/// Fresh directory under the build tree's temp area, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("hhm_test_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

private:
    std::filesystem::path path_;
};

}  // namespace hhm::test
