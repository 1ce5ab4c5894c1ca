// Copyright (c) 2026 the instructmt authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace instructmt {

// Dense row-major tensor of doubles. The trainer is double precision
// throughout so gradient checks are meaningful.
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
        v.assign(static_cast<size_t>(numel_of(shape)), 0.0);
    }

    static int64_t numel_of(const std::vector<int64_t>& s) {
        int64_t n = 1;
        for (int64_t d : s) n *= d;
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(v.size()); }
    int64_t rows() const { return shape.empty() ? 0 : shape[0]; }
    int64_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double* row(int64_t i) { return v.data() + i * cols(); }
    const double* row(int64_t i) const { return v.data() + i * cols(); }

    double& at(int64_t i, int64_t j) { return v[static_cast<size_t>(i * cols() + j)]; }
    double at(int64_t i, int64_t j) const { return v[static_cast<size_t>(i * cols() + j)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

using TensorMap = std::map<std::string, Tensor>;

}  // namespace instructmt
