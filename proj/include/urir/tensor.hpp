#pragma once
// Dense row-major fp64 tensor with an optional gradient buffer. The model
// is tiny (d <= 64) so everything is plain double vectors.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "urir/errors.hpp"

namespace urir {

struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad; // empty until ensure_grad()

    Tensor() = default;

    static Tensor zeros(std::vector<int> dims) {
        Tensor t;
        int64_t total = 1;
        for (int d : dims) {
            if (d <= 0) throw ConfigError("tensor dimension must be positive, got " + std::to_string(d));
            total *= d;
        }
        t.shape = std::move(dims);
        t.values.assign(static_cast<size_t>(total), 0.0);
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(values.size()); }

    int rows() const { return shape.empty() ? 1 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(int i) { return values[static_cast<size_t>(i)]; }
    double at(int i) const { return values[static_cast<size_t>(i)]; }

    double& at(int i, int j) { return values[static_cast<size_t>(i) * cols() + j]; }
    double at(int i, int j) const { return values[static_cast<size_t>(i) * cols() + j]; }

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    }

    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    }

    bool finite() const {
        for (double v : values) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    double sum_squares() const {
        double s = 0.0;
        for (double v : values) s += v * v;
        return s;
    }
};

} // namespace urir
