#pragma once
// Learnable parameters, initialization, the Adam optimizer and a
// central-difference gradient checker.
//
// Initialization: weight matrices are Xavier-uniform in
// +-sqrt(6/(fan_in+fan_out)), biases zero, embeddings uniform in
// +-0.1/sqrt(d). Deterministic per seed, with a sub-stream per tensor.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "urir/errors.hpp"
#include "urir/rng.hpp"
#include "urir/tensor.hpp"

namespace urir {

struct ModelDims {
    int d = 0;   // embedding width
    int d_h = 0; // attention MLP hidden width
    int num_users = 0;
    int num_entities = 0;
    int num_relations = 0;
};

struct ModelParams {
    int d = 0;
    int d_h = 0;
    Tensor user_emb;     // [num_users x d]
    Tensor entity_emb;   // [num_entities x d]
    Tensor relation_emb; // [num_relations x d]
    Tensor W1, b1;       // [d_h x 3d], [d_h]
    Tensor W2, b2;       // [d_h x d_h], [d_h]
    Tensor W3, b3;       // [1 x d_h], [1]
    Tensor rnn_W, rnn_H, rnn_U; // [d x d] each

    // Fixed iteration order; checkpoints and Adam state rely on it.
    template <typename F>
    void for_each(F&& f) {
        f("user_emb", user_emb);
        f("entity_emb", entity_emb);
        f("relation_emb", relation_emb);
        f("W1", W1);
        f("b1", b1);
        f("W2", W2);
        f("b2", b2);
        f("W3", W3);
        f("b3", b3);
        f("rnn_W", rnn_W);
        f("rnn_H", rnn_H);
        f("rnn_U", rnn_U);
    }

    template <typename F>
    void for_each(F&& f) const {
        const_cast<ModelParams*>(this)->for_each(
            [&](const char* name, Tensor& t) { f(name, static_cast<const Tensor&>(t)); });
    }

    static constexpr int kTensorCount = 12;

    int64_t total_values() const {
        int64_t n = 0;
        for_each([&](const char*, const Tensor& t) { n += t.numel(); });
        return n;
    }

    void zero_all_grads() {
        for_each([](const char*, Tensor& t) {
            t.ensure_grad();
            t.zero_grad();
        });
    }

    double sum_squares() const {
        double s = 0.0;
        for_each([&](const char*, const Tensor& t) { s += t.sum_squares(); });
        return s;
    }

    bool finite() const {
        bool ok = true;
        for_each([&](const char*, const Tensor& t) { ok = ok && t.finite(); });
        return ok;
    }
};

namespace detail {

inline void fill_uniform(Tensor& t, double lo, double hi, uint64_t seed) {
    Rng rng(seed);
    for (double& v : t.values) v = rng.uniform(lo, hi);
}

inline void fill_xavier(Tensor& t, int fan_in, int fan_out, uint64_t seed) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    fill_uniform(t, -limit, limit, seed);
}

} // namespace detail

inline ModelParams init_params(const ModelDims& dims, uint64_t seed) {
    if (dims.d <= 0 || dims.d_h <= 0 || dims.num_users <= 0 || dims.num_entities <= 0 ||
        dims.num_relations <= 0) {
        throw ConfigError("init_params: all dimensions and counts must be positive");
    }
    const int d = dims.d, dh = dims.d_h;
    ModelParams p;
    p.d = d;
    p.d_h = dh;
    p.user_emb = Tensor::zeros({dims.num_users, d});
    p.entity_emb = Tensor::zeros({dims.num_entities, d});
    p.relation_emb = Tensor::zeros({dims.num_relations, d});
    p.W1 = Tensor::zeros({dh, 3 * d});
    p.b1 = Tensor::zeros({dh});
    p.W2 = Tensor::zeros({dh, dh});
    p.b2 = Tensor::zeros({dh});
    p.W3 = Tensor::zeros({1, dh});
    p.b3 = Tensor::zeros({1});
    p.rnn_W = Tensor::zeros({d, d});
    p.rnn_H = Tensor::zeros({d, d});
    p.rnn_U = Tensor::zeros({d, d});

    const double emb_limit = 0.1 / std::sqrt(static_cast<double>(d));
    int idx = 0;
    p.for_each([&](const char* name, Tensor& t) {
        const uint64_t s = sub_seed(seed, Stream::Init, static_cast<uint64_t>(idx++));
        const std::string n(name);
        if (n == "user_emb" || n == "entity_emb" || n == "relation_emb") {
            detail::fill_uniform(t, -emb_limit, emb_limit, s);
        } else if (n[0] == 'b') {
            // biases stay zero
        } else {
            detail::fill_xavier(t, t.cols(), t.rows(), s);
        }
    });
    return p;
}

// ---- Adam -------------------------------------------------------------

struct AdamState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t step_count = 0;
    std::vector<std::vector<double>> m, v; // per tensor, ModelParams order

    static AdamState create(const ModelParams& p, double lr) {
        AdamState s;
        s.learning_rate = lr;
        p.for_each([&](const char*, const Tensor& t) {
            s.m.emplace_back(t.values.size(), 0.0);
            s.v.emplace_back(t.values.size(), 0.0);
        });
        return s;
    }
};

// Standard Adam with bias correction. Missing grad buffers count as zero.
// Any non-finite gradient aborts the step before touching parameters;
// gradients are cleared after a successful update.
inline void adam_step(ModelParams& p, AdamState& s) {
    p.for_each([&](const char* name, Tensor& t) {
        for (double g : t.grad) {
            if (!std::isfinite(g)) {
                throw NumericError(std::string("adam_step: non-finite gradient in ") + name);
            }
        }
    });
    s.step_count += 1;
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
    size_t idx = 0;
    p.for_each([&](const char*, Tensor& t) {
        auto& m = s.m[idx];
        auto& v = s.v[idx];
        ++idx;
        for (size_t i = 0; i < t.values.size(); ++i) {
            const double g = i < t.grad.size() ? t.grad[i] : 0.0;
            m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
            v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
            t.values[i] -= s.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + s.eps);
        }
        t.zero_grad();
    });
}

// ---- gradient check -----------------------------------------------------
//
// `run(true)` must compute the loss and populate parameter grads;
// `run(false)` must compute the loss only. Returns the max elementwise
// relative error |analytic - numeric| / max(|analytic| + |numeric|, 1e-8).
inline double finite_diff_check(ModelParams& params, const std::function<double(bool)>& run,
                                double eps = 1e-5) {
    params.zero_all_grads();
    run(true);
    std::vector<std::vector<double>> analytic;
    params.for_each([&](const char*, Tensor& t) { analytic.push_back(t.grad); });

    double max_rel = 0.0;
    size_t ti = 0;
    params.for_each([&](const char*, Tensor& t) {
        for (size_t i = 0; i < t.values.size(); ++i) {
            const double keep = t.values[i];
            t.values[i] = keep + eps;
            const double lp = run(false);
            t.values[i] = keep - eps;
            const double lm = run(false);
            t.values[i] = keep;
            const double numeric = (lp - lm) / (2.0 * eps);
            const double a = analytic[ti][i];
            const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-8);
            max_rel = std::max(max_rel, rel);
        }
        ++ti;
    });
    return max_rel;
}

} // namespace urir
