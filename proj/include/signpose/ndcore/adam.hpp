// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "signpose/ndcore/parameter.hpp"

namespace signpose::nd {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment buffers, one pair per parameter, in parameter order.
template <class T>
struct AdamState {
    AdamHyper hyper;
    std::int64_t step = 0;
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;

    AdamState() = default;
    AdamState(const ParameterRefs<T>& params, AdamHyper h) : hyper(h) {
        for (const auto* p : params) {
            m.emplace_back(p->value.shape());
            v.emplace_back(p->value.shape());
        }
    }
};

/// One bias-corrected Adam update using the gradients currently stored in
/// `params`. `lr_scale` multiplies the base learning rate (for schedules).
template <class T>
void adam_step(const ParameterRefs<T>& params, AdamState<T>& state, double lr_scale = 1.0) {
    if (state.m.size() != params.size()) throw ShapeError("adam_step: state does not match parameter list");
    ++state.step;
    const auto& h = state.hyper;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
    const double lr = h.lr * lr_scale;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        auto& m = state.m[i];
        auto& v = state.v[i];
        p.value.require_same_shape(m, "adam_step");
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = static_cast<double>(p.grad[j]);
            const double mj = h.beta1 * static_cast<double>(m[j]) + (1.0 - h.beta1) * g;
            const double vj = h.beta2 * static_cast<double>(v[j]) + (1.0 - h.beta2) * g * g;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double mhat = mj / c1;
            const double vhat = vj / c2;
            p.value[j] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + h.eps));
        }
    }
}

}  // namespace signpose::nd
