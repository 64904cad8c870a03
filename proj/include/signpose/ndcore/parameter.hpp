// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "signpose/ndcore/random.hpp"
#include "signpose/ndcore/tensor.hpp"

namespace signpose::nd {

/// A trainable tensor and its accumulated gradient.
template <class T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;

    Parameter() = default;
    Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}

    void zero_grad() { grad.fill(T(0)); }
};

template <class T>
using ParameterRefs = std::vector<Parameter<T>*>;

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <class T>
void xavier_uniform(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-a, a));
}

template <class T>
std::size_t count_scalars(const ParameterRefs<T>& params) {
    std::size_t n = 0;
    for (const auto* p : params) n += p->value.size();
    return n;
}

template <class T>
void zero_grads(const ParameterRefs<T>& params) {
    for (auto* p : params) p->zero_grad();
}

}  // namespace signpose::nd
