// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "signpose/ndcore/random.hpp"
#include "signpose/ndcore/tensor.hpp"

namespace signpose::nd {

/// Per-position validity flags; 1 = real frame, 0 = padding.
using Mask = std::vector<std::uint8_t>;

template <class T>
T sigmoid(T x) {
    // Split by sign so exp never overflows.
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

// ---------------------------------------------------------------------------
// Linear

/// y = x W + b, x viewed as [N, D_in].
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (w.rank() != 2 || b.rank() != 1 || b.dim(0) != w.dim(1) || x.shape().back() != w.dim(0))
        throw ShapeError("linear: x " + shape_string(x.shape()) + ", W " + shape_string(w.shape()) + ", b " +
                         shape_string(b.shape()));
    Tensor<T> y = matmul(x, w);
    as_matrix(y).rowwise() += as_row(b);
    return y;
}

/// Accumulates dW, db and returns dx.
template <class T>
Tensor<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>& dw,
                          Tensor<T>& db) {
    matmul_tn_into(x, dy, dw, Accumulate::Yes);
    add_column_sums(dy, db);
    Tensor<T> dx(x.shape());
    matmul_nt_into(dy, w, dx);
    return dx;
}

// ---------------------------------------------------------------------------
// Positional encoding

/// Sinusoidal table: PE(p, 2i) = sin(p / 10000^(2i/d)), PE(p, 2i+1) = cos(same).
template <class T>
Tensor<T> positional_encoding(std::size_t length, std::size_t d_model) {
    if (d_model == 0 || d_model % 2 != 0)
        throw ShapeError("positional_encoding: d_model must be even, got " + std::to_string(d_model));
    Tensor<T> pe({length, d_model});
    for (std::size_t p = 0; p < length; ++p) {
        for (std::size_t i = 0; i < d_model / 2; ++i) {
            const double angle = static_cast<double>(p) /
                                 std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_model));
            pe.at(p, 2 * i) = static_cast<T>(std::sin(angle));
            pe.at(p, 2 * i + 1) = static_cast<T>(std::cos(angle));
        }
    }
    return pe;
}

// ---------------------------------------------------------------------------
// Dropout

/// Inverted dropout. `keep` holds the per-element multiplier (0 or 1/(1-rate))
/// so the backward pass is a plain elementwise product.
template <class T>
struct DropoutResult {
    Tensor<T> output;
    std::vector<T> keep;  // empty when dropout was the identity
};

template <class T>
DropoutResult<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
    if (!training || rate == 0.0) return {x, {}};
    DropoutResult<T> r{x, std::vector<T>(x.size())};
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.keep[i] = rng.bernoulli(rate) ? T(0) : scale;
        r.output[i] *= r.keep[i];
    }
    return r;
}

template <class T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const std::vector<T>& keep) {
    if (keep.empty()) return dy;
    Tensor<T> dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= keep[i];
    return dx;
}

// ---------------------------------------------------------------------------
// Masked mean pooling

/// seq [B, T, D] (or [T, D], treated as B = 1), mask B*T flags -> [B, D].
template <class T>
Tensor<T> masked_mean_pool(const Tensor<T>& seq, const Mask& mask) {
    const bool batched = seq.rank() == 3;
    if (!batched && seq.rank() != 2) throw ShapeError("masked_mean_pool: expected [B,T,D] or [T,D]");
    const std::size_t b = batched ? seq.dim(0) : 1;
    const std::size_t t = batched ? seq.dim(1) : seq.dim(0);
    const std::size_t d = seq.shape().back();
    if (mask.size() != b * t) throw ShapeError("masked_mean_pool: mask length does not match sequence");
    Tensor<T> out(batched ? Shape{b, d} : Shape{d});
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t n = 0;
        for (std::size_t j = 0; j < t; ++j) {
            if (!mask[i * t + j]) continue;
            ++n;
            const T* src = seq.data() + (i * t + j) * d;
            for (std::size_t k = 0; k < d; ++k) out[i * d + k] += src[k];
        }
        if (n == 0) throw DegenerateInputError("masked_mean_pool: row " + std::to_string(i) + " has no valid frame");
        for (std::size_t k = 0; k < d; ++k) out[i * d + k] /= static_cast<T>(n);
    }
    return out;
}

template <class T>
Tensor<T> masked_mean_pool_backward(const Tensor<T>& dpooled, const Mask& mask, const Shape& seq_shape) {
    const bool batched = seq_shape.size() == 3;
    const std::size_t b = batched ? seq_shape[0] : 1;
    const std::size_t t = batched ? seq_shape[1] : seq_shape[0];
    const std::size_t d = seq_shape.back();
    Tensor<T> dseq(seq_shape);
    for (std::size_t i = 0; i < b; ++i) {
        std::size_t n = 0;
        for (std::size_t j = 0; j < t; ++j) n += mask[i * t + j] ? 1 : 0;
        const T inv = T(1) / static_cast<T>(n);
        for (std::size_t j = 0; j < t; ++j) {
            if (!mask[i * t + j]) continue;
            T* dst = dseq.data() + (i * t + j) * d;
            for (std::size_t k = 0; k < d; ++k) dst[k] = dpooled[i * d + k] * inv;
        }
    }
    return dseq;
}

// ---------------------------------------------------------------------------
// Softmax and cross-entropy

/// Row-wise softmax of [N, C], max-subtracted.
template <class T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
    Tensor<T> p = logits;
    const std::size_t c = logits.shape().back();
    const std::size_t n = logits.size() / c;
    for (std::size_t i = 0; i < n; ++i) {
        T* r = p.data() + i * c;
        const T m = *std::max_element(r, r + c);
        T s = 0;
        for (std::size_t j = 0; j < c; ++j) s += (r[j] = std::exp(r[j] - m));
        for (std::size_t j = 0; j < c; ++j) r[j] /= s;
    }
    return p;
}

template <class T>
struct LossAndGrad {
    T loss;
    Tensor<T> grad;
};

/// Mean negative log-likelihood of the true class; grad = (softmax - onehot) / N.
template <class T>
LossAndGrad<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ShapeError("softmax_cross_entropy: logits must be [N, C]");
    const std::size_t n = logits.dim(0), c = logits.dim(1);
    if (labels.size() != n) throw ShapeError("softmax_cross_entropy: label count does not match batch");
    LossAndGrad<T> r{T(0), softmax_rows(logits)};
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(y) + " outside [0, " +
                                    std::to_string(c) + ")");
        const T* row = logits.data() + i * c;
        const T m = *std::max_element(row, row + c);
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += std::exp(static_cast<double>(row[j] - m));
        loss += std::log(s) - static_cast<double>(row[y] - m);
        r.grad.at(i, static_cast<std::size_t>(y)) -= T(1);
    }
    for (auto& g : r.grad.values()) g /= static_cast<T>(n);
    r.loss = static_cast<T>(loss / static_cast<double>(n));
    return r;
}

}  // namespace signpose::nd
