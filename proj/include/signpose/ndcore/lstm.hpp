// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "signpose/ndcore/ops.hpp"
#include "signpose/ndcore/parameter.hpp"

namespace signpose::nd {

/// LSTM weights with gate blocks laid out as [input, forget, cell, output]
/// along the 4H axis. Two bias vectors, as in the common cuDNN layout.
template <class T>
struct LstmWeights {
    Parameter<T> w_ih;  // [D, 4H]
    Parameter<T> w_hh;  // [H, 4H]
    Parameter<T> b_ih;  // [4H]
    Parameter<T> b_hh;  // [4H]

    LstmWeights() = default;
    LstmWeights(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim)
        : w_ih(prefix + ".w_ih", {input_dim, 4 * hidden_dim}),
          w_hh(prefix + ".w_hh", {hidden_dim, 4 * hidden_dim}),
          b_ih(prefix + ".b_ih", {4 * hidden_dim}),
          b_hh(prefix + ".b_hh", {4 * hidden_dim}) {}

    std::size_t input_dim() const { return w_ih.value.dim(0); }
    std::size_t hidden_dim() const { return w_hh.value.dim(0); }

    ParameterRefs<T> parameters() { return {&w_ih, &w_hh, &b_ih, &b_hh}; }

    void init(Rng& rng) {
        xavier_uniform(w_ih.value, input_dim(), 4 * hidden_dim(), rng);
        xavier_uniform(w_hh.value, hidden_dim(), 4 * hidden_dim(), rng);
        b_ih.value.fill(T(0));
        b_hh.value.fill(T(0));
    }

    static std::size_t scalar_count(std::size_t input_dim, std::size_t hidden_dim) {
        return 4 * (input_dim * hidden_dim + hidden_dim * hidden_dim + 2 * hidden_dim);
    }
};

/// Everything the backward pass needs from one batched step.
template <class T>
struct LstmStepCache {
    Tensor<T> h_prev;  // [B, H]
    Tensor<T> c_prev;  // [B, H]
    Tensor<T> gates;   // [B, 4H], post-activation
    Tensor<T> tanh_c;  // [B, H]
    Mask active;       // B flags; inactive rows carry state through unchanged
};

template <class T>
struct LstmState {
    Tensor<T> h;
    Tensor<T> c;
};

namespace detail {

/// One step from a precomputed input projection x W_ih + b_ih + b_hh.
template <class T>
LstmState<T> lstm_step_from_projection(const Tensor<T>& xproj, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                                       const LstmWeights<T>& w, const Mask& active, LstmStepCache<T>* cache) {
    const std::size_t b = h_prev.dim(0), h = h_prev.dim(1);
    Tensor<T> gates = xproj;
    matmul_into(h_prev, w.w_hh.value, gates, Accumulate::Yes);
    LstmState<T> out{Tensor<T>({b, h}), Tensor<T>({b, h})};
    Tensor<T> tanh_c({b, h});
    for (std::size_t r = 0; r < b; ++r) {
        T* g = gates.data() + r * 4 * h;
        for (std::size_t k = 0; k < h; ++k) {
            g[k] = sigmoid(g[k]);
            g[h + k] = sigmoid(g[h + k]);
            g[2 * h + k] = std::tanh(g[2 * h + k]);
            g[3 * h + k] = sigmoid(g[3 * h + k]);
        }
        const T* hp = h_prev.data() + r * h;
        const T* cp = c_prev.data() + r * h;
        T* ho = out.h.data() + r * h;
        T* co = out.c.data() + r * h;
        T* tc = tanh_c.data() + r * h;
        if (!active.empty() && !active[r]) {
            std::copy(hp, hp + h, ho);
            std::copy(cp, cp + h, co);
            continue;
        }
        for (std::size_t k = 0; k < h; ++k) {
            co[k] = g[h + k] * cp[k] + g[k] * g[2 * h + k];
            tc[k] = std::tanh(co[k]);
            ho[k] = g[3 * h + k] * tc[k];
        }
    }
    if (cache) *cache = {h_prev, c_prev, std::move(gates), std::move(tanh_c), active};
    return out;
}

/// Returns d(xproj); writes dh_prev/dc_prev and accumulates dW_hh.
template <class T>
Tensor<T> lstm_step_backward_to_projection(const LstmStepCache<T>& cache, const Tensor<T>& dh, const Tensor<T>& dc,
                                           LstmWeights<T>& w, Tensor<T>& dh_prev, Tensor<T>& dc_prev) {
    const std::size_t b = dh.dim(0), h = dh.dim(1);
    Tensor<T> dpre({b, 4 * h});
    dc_prev = Tensor<T>({b, h});
    for (std::size_t r = 0; r < b; ++r) {
        const T* d_h = dh.data() + r * h;
        const T* d_c = dc.data() + r * h;
        T* d_cp = dc_prev.data() + r * h;
        if (!cache.active.empty() && !cache.active[r]) {
            std::copy(d_c, d_c + h, d_cp);
            continue;
        }
        const T* g = cache.gates.data() + r * 4 * h;
        const T* tc = cache.tanh_c.data() + r * h;
        const T* cp = cache.c_prev.data() + r * h;
        T* dp = dpre.data() + r * 4 * h;
        for (std::size_t k = 0; k < h; ++k) {
            const T i = g[k], f = g[h + k], gg = g[2 * h + k], o = g[3 * h + k];
            const T dct = d_c[k] + d_h[k] * o * (T(1) - tc[k] * tc[k]);
            dp[k] = dct * gg * i * (T(1) - i);
            dp[h + k] = dct * cp[k] * f * (T(1) - f);
            dp[2 * h + k] = dct * i * (T(1) - gg * gg);
            dp[3 * h + k] = d_h[k] * tc[k] * o * (T(1) - o);
            d_cp[k] = dct * f;
        }
    }
    dh_prev = Tensor<T>({b, h});
    matmul_nt_into(dpre, w.w_hh.value, dh_prev);
    for (std::size_t r = 0; r < b; ++r) {
        if (cache.active.empty() || cache.active[r]) continue;
        const T* d_h = dh.data() + r * h;
        T* d_hp = dh_prev.data() + r * h;
        for (std::size_t k = 0; k < h; ++k) d_hp[k] += d_h[k];
    }
    matmul_tn_into(cache.h_prev, dpre, w.w_hh.grad, Accumulate::Yes);
    return dpre;
}

template <class T>
Tensor<T> input_projection(const Tensor<T>& x, const LstmWeights<T>& w) {
    Tensor<T> proj = matmul(x, w.w_ih.value);
    auto pm = as_matrix(proj);
    pm.rowwise() += as_row(w.b_ih.value);
    pm.rowwise() += as_row(w.b_hh.value);
    return proj;
}

template <class T>
void check_lstm_shapes(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev, const LstmWeights<T>& w) {
    if (x.rank() != 2 || h_prev.rank() != 2 || x.dim(1) != w.input_dim() || h_prev.dim(1) != w.hidden_dim() ||
        h_prev.shape() != c_prev.shape() || h_prev.dim(0) != x.dim(0))
        throw ShapeError("lstm_step: x " + shape_string(x.shape()) + ", h " + shape_string(h_prev.shape()) +
                         ", c " + shape_string(c_prev.shape()) + " for D=" + std::to_string(w.input_dim()) +
                         " H=" + std::to_string(w.hidden_dim()));
}

}  // namespace detail

/// Full-step cache for lstm_step_backward.
template <class T>
struct LstmCellCache {
    Tensor<T> x;
    LstmStepCache<T> step;
};

/// One LSTM step for a batch: x [B, D], h_prev/c_prev [B, H].
///   i = σ(·), f = σ(·), g = tanh(·), o = σ(·)
///   c = f ⊙ c_prev + i ⊙ g,  h = o ⊙ tanh(c)
template <class T>
LstmState<T> lstm_step(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                       const LstmWeights<T>& w, LstmCellCache<T>* cache = nullptr) {
    detail::check_lstm_shapes(x, h_prev, c_prev, w);
    Tensor<T> proj = detail::input_projection(x, w);
    if (cache) cache->x = x;
    return detail::lstm_step_from_projection(proj, h_prev, c_prev, w, Mask{}, cache ? &cache->step : nullptr);
}

template <class T>
struct LstmStepGrads {
    Tensor<T> dx, dh_prev, dc_prev;
};

/// Accumulates weight gradients into `w` and returns input-side gradients.
template <class T>
LstmStepGrads<T> lstm_step_backward(const LstmCellCache<T>& cache, const Tensor<T>& dh, const Tensor<T>& dc,
                                    LstmWeights<T>& w) {
    LstmStepGrads<T> g;
    Tensor<T> dproj = detail::lstm_step_backward_to_projection(cache.step, dh, dc, w, g.dh_prev, g.dc_prev);
    g.dx = linear_backward(cache.x, w.w_ih.value, dproj, w.w_ih.grad, w.b_ih.grad);
    add_column_sums(dproj, w.b_hh.grad);
    return g;
}

// ---------------------------------------------------------------------------
// Sequences

template <class T>
struct LstmSequenceCache {
    Tensor<T> x;  // [B, T, D]
    std::vector<LstmStepCache<T>> steps;  // in processing order
    bool reverse = false;
};

/// Runs the cell over x [B, T, D] from zero state. With `reverse` the scan
/// goes from t = T-1 down to 0. Steps whose mask flag is 0 leave (h, c)
/// unchanged, so padding never leaks into the state seen by valid frames.
/// Returns h_t for every t as [B, T, H].
template <class T>
Tensor<T> lstm_sequence(const Tensor<T>& x, const Mask& mask, const LstmWeights<T>& w, bool reverse,
                        LstmSequenceCache<T>* cache = nullptr) {
    if (x.rank() != 3 || x.dim(2) != w.input_dim())
        throw ShapeError("lstm_sequence: x " + shape_string(x.shape()) + " for D=" + std::to_string(w.input_dim()));
    const std::size_t b = x.dim(0), t = x.dim(1), h = w.hidden_dim();
    if (mask.size() != b * t) throw ShapeError("lstm_sequence: mask length does not match [B, T]");
    const Tensor<T> proj = detail::input_projection(x, w);  // [B, T, 4H]
    Tensor<T> out({b, t, h});
    LstmState<T> state{Tensor<T>({b, h}), Tensor<T>({b, h})};
    if (cache) {
        cache->x = x;
        cache->reverse = reverse;
        cache->steps.assign(t, {});
    }
    Tensor<T> xp({b, 4 * h});
    Mask active(b);
    for (std::size_t s = 0; s < t; ++s) {
        const std::size_t step = reverse ? t - 1 - s : s;
        for (std::size_t r = 0; r < b; ++r) {
            std::copy_n(proj.data() + (r * t + step) * 4 * h, 4 * h, xp.data() + r * 4 * h);
            active[r] = mask[r * t + step];
        }
        state = detail::lstm_step_from_projection(xp, state.h, state.c, w, active, cache ? &cache->steps[s] : nullptr);
        for (std::size_t r = 0; r < b; ++r) std::copy_n(state.h.data() + r * h, h, out.data() + (r * t + step) * h);
    }
    return out;
}

/// Backpropagation through time. dh_seq is dLoss/dh_t as [B, T, H].
template <class T>
Tensor<T> lstm_sequence_backward(const LstmSequenceCache<T>& cache, const Tensor<T>& dh_seq, LstmWeights<T>& w) {
    const std::size_t b = cache.x.dim(0), t = cache.x.dim(1), h = w.hidden_dim();
    Tensor<T> dproj({b, t, 4 * h});
    Tensor<T> dh_carry({b, h}), dc_carry({b, h});
    Tensor<T> dh({b, h});
    for (std::size_t s = t; s-- > 0;) {
        const std::size_t step = cache.reverse ? t - 1 - s : s;
        for (std::size_t r = 0; r < b; ++r) {
            const T* src = dh_seq.data() + (r * t + step) * h;
            const T* carry = dh_carry.data() + r * h;
            T* dst = dh.data() + r * h;
            for (std::size_t k = 0; k < h; ++k) dst[k] = src[k] + carry[k];
        }
        Tensor<T> dh_prev, dc_prev;
        Tensor<T> dp = detail::lstm_step_backward_to_projection(cache.steps[s], dh, dc_carry, w, dh_prev, dc_prev);
        for (std::size_t r = 0; r < b; ++r)
            std::copy_n(dp.data() + r * 4 * h, 4 * h, dproj.data() + (r * t + step) * 4 * h);
        dh_carry = std::move(dh_prev);
        dc_carry = std::move(dc_prev);
    }
    Tensor<T> dx = linear_backward(cache.x, w.w_ih.value, dproj, w.w_ih.grad, w.b_ih.grad);
    add_column_sums(dproj, w.b_hh.grad);
    return dx;
}

template <class T>
struct BiLstmCache {
    LstmSequenceCache<T> fwd, bwd;
};

/// Forward and backward scans concatenated per step: [B, T, 2H] with the
/// forward direction in the first H channels.
template <class T>
Tensor<T> bilstm(const Tensor<T>& x, const Mask& mask, const LstmWeights<T>& fwd, const LstmWeights<T>& bwd,
                 BiLstmCache<T>* cache = nullptr) {
    if (fwd.hidden_dim() != bwd.hidden_dim()) throw ShapeError("bilstm: direction hidden sizes differ");
    const Tensor<T> hf = lstm_sequence(x, mask, fwd, false, cache ? &cache->fwd : nullptr);
    const Tensor<T> hb = lstm_sequence(x, mask, bwd, true, cache ? &cache->bwd : nullptr);
    const std::size_t rows = x.dim(0) * x.dim(1), h = fwd.hidden_dim();
    Tensor<T> out({x.dim(0), x.dim(1), 2 * h});
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(hf.data() + r * h, h, out.data() + r * 2 * h);
        std::copy_n(hb.data() + r * h, h, out.data() + r * 2 * h + h);
    }
    return out;
}

template <class T>
Tensor<T> bilstm_backward(const BiLstmCache<T>& cache, const Tensor<T>& dout, LstmWeights<T>& fwd,
                          LstmWeights<T>& bwd) {
    const std::size_t b = cache.fwd.x.dim(0), t = cache.fwd.x.dim(1), h = fwd.hidden_dim();
    Tensor<T> dhf({b, t, h}), dhb({b, t, h});
    for (std::size_t r = 0; r < b * t; ++r) {
        std::copy_n(dout.data() + r * 2 * h, h, dhf.data() + r * h);
        std::copy_n(dout.data() + r * 2 * h + h, h, dhb.data() + r * h);
    }
    Tensor<T> dx = lstm_sequence_backward(cache.fwd, dhf, fwd);
    dx += lstm_sequence_backward(cache.bwd, dhb, bwd);
    return dx;
}

}  // namespace signpose::nd
