// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "signpose/ndcore/ops.hpp"
#include "signpose/ndcore/parameter.hpp"

namespace signpose::nd {

// ---------------------------------------------------------------------------
// Layer normalization over the last axis

template <class T>
struct LayerNormCache {
    Tensor<T> xhat;          // [N, d]
    std::vector<T> inv_std;  // N
};

template <class T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, LayerNormCache<T>* cache,
                     T eps = T(1e-5)) {
    const std::size_t d = x.shape().back(), n = x.size() / d;
    if (gamma.size() != d || beta.size() != d) throw ShapeError("layer_norm: gain/bias width mismatch");
    Tensor<T> y(x.shape());
    Tensor<T> xhat(x.shape());
    std::vector<T> inv(n);
    for (std::size_t r = 0; r < n; ++r) {
        const T* xr = x.data() + r * d;
        T mean = 0;
        for (std::size_t k = 0; k < d; ++k) mean += xr[k];
        mean /= static_cast<T>(d);
        T var = 0;
        for (std::size_t k = 0; k < d; ++k) var += (xr[k] - mean) * (xr[k] - mean);
        var /= static_cast<T>(d);
        inv[r] = T(1) / std::sqrt(var + eps);
        for (std::size_t k = 0; k < d; ++k) {
            const T xh = (xr[k] - mean) * inv[r];
            xhat[r * d + k] = xh;
            y[r * d + k] = gamma[k] * xh + beta[k];
        }
    }
    if (cache) *cache = {std::move(xhat), std::move(inv)};
    return y;
}

template <class T>
Tensor<T> layer_norm_backward(const LayerNormCache<T>& cache, const Tensor<T>& dy, const Tensor<T>& gamma,
                              Tensor<T>& dgamma, Tensor<T>& dbeta) {
    const std::size_t d = dy.shape().back(), n = dy.size() / d;
    Tensor<T> dx(dy.shape());
    std::vector<T> dxhat(d);
    for (std::size_t r = 0; r < n; ++r) {
        const T* g = dy.data() + r * d;
        const T* xh = cache.xhat.data() + r * d;
        T mean_dxhat = 0, mean_dxhat_xhat = 0;
        for (std::size_t k = 0; k < d; ++k) {
            dgamma[k] += g[k] * xh[k];
            dbeta[k] += g[k];
            dxhat[k] = g[k] * gamma[k];
            mean_dxhat += dxhat[k];
            mean_dxhat_xhat += dxhat[k] * xh[k];
        }
        mean_dxhat /= static_cast<T>(d);
        mean_dxhat_xhat /= static_cast<T>(d);
        for (std::size_t k = 0; k < d; ++k)
            dx[r * d + k] = cache.inv_std[r] * (dxhat[k] - mean_dxhat - xh[k] * mean_dxhat_xhat);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Multi-head self-attention

template <class T>
struct AttentionWeights {
    Parameter<T> wq, wk, wv, wo;  // [d, d]
    Parameter<T> bq, bk, bv, bo;  // [d]

    AttentionWeights() = default;
    AttentionWeights(const std::string& prefix, std::size_t d)
        : wq(prefix + ".wq", {d, d}), wk(prefix + ".wk", {d, d}), wv(prefix + ".wv", {d, d}),
          wo(prefix + ".wo", {d, d}), bq(prefix + ".bq", {d}), bk(prefix + ".bk", {d}), bv(prefix + ".bv", {d}),
          bo(prefix + ".bo", {d}) {}

    ParameterRefs<T> parameters() { return {&wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo}; }

    void init(Rng& rng) {
        const std::size_t d = wq.value.dim(0);
        for (auto* w : {&wq, &wk, &wv, &wo}) xavier_uniform(w->value, d, d, rng);
        for (auto* b : {&bq, &bk, &bv, &bo}) b->value.fill(T(0));
    }
};

template <class T>
struct AttentionCache {
    Tensor<T> x, q, k, v;  // [B*T, d]
    Tensor<T> probs;       // [B, heads, T, T]
    Tensor<T> context;     // [B*T, d], heads concatenated
    Mask mask;
    std::size_t batch = 0, steps = 0, heads = 0;
};

/// Scaled dot-product attention over x [B, T, d] with `heads` heads. Keys at
/// masked positions receive zero weight; every query row still produces an
/// output. Returns [B, T, d].
template <class T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const AttentionWeights<T>& w, std::size_t heads, const Mask& mask,
                               AttentionCache<T>* cache = nullptr) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    if (x.rank() != 3) throw ShapeError("attention: expected [B, T, d]");
    const std::size_t b = x.dim(0), t = x.dim(1), d = x.dim(2);
    if (heads == 0 || d % heads != 0)
        throw ShapeError("attention: d_model " + std::to_string(d) + " not divisible by " + std::to_string(heads) +
                         " heads");
    if (w.wq.value.dim(0) != d) throw ShapeError("attention: weight width does not match d_model");
    if (mask.size() != b * t) throw ShapeError("attention: mask length does not match [B, T]");
    const std::size_t dk = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));

    const Tensor<T> x2 = x.reshaped({b * t, d});
    const Tensor<T> q = linear(x2, w.wq.value, w.bq.value);
    const Tensor<T> k = linear(x2, w.wk.value, w.bk.value);
    const Tensor<T> v = linear(x2, w.wv.value, w.bv.value);
    Tensor<T> probs({b, heads, t, t});
    Tensor<T> ctx({b * t, d});
    auto qm = as_matrix(q), km = as_matrix(k), vm = as_matrix(v);
    auto cm = as_matrix(ctx);
    for (std::size_t bi = 0; bi < b; ++bi) {
        bool any = false;
        for (std::size_t j = 0; j < t; ++j) any = any || mask[bi * t + j];
        if (!any) throw DegenerateInputError("attention: row " + std::to_string(bi) + " has no valid position");
        for (std::size_t hd = 0; hd < heads; ++hd) {
            const auto rows = static_cast<Eigen::Index>(bi * t), cols = static_cast<Eigen::Index>(hd * dk);
            const auto tt = static_cast<Eigen::Index>(t), kk = static_cast<Eigen::Index>(dk);
            Mat s = (qm.block(rows, cols, tt, kk) * km.block(rows, cols, tt, kk).transpose()) * scale;
            for (std::size_t i = 0; i < t; ++i) {
                T mx = -std::numeric_limits<T>::infinity();
                for (std::size_t j = 0; j < t; ++j)
                    if (mask[bi * t + j]) mx = std::max(mx, s(i, j));
                T sum = 0;
                for (std::size_t j = 0; j < t; ++j) {
                    s(i, j) = mask[bi * t + j] ? std::exp(s(i, j) - mx) : T(0);
                    sum += s(i, j);
                }
                for (std::size_t j = 0; j < t; ++j) s(i, j) /= sum;
            }
            cm.block(rows, cols, tt, kk).noalias() = s * vm.block(rows, cols, tt, kk);
            std::copy_n(s.data(), t * t, probs.data() + (bi * heads + hd) * t * t);
        }
    }
    Tensor<T> out = linear(ctx, w.wo.value, w.bo.value);
    if (cache) *cache = {x2, q, k, v, std::move(probs), std::move(ctx), mask, b, t, heads};
    return std::move(out).reshaped({b, t, d});
}

template <class T>
Tensor<T> multi_head_attention_backward(const AttentionCache<T>& c, const Tensor<T>& dout, AttentionWeights<T>& w) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const std::size_t b = c.batch, t = c.steps, heads = c.heads, d = c.x.dim(1), dk = d / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    const Tensor<T> dout2 = dout.reshaped({b * t, d});
    const Tensor<T> dctx = linear_backward(c.context, w.wo.value, dout2, w.wo.grad, w.bo.grad);
    Tensor<T> dq({b * t, d}), dk_({b * t, d}), dv({b * t, d});
    auto qm = as_matrix(c.q), km = as_matrix(c.k), vm = as_matrix(c.v), dcm = as_matrix(dctx);
    auto dqm = as_matrix(dq), dkm = as_matrix(dk_), dvm = as_matrix(dv);
    for (std::size_t bi = 0; bi < b; ++bi) {
        for (std::size_t hd = 0; hd < heads; ++hd) {
            const auto rows = static_cast<Eigen::Index>(bi * t), cols = static_cast<Eigen::Index>(hd * dk);
            const auto tt = static_cast<Eigen::Index>(t), kk = static_cast<Eigen::Index>(dk);
            const auto p = as_matrix(c.probs.data() + (bi * heads + hd) * t * t, t, t);
            const auto dO = dcm.block(rows, cols, tt, kk);
            dvm.block(rows, cols, tt, kk).noalias() = p.transpose() * dO;
            Mat dp = dO * vm.block(rows, cols, tt, kk).transpose();
            Mat ds(tt, tt);
            for (Eigen::Index i = 0; i < tt; ++i) {
                T dot = 0;
                for (Eigen::Index j = 0; j < tt; ++j) dot += dp(i, j) * p(i, j);
                for (Eigen::Index j = 0; j < tt; ++j) ds(i, j) = p(i, j) * (dp(i, j) - dot) * scale;
            }
            dqm.block(rows, cols, tt, kk).noalias() = ds * km.block(rows, cols, tt, kk);
            dkm.block(rows, cols, tt, kk).noalias() = ds.transpose() * qm.block(rows, cols, tt, kk);
        }
    }
    Tensor<T> dx = linear_backward(c.x, w.wq.value, dq, w.wq.grad, w.bq.grad);
    dx += linear_backward(c.x, w.wk.value, dk_, w.wk.grad, w.bk.grad);
    dx += linear_backward(c.x, w.wv.value, dv, w.wv.grad, w.bv.grad);
    return std::move(dx).reshaped({b, t, d});
}

// ---------------------------------------------------------------------------
// Post-norm transformer encoder layer

template <class T>
struct EncoderLayerWeights {
    AttentionWeights<T> attn;
    Parameter<T> ln1_gain, ln1_bias;
    Parameter<T> ff1_w, ff1_b;  // [d, ff], [ff]
    Parameter<T> ff2_w, ff2_b;  // [ff, d], [d]
    Parameter<T> ln2_gain, ln2_bias;

    EncoderLayerWeights() = default;
    EncoderLayerWeights(const std::string& prefix, std::size_t d, std::size_t ff)
        : attn(prefix + ".attn", d), ln1_gain(prefix + ".ln1.gain", {d}), ln1_bias(prefix + ".ln1.bias", {d}),
          ff1_w(prefix + ".ff1.w", {d, ff}), ff1_b(prefix + ".ff1.b", {ff}), ff2_w(prefix + ".ff2.w", {ff, d}),
          ff2_b(prefix + ".ff2.b", {d}), ln2_gain(prefix + ".ln2.gain", {d}), ln2_bias(prefix + ".ln2.bias", {d}) {}

    std::size_t d_model() const { return ln1_gain.value.size(); }
    std::size_t ff_dim() const { return ff1_b.value.size(); }

    ParameterRefs<T> parameters() {
        ParameterRefs<T> p = attn.parameters();
        for (auto* q : {&ln1_gain, &ln1_bias, &ff1_w, &ff1_b, &ff2_w, &ff2_b, &ln2_gain, &ln2_bias}) p.push_back(q);
        return p;
    }

    void init(Rng& rng) {
        attn.init(rng);
        xavier_uniform(ff1_w.value, d_model(), ff_dim(), rng);
        xavier_uniform(ff2_w.value, ff_dim(), d_model(), rng);
        ff1_b.value.fill(T(0));
        ff2_b.value.fill(T(0));
        ln1_gain.value.fill(T(1));
        ln2_gain.value.fill(T(1));
        ln1_bias.value.fill(T(0));
        ln2_bias.value.fill(T(0));
    }

    static std::size_t scalar_count(std::size_t d, std::size_t ff) { return 4 * (d * d + d) + 2 * d * ff + ff + d + 4 * d; }
};

template <class T>
struct EncoderLayerCache {
    AttentionCache<T> attn;
    std::vector<T> attn_keep;
    LayerNormCache<T> ln1;
    Tensor<T> y1;      // [B*T, d]
    Tensor<T> hidden;  // [B*T, ff], post-ReLU
    std::vector<T> ff_keep;
    LayerNormCache<T> ln2;
    Shape shape;
};

/// y1 = LN(x + Drop(MHA(x))); y = LN(y1 + Drop(FF(y1))), FF = ReLU MLP.
/// `dropout_rate` applies at the two residual branches when training.
template <class T>
Tensor<T> encoder_layer(const Tensor<T>& x, const EncoderLayerWeights<T>& w, std::size_t heads, const Mask& mask,
                        EncoderLayerCache<T>* cache = nullptr, double dropout_rate = 0.0, bool training = false,
                        Rng* rng = nullptr) {
    const std::size_t d = w.d_model();
    if (x.rank() != 3 || x.dim(2) != d) throw ShapeError("encoder_layer: x " + shape_string(x.shape()));
    const bool drop = training && dropout_rate > 0.0;
    if (drop && !rng) throw std::invalid_argument("encoder_layer: dropout requires an rng");
    const std::size_t n = x.dim(0) * x.dim(1);
    EncoderLayerCache<T> local;
    EncoderLayerCache<T>& c = cache ? *cache : local;
    c.shape = x.shape();
    c.attn_keep.clear();
    c.ff_keep.clear();

    Tensor<T> a = multi_head_attention(x, w.attn, heads, mask, cache ? &c.attn : nullptr);
    if (drop) {
        auto r = dropout(a, dropout_rate, true, *rng);
        a = std::move(r.output);
        c.attn_keep = std::move(r.keep);
    }
    a += x;
    a.reshape({n, d});
    c.y1 = layer_norm(a, w.ln1_gain.value, w.ln1_bias.value, &c.ln1);

    c.hidden = linear(c.y1, w.ff1_w.value, w.ff1_b.value);
    for (auto& h : c.hidden.values()) h = std::max(h, T(0));
    Tensor<T> f = linear(c.hidden, w.ff2_w.value, w.ff2_b.value);
    if (drop) {
        auto r = dropout(f, dropout_rate, true, *rng);
        f = std::move(r.output);
        c.ff_keep = std::move(r.keep);
    }
    f += c.y1;
    Tensor<T> y = layer_norm(f, w.ln2_gain.value, w.ln2_bias.value, &c.ln2);
    return std::move(y).reshaped(x.shape());
}

template <class T>
Tensor<T> encoder_layer_backward(const EncoderLayerCache<T>& c, const Tensor<T>& dy, EncoderLayerWeights<T>& w) {
    const std::size_t d = w.d_model(), n = dy.size() / d;
    Tensor<T> g = layer_norm_backward(c.ln2, dy.reshaped({n, d}), w.ln2_gain.value, w.ln2_gain.grad, w.ln2_bias.grad);
    // g flows to both the residual (y1) and the feed-forward branch.
    Tensor<T> dff = dropout_backward(g, c.ff_keep);
    Tensor<T> dhidden = linear_backward(c.hidden, w.ff2_w.value, dff, w.ff2_w.grad, w.ff2_b.grad);
    for (std::size_t i = 0; i < dhidden.size(); ++i)
        if (c.hidden[i] <= T(0)) dhidden[i] = T(0);
    Tensor<T> dy1 = linear_backward(c.y1, w.ff1_w.value, dhidden, w.ff1_w.grad, w.ff1_b.grad);
    dy1 += g;
    Tensor<T> g1 = layer_norm_backward(c.ln1, dy1, w.ln1_gain.value, w.ln1_gain.grad, w.ln1_bias.grad);
    Tensor<T> da = dropout_backward(g1, c.attn_keep).reshaped(c.shape);
    Tensor<T> dx = multi_head_attention_backward(c.attn, da, w.attn);
    dx += g1.reshaped(c.shape);
    return dx;
}

}  // namespace signpose::nd
