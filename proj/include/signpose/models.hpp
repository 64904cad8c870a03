// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "signpose/keypoints.hpp"
#include "signpose/ndcore/attention.hpp"
#include "signpose/ndcore/lstm.hpp"
#include "signpose/ndcore/ops.hpp"
#include "signpose/ndcore/parameter.hpp"

namespace signpose {

/// Mean of the valid frames followed by one linear layer. Baseline and toy
/// model; it has no temporal stack.
struct PoseLinearConfig {
    std::size_t input_dim = kCoordsPerFrame;
    std::size_t n_classes = 0;
};

struct PoseLstmConfig {
    std::size_t input_dim = kCoordsPerFrame;
    std::size_t embed_dim = 128;
    std::size_t hidden_dim = 256;
    bool bidirectional = true;
    double dropout_rate = 0.2;
    std::size_t n_classes = 0;
};

struct PoseTransformerConfig {
    std::size_t input_dim = kCoordsPerFrame;
    std::size_t d_model = 256;
    std::size_t n_heads = 4;
    std::size_t n_layers = 3;
    std::size_t ff_dim = 512;
    double dropout_rate = 0.1;
    std::size_t n_classes = 0;
    bool inner_dropout = false;     // also drop at the residual branches of each layer
    bool learned_positions = false;  // learned table instead of sinusoids
    std::size_t max_len = 256;       // rows of the learned table
};

using ModelConfig = std::variant<PoseLinearConfig, PoseLstmConfig, PoseTransformerConfig>;

inline std::string model_kind(const ModelConfig& cfg) {
    if (std::holds_alternative<PoseLinearConfig>(cfg)) return "linear";
    if (const auto* l = std::get_if<PoseLstmConfig>(&cfg)) return l->bidirectional ? "bilstm" : "lstm";
    return "transformer";
}

inline std::size_t n_classes(const ModelConfig& cfg) {
    return std::visit([](const auto& c) { return c.n_classes; }, cfg);
}

inline void validate_config(const ModelConfig& cfg) {
    auto positive = [](std::size_t v, const char* what) {
        if (v == 0) throw std::invalid_argument(std::string("model config: ") + what + " must be positive");
    };
    auto rate = [](double r) {
        if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("model config: dropout must lie in [0, 1)");
    };
    std::visit(
        [&](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            positive(c.input_dim, "input_dim");
            positive(c.n_classes, "n_classes");
            if constexpr (std::is_same_v<C, PoseLstmConfig>) {
                positive(c.embed_dim, "embed_dim");
                positive(c.hidden_dim, "hidden_dim");
                rate(c.dropout_rate);
            } else if constexpr (std::is_same_v<C, PoseTransformerConfig>) {
                positive(c.d_model, "d_model");
                positive(c.n_heads, "n_heads");
                positive(c.n_layers, "n_layers");
                positive(c.ff_dim, "ff_dim");
                rate(c.dropout_rate);
                if (c.d_model % c.n_heads != 0)
                    throw std::invalid_argument("model config: d_model must be divisible by n_heads");
                if (!c.learned_positions && c.d_model % 2 != 0)
                    throw std::invalid_argument("model config: sinusoidal positions need an even d_model");
                if (c.learned_positions) positive(c.max_len, "max_len");
            }
        },
        cfg);
}

/// Exact number of trainable scalars.
inline std::size_t param_count(const ModelConfig& cfg) {
    validate_config(cfg);
    return std::visit(
        [](const auto& c) -> std::size_t {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, PoseLinearConfig>) {
                return c.input_dim * c.n_classes + c.n_classes;
            } else if constexpr (std::is_same_v<C, PoseLstmConfig>) {
                const std::size_t dirs = c.bidirectional ? 2 : 1;
                return c.input_dim * c.embed_dim + c.embed_dim +
                       dirs * nd::LstmWeights<double>::scalar_count(c.embed_dim, c.hidden_dim) +
                       dirs * c.hidden_dim * c.n_classes + c.n_classes;
            } else {
                return c.input_dim * c.d_model + c.d_model + (c.learned_positions ? c.max_len * c.d_model : 0) +
                       c.n_layers * nd::EncoderLayerWeights<double>::scalar_count(c.d_model, c.ff_dim) +
                       c.d_model * c.n_classes + c.n_classes;
            }
        },
        cfg);
}

/// Every row of a [B, T] mask must hold at least one valid frame.
inline void require_valid_rows(const nd::Mask& mask, std::size_t batch, std::size_t steps) {
    if (mask.size() != batch * steps) throw ShapeError("mask length does not match [B, T]");
    for (std::size_t b = 0; b < batch; ++b) {
        bool any = false;
        for (std::size_t t = 0; t < steps && !any; ++t) any = mask[b * steps + t] != 0;
        if (!any) throw DegenerateInputError("batch row " + std::to_string(b) + " is all padding");
    }
}

template <class T>
struct ClassifierOutput {
    nd::Tensor<T> logits;  // [B, n_classes]
};

/// A pose-sequence classifier. forward() keeps whatever backward() needs;
/// backward() accumulates into the parameters' gradients.
template <class T>
class Classifier {
public:
    virtual ~Classifier() = default;

    /// x [B, T, input_dim], mask B*T flags.
    virtual ClassifierOutput<T> forward(const nd::Tensor<T>& x, const nd::Mask& mask, bool training, nd::Rng& rng) = 0;
    virtual void backward(const nd::Tensor<T>& dlogits) = 0;
    virtual nd::ParameterRefs<T> parameters() = 0;
    virtual const ModelConfig& config() const = 0;
    virtual void init(std::uint64_t seed) = 0;

    ClassifierOutput<T> infer(const nd::Tensor<T>& x, const nd::Mask& mask) {
        nd::Rng unused(0);
        return forward(x, mask, false, unused);
    }

protected:
    static void check_input(const nd::Tensor<T>& x, const nd::Mask& mask, std::size_t input_dim) {
        if (x.rank() != 3 || x.dim(2) != input_dim)
            throw ShapeError("classifier input must be [B, T, " + std::to_string(input_dim) + "], got " +
                             nd::shape_string(x.shape()));
        require_valid_rows(mask, x.dim(0), x.dim(1));
    }
};

// ---------------------------------------------------------------------------

template <class T>
class PoseLinear final : public Classifier<T> {
public:
    explicit PoseLinear(PoseLinearConfig cfg)
        : cfg_(cfg), w_("head.w", {cfg.input_dim, cfg.n_classes}), b_("head.b", {cfg.n_classes}) {
        validate_config(cfg_);
    }

    ClassifierOutput<T> forward(const nd::Tensor<T>& x, const nd::Mask& mask, bool, nd::Rng&) override {
        this->check_input(x, mask, cfg_.input_dim);
        shape_ = x.shape();
        mask_ = mask;
        pooled_ = nd::masked_mean_pool(x, mask);
        return {nd::linear(pooled_, w_.value, b_.value)};
    }

    void backward(const nd::Tensor<T>& dlogits) override {
        nd::linear_backward(pooled_, w_.value, dlogits, w_.grad, b_.grad);
    }

    nd::ParameterRefs<T> parameters() override { return {&w_, &b_}; }
    const ModelConfig& config() const override { return cfg_variant_; }

    void init(std::uint64_t seed) override {
        nd::Rng rng = nd::Rng::derived(seed, {0x11ea7ULL});
        nd::xavier_uniform(w_.value, cfg_.input_dim, cfg_.n_classes, rng);
        b_.value.fill(T(0));
    }

private:
    PoseLinearConfig cfg_;
    ModelConfig cfg_variant_{cfg_};
    nd::Parameter<T> w_, b_;
    nd::Shape shape_;
    nd::Mask mask_;
    nd::Tensor<T> pooled_;
};

// ---------------------------------------------------------------------------

/// Per-frame linear embedding -> (Bi)LSTM -> masked mean pool -> dropout -> linear.
template <class T>
class PoseLstm final : public Classifier<T> {
public:
    explicit PoseLstm(PoseLstmConfig cfg)
        : cfg_(cfg),
          embed_w_("embed.w", {cfg.input_dim, cfg.embed_dim}),
          embed_b_("embed.b", {cfg.embed_dim}),
          fwd_("lstm.fwd", cfg.embed_dim, cfg.hidden_dim),
          head_w_("head.w", {(cfg.bidirectional ? 2 : 1) * cfg.hidden_dim, cfg.n_classes}),
          head_b_("head.b", {cfg.n_classes}) {
        validate_config(cfg_);
        if (cfg_.bidirectional) bwd_ = nd::LstmWeights<T>("lstm.bwd", cfg.embed_dim, cfg.hidden_dim);
    }

    ClassifierOutput<T> forward(const nd::Tensor<T>& x, const nd::Mask& mask, bool training, nd::Rng& rng) override {
        this->check_input(x, mask, cfg_.input_dim);
        const std::size_t b = x.dim(0), t = x.dim(1);
        mask_ = mask;
        x2_ = x.reshaped({b * t, cfg_.input_dim});
        nd::Tensor<T> e = nd::linear(x2_, embed_w_.value, embed_b_.value).reshaped({b, t, cfg_.embed_dim});
        nd::Tensor<T> h = cfg_.bidirectional ? nd::bilstm(e, mask, fwd_, bwd_, &bi_cache_)
                                             : nd::lstm_sequence(e, mask, fwd_, false, &uni_cache_);
        hidden_shape_ = h.shape();
        auto dropped = nd::dropout(nd::masked_mean_pool(h, mask), cfg_.dropout_rate, training, rng);
        pooled_ = std::move(dropped.output);
        keep_ = std::move(dropped.keep);
        return {nd::linear(pooled_, head_w_.value, head_b_.value)};
    }

    void backward(const nd::Tensor<T>& dlogits) override {
        nd::Tensor<T> dpool = nd::linear_backward(pooled_, head_w_.value, dlogits, head_w_.grad, head_b_.grad);
        dpool = nd::dropout_backward(dpool, keep_);
        nd::Tensor<T> dh = nd::masked_mean_pool_backward(dpool, mask_, hidden_shape_);
        nd::Tensor<T> de = cfg_.bidirectional ? nd::bilstm_backward(bi_cache_, dh, fwd_, bwd_)
                                              : nd::lstm_sequence_backward(uni_cache_, dh, fwd_);
        de.reshape({x2_.dim(0), cfg_.embed_dim});
        nd::linear_backward(x2_, embed_w_.value, de, embed_w_.grad, embed_b_.grad);
    }

    nd::ParameterRefs<T> parameters() override {
        nd::ParameterRefs<T> p{&embed_w_, &embed_b_};
        for (auto* q : fwd_.parameters()) p.push_back(q);
        if (cfg_.bidirectional)
            for (auto* q : bwd_.parameters()) p.push_back(q);
        p.push_back(&head_w_);
        p.push_back(&head_b_);
        return p;
    }

    const ModelConfig& config() const override { return cfg_variant_; }

    void init(std::uint64_t seed) override {
        nd::Rng rng = nd::Rng::derived(seed, {0x157ULL});
        nd::xavier_uniform(embed_w_.value, cfg_.input_dim, cfg_.embed_dim, rng);
        embed_b_.value.fill(T(0));
        fwd_.init(rng);
        if (cfg_.bidirectional) bwd_.init(rng);
        nd::xavier_uniform(head_w_.value, head_w_.value.dim(0), cfg_.n_classes, rng);
        head_b_.value.fill(T(0));
    }

private:
    PoseLstmConfig cfg_;
    ModelConfig cfg_variant_{cfg_};
    nd::Parameter<T> embed_w_, embed_b_;
    nd::LstmWeights<T> fwd_, bwd_;
    nd::Parameter<T> head_w_, head_b_;

    nd::Mask mask_;
    nd::Tensor<T> x2_;
    nd::BiLstmCache<T> bi_cache_;
    nd::LstmSequenceCache<T> uni_cache_;
    nd::Shape hidden_shape_;
    nd::Tensor<T> pooled_;
    std::vector<T> keep_;
};

// ---------------------------------------------------------------------------

/// Linear embedding to d_model + positional encoding -> encoder stack ->
/// masked mean pool -> dropout -> linear.
template <class T>
class PoseTransformer final : public Classifier<T> {
public:
    explicit PoseTransformer(PoseTransformerConfig cfg)
        : cfg_(cfg),
          embed_w_("embed.w", {cfg.input_dim, cfg.d_model}),
          embed_b_("embed.b", {cfg.d_model}),
          head_w_("head.w", {cfg.d_model, cfg.n_classes}),
          head_b_("head.b", {cfg.n_classes}) {
        validate_config(cfg_);
        if (cfg_.learned_positions) pos_ = nd::Parameter<T>("pos", {cfg.max_len, cfg.d_model});
        for (std::size_t l = 0; l < cfg_.n_layers; ++l)
            layers_.emplace_back("enc" + std::to_string(l), cfg.d_model, cfg.ff_dim);
        caches_.resize(cfg_.n_layers);
    }

    ClassifierOutput<T> forward(const nd::Tensor<T>& x, const nd::Mask& mask, bool training, nd::Rng& rng) override {
        this->check_input(x, mask, cfg_.input_dim);
        const std::size_t b = x.dim(0), t = x.dim(1), d = cfg_.d_model;
        if (cfg_.learned_positions && t > cfg_.max_len)
            throw ShapeError("sequence length " + std::to_string(t) + " exceeds max_len");
        mask_ = mask;
        x2_ = x.reshaped({b * t, cfg_.input_dim});
        nd::Tensor<T> h = nd::linear(x2_, embed_w_.value, embed_b_.value).reshaped({b, t, d});
        const nd::Tensor<T>& pe = cfg_.learned_positions ? pos_.value : sinusoid(t);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t s = 0; s < t; ++s)
                for (std::size_t k = 0; k < d; ++k) h.at(i, s, k) += pe.at(s, k);
        const double inner = cfg_.inner_dropout ? cfg_.dropout_rate : 0.0;
        for (std::size_t l = 0; l < layers_.size(); ++l)
            h = nd::encoder_layer(h, layers_[l], cfg_.n_heads, mask, &caches_[l], inner, training, &rng);
        hidden_shape_ = h.shape();
        auto dropped = nd::dropout(nd::masked_mean_pool(h, mask), cfg_.dropout_rate, training, rng);
        pooled_ = std::move(dropped.output);
        keep_ = std::move(dropped.keep);
        return {nd::linear(pooled_, head_w_.value, head_b_.value)};
    }

    void backward(const nd::Tensor<T>& dlogits) override {
        nd::Tensor<T> dpool = nd::linear_backward(pooled_, head_w_.value, dlogits, head_w_.grad, head_b_.grad);
        dpool = nd::dropout_backward(dpool, keep_);
        nd::Tensor<T> dh = nd::masked_mean_pool_backward(dpool, mask_, hidden_shape_);
        for (std::size_t l = layers_.size(); l-- > 0;) dh = nd::encoder_layer_backward(caches_[l], dh, layers_[l]);
        if (cfg_.learned_positions) {
            const std::size_t b = dh.dim(0), t = dh.dim(1), d = dh.dim(2);
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t s = 0; s < t; ++s)
                    for (std::size_t k = 0; k < d; ++k) pos_.grad.at(s, k) += dh.at(i, s, k);
        }
        dh.reshape({x2_.dim(0), cfg_.d_model});
        nd::linear_backward(x2_, embed_w_.value, dh, embed_w_.grad, embed_b_.grad);
    }

    nd::ParameterRefs<T> parameters() override {
        nd::ParameterRefs<T> p{&embed_w_, &embed_b_};
        if (cfg_.learned_positions) p.push_back(&pos_);
        for (auto& l : layers_)
            for (auto* q : l.parameters()) p.push_back(q);
        p.push_back(&head_w_);
        p.push_back(&head_b_);
        return p;
    }

    const ModelConfig& config() const override { return cfg_variant_; }

    void init(std::uint64_t seed) override {
        nd::Rng rng = nd::Rng::derived(seed, {0x7f0ULL});
        nd::xavier_uniform(embed_w_.value, cfg_.input_dim, cfg_.d_model, rng);
        embed_b_.value.fill(T(0));
        if (cfg_.learned_positions)
            for (auto& v : pos_.value.values()) v = static_cast<T>(rng.normal(0.0, 0.02));
        for (auto& l : layers_) l.init(rng);
        nd::xavier_uniform(head_w_.value, cfg_.d_model, cfg_.n_classes, rng);
        head_b_.value.fill(T(0));
    }

private:
    const nd::Tensor<T>& sinusoid(std::size_t t) {
        if (pe_cache_.empty() || pe_cache_.dim(0) != t) pe_cache_ = nd::positional_encoding<T>(t, cfg_.d_model);
        return pe_cache_;
    }

    PoseTransformerConfig cfg_;
    ModelConfig cfg_variant_{cfg_};
    nd::Parameter<T> embed_w_, embed_b_, pos_;
    std::vector<nd::EncoderLayerWeights<T>> layers_;
    nd::Parameter<T> head_w_, head_b_;

    nd::Mask mask_;
    nd::Tensor<T> x2_, pe_cache_;
    std::vector<nd::EncoderLayerCache<T>> caches_;
    nd::Shape hidden_shape_;
    nd::Tensor<T> pooled_;
    std::vector<T> keep_;
};

template <class T>
std::unique_ptr<Classifier<T>> make_classifier(const ModelConfig& cfg) {
    validate_config(cfg);
    return std::visit(
        [](const auto& c) -> std::unique_ptr<Classifier<T>> {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, PoseLinearConfig>)
                return std::make_unique<PoseLinear<T>>(c);
            else if constexpr (std::is_same_v<C, PoseLstmConfig>)
                return std::make_unique<PoseLstm<T>>(c);
            else
                return std::make_unique<PoseTransformer<T>>(c);
        },
        cfg);
}

}  // namespace signpose
