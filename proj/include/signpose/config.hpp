// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training configuration, per-epoch metrics, and their JSON forms.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "signpose/augment.hpp"
#include "signpose/models.hpp"
#include "signpose/normalize.hpp"

namespace signpose {

struct TrainConfig {
    ModelConfig model = PoseLstmConfig{};
    NormalizationStrategy normalization = NormalizationStrategy::PerFrameCenterOfMass;
    std::optional<AugmentConfig> augment = AugmentConfig{};  // nullopt disables augmentation
    int epochs = 60;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::size_t seq_len = 64;
    std::uint64_t seed = 0;
    std::string checkpoint_dir;  // empty: keep everything in memory
    bool cosine_decay = false;

    void check() const {
        if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
        if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be positive");
        if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("train config: lr must be positive");
        if (seq_len == 0) throw std::invalid_argument("train config: seq_len must be positive");
        if (augment) augment->check();
    }
};

enum class MetricsSplit { Train, Val, Test };

inline std::string to_string(MetricsSplit s) {
    switch (s) {
        case MetricsSplit::Train: return "train";
        case MetricsSplit::Val: return "val";
        case MetricsSplit::Test: return "test";
    }
    return "?";
}

struct EpochMetrics {
    int epoch = 0;
    MetricsSplit split = MetricsSplit::Val;
    double loss = 0.0;
    double top1 = 0.0;
    double top5 = 0.0;

    EpochMetrics() = default;
    EpochMetrics(int e, MetricsSplit s, double l, double t1, double t5) : epoch(e), split(s), loss(l), top1(t1), top5(t5) {
        if (!(top5 >= top1)) throw std::logic_error("EpochMetrics: top5 < top1");
        if (top1 < 0.0 || top5 > 1.0) throw std::logic_error("EpochMetrics: accuracy outside [0, 1]");
    }

    bool operator==(const EpochMetrics&) const = default;
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const ModelConfig& cfg) {
    nlohmann::json j;
    j["kind"] = model_kind(cfg);
    std::visit(
        [&](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            j["input_dim"] = c.input_dim;
            j["n_classes"] = c.n_classes;
            if constexpr (std::is_same_v<C, PoseLstmConfig>) {
                j["embed_dim"] = c.embed_dim;
                j["hidden_dim"] = c.hidden_dim;
                j["dropout_rate"] = c.dropout_rate;
            } else if constexpr (std::is_same_v<C, PoseTransformerConfig>) {
                j["d_model"] = c.d_model;
                j["n_heads"] = c.n_heads;
                j["n_layers"] = c.n_layers;
                j["ff_dim"] = c.ff_dim;
                j["dropout_rate"] = c.dropout_rate;
                j["inner_dropout"] = c.inner_dropout;
                j["learned_positions"] = c.learned_positions;
                j["max_len"] = c.max_len;
            }
        },
        cfg);
    return j;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        return PoseLinearConfig{j.at("input_dim").get<std::size_t>(), j.at("n_classes").get<std::size_t>()};
    }
    if (kind == "lstm" || kind == "bilstm") {
        PoseLstmConfig c;
        c.input_dim = j.at("input_dim").get<std::size_t>();
        c.embed_dim = j.at("embed_dim").get<std::size_t>();
        c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
        c.bidirectional = kind == "bilstm";
        c.dropout_rate = j.at("dropout_rate").get<double>();
        c.n_classes = j.at("n_classes").get<std::size_t>();
        return c;
    }
    if (kind == "transformer") {
        PoseTransformerConfig c;
        c.input_dim = j.at("input_dim").get<std::size_t>();
        c.d_model = j.at("d_model").get<std::size_t>();
        c.n_heads = j.at("n_heads").get<std::size_t>();
        c.n_layers = j.at("n_layers").get<std::size_t>();
        c.ff_dim = j.at("ff_dim").get<std::size_t>();
        c.dropout_rate = j.at("dropout_rate").get<double>();
        c.n_classes = j.at("n_classes").get<std::size_t>();
        c.inner_dropout = j.at("inner_dropout").get<bool>();
        c.learned_positions = j.at("learned_positions").get<bool>();
        c.max_len = j.at("max_len").get<std::size_t>();
        return c;
    }
    throw std::invalid_argument("unknown model kind '" + kind + "'");
}

inline nlohmann::json to_json(const AugmentConfig& a) {
    return {{"jitter_sigma", a.jitter_sigma},
            {"scale_lo", a.scale_lo},
            {"scale_hi", a.scale_hi},
            {"temporal_dropout_rate", a.temporal_dropout_rate},
            {"seed", a.seed}};
}

inline AugmentConfig augment_config_from_json(const nlohmann::json& j) {
    AugmentConfig a;
    a.jitter_sigma = j.at("jitter_sigma").get<double>();
    a.scale_lo = j.at("scale_lo").get<double>();
    a.scale_hi = j.at("scale_hi").get<double>();
    a.temporal_dropout_rate = j.at("temporal_dropout_rate").get<double>();
    a.seed = j.at("seed").get<std::uint64_t>();
    return a;
}

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"model", to_json(c.model)},
            {"normalization", std::string(to_string(c.normalization))},
            {"augment", c.augment ? to_json(*c.augment) : nlohmann::json(nullptr)},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lr", c.lr},
            {"seq_len", c.seq_len},
            {"seed", c.seed},
            {"checkpoint_dir", c.checkpoint_dir},
            {"cosine_decay", c.cosine_decay}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.model = model_config_from_json(j.at("model"));
    const auto norm = parse_normalization(j.at("normalization").get<std::string>());
    if (!norm) throw std::invalid_argument("unknown normalization in config");
    c.normalization = *norm;
    c.augment = j.at("augment").is_null() ? std::nullopt : std::optional(augment_config_from_json(j.at("augment")));
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.lr = j.at("lr").get<double>();
    c.seq_len = j.at("seq_len").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.checkpoint_dir = j.value("checkpoint_dir", std::string());
    c.cosine_decay = j.value("cosine_decay", false);
    return c;
}

inline nlohmann::json to_json(const EpochMetrics& m) {
    return {{"epoch", m.epoch}, {"split", to_string(m.split)}, {"loss", m.loss}, {"top1", m.top1}, {"top5", m.top5}};
}

inline EpochMetrics epoch_metrics_from_json(const nlohmann::json& j) {
    const std::string s = j.at("split").get<std::string>();
    const MetricsSplit split = s == "train" ? MetricsSplit::Train : s == "val" ? MetricsSplit::Val : MetricsSplit::Test;
    return {j.at("epoch").get<int>(), split, j.at("loss").get<double>(), j.at("top1").get<double>(),
            j.at("top5").get<double>()};
}

}  // namespace signpose
