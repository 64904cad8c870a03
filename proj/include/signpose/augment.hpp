// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>

#include "signpose/keypoints.hpp"
#include "signpose/ndcore/random.hpp"

namespace signpose {

/// Training-time augmentation knobs. Defaults for jitter and frame dropout
/// are small placeholder values; only the scale range has a published value.
struct AugmentConfig {
    double jitter_sigma = 0.01;
    double scale_lo = 0.8;
    double scale_hi = 1.2;
    double temporal_dropout_rate = 0.05;
    std::uint64_t seed = 0;

    void check() const {
        if (!(jitter_sigma >= 0.0)) throw std::invalid_argument("augment: jitter_sigma must be >= 0");
        if (!(scale_lo > 0.0 && scale_lo <= scale_hi)) throw std::invalid_argument("augment: need 0 < scale_lo <= scale_hi");
        if (!(temporal_dropout_rate >= 0.0 && temporal_dropout_rate <= 1.0))
            throw std::invalid_argument("augment: temporal_dropout_rate must lie in [0, 1]");
    }

    /// Settings under which augment_sequence is the identity.
    static AugmentConfig identity() { return {0.0, 1.0, 1.0, 0.0, 0}; }
};

/// Independent N(0, sigma^2) noise on every visible coordinate.
inline PoseSequence jitter(const PoseSequence& seq, double sigma, nd::Rng& rng) {
    if (!(sigma >= 0.0)) throw std::invalid_argument("jitter: sigma must be >= 0");
    PoseSequence out = seq;
    if (sigma == 0.0) return out;
    for (auto& f : out.frames)
        for (std::size_t j = 0; j < kJointCount; ++j) {
            if (!f.joint_visible(j)) continue;
            for (std::size_t a = 0; a < 3; ++a) f.coords[3 * j + a] += rng.normal(0.0, sigma);
        }
    return out;
}

/// Multiplies every visible coordinate by `factor` (scaling about the origin).
inline PoseSequence scale_skeleton(const PoseSequence& seq, double factor) {
    if (!(factor > 0.0)) throw std::invalid_argument("scale_skeleton: factor must be positive");
    PoseSequence out = seq;
    for (auto& f : out.frames)
        for (std::size_t j = 0; j < kJointCount; ++j) {
            if (!f.joint_visible(j)) continue;
            for (std::size_t a = 0; a < 3; ++a) f.coords[3 * j + a] *= factor;
        }
    return out;
}

/// Blanks each frame independently with probability `rate`.
inline PoseSequence temporal_dropout(const PoseSequence& seq, double rate, nd::Rng& rng) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("temporal_dropout: rate must lie in [0, 1]");
    PoseSequence out = seq;
    if (rate == 0.0) return out;
    for (auto& f : out.frames)
        if (rng.bernoulli(rate)) f = PoseFrame::blank();
    return out;
}

/// scale -> jitter -> temporal dropout, with the random stream keyed by
/// (cfg.seed, sample_index) so results do not depend on loading order.
inline PoseSequence augment_sequence(const PoseSequence& seq, const AugmentConfig& cfg, std::uint64_t sample_index) {
    cfg.check();
    nd::Rng rng = nd::Rng::derived(cfg.seed, {0xa06e17ULL, sample_index});
    const double factor = cfg.scale_lo == cfg.scale_hi ? cfg.scale_lo : rng.uniform(cfg.scale_lo, cfg.scale_hi);
    PoseSequence out = factor == 1.0 ? seq : scale_skeleton(seq, factor);
    out = jitter(out, cfg.jitter_sigma, rng);
    return temporal_dropout(out, cfg.temporal_dropout_rate, rng);
}

}  // namespace signpose
