// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signpose/keypoints.hpp"

namespace signpose {

enum class NormalizationStrategy { Raw, GlobalNoseAnchored, FaceCentered, PerFrameCenterOfMass };

inline constexpr std::string_view to_string(NormalizationStrategy s) {
    switch (s) {
        case NormalizationStrategy::Raw: return "raw";
        case NormalizationStrategy::GlobalNoseAnchored: return "nose";
        case NormalizationStrategy::FaceCentered: return "face";
        case NormalizationStrategy::PerFrameCenterOfMass: return "com";
    }
    return "?";
}

inline std::optional<NormalizationStrategy> parse_normalization(std::string_view name) {
    for (auto s : {NormalizationStrategy::Raw, NormalizationStrategy::GlobalNoseAnchored,
                   NormalizationStrategy::FaceCentered, NormalizationStrategy::PerFrameCenterOfMass})
        if (to_string(s) == name) return s;
    return std::nullopt;
}

/// Mean of every joint in a present group.
inline Vec3 per_frame_com(const PoseFrame& frame) {
    Vec3 sum{0, 0, 0};
    std::size_t n = 0;
    for (std::size_t j = 0; j < kJointCount; ++j) {
        if (!frame.joint_visible(j)) continue;
        for (std::size_t a = 0; a < 3; ++a) sum[a] += frame.coords[3 * j + a];
        ++n;
    }
    if (n == 0) throw DegenerateInputError("per_frame_com: no landmark group is present");
    for (auto& v : sum) v /= static_cast<double>(n);
    return sum;
}

/// Mean of the 37 face landmarks.
inline Vec3 face_com(const PoseFrame& frame) {
    if (!frame.present(Group::Face)) throw DegenerateInputError("face_com: face group is absent");
    const auto r = kHolistic79.range(Group::Face);
    Vec3 sum{0, 0, 0};
    for (std::size_t j = r.begin; j < r.end; ++j)
        for (std::size_t a = 0; a < 3; ++a) sum[a] += frame.coords[3 * j + a];
    for (auto& v : sum) v /= static_cast<double>(r.size());
    return sum;
}

/// Largest |coordinate| over visible joints of an already-centred frame;
/// 1 when that maximum is 0.
inline double per_frame_scale(const PoseFrame& frame) {
    double s = 0.0;
    for (std::size_t j = 0; j < kJointCount; ++j) {
        if (!frame.joint_visible(j)) continue;
        for (std::size_t a = 0; a < 3; ++a) s = std::max(s, std::abs(frame.coords[3 * j + a]));
    }
    return s == 0.0 ? 1.0 : s;
}

namespace detail {

inline void shift_visible(PoseFrame& f, const Vec3& anchor) {
    for (std::size_t j = 0; j < kJointCount; ++j) {
        if (!f.joint_visible(j)) continue;
        for (std::size_t a = 0; a < 3; ++a) f.coords[3 * j + a] -= anchor[a];
    }
}

}  // namespace detail

/// Applies one coordinate preprocessing strategy. Absent groups stay exactly
/// zero. Frames with no present group pass through untouched.
///
///  raw   identity
///  nose  per frame, subtract that frame's nose tip. Frames without a face
///        reuse the nearest earlier face frame's nose (or the first later one).
///  face  subtract one anchor: the mean over face frames of the face centroid
///  com   per frame, subtract the visible-joint centroid, then divide by the
///        largest remaining |coordinate|
inline PoseSequence normalize_sequence(const PoseSequence& seq, NormalizationStrategy strategy) {
    PoseSequence out = seq;
    switch (strategy) {
        case NormalizationStrategy::Raw:
            return out;

        case NormalizationStrategy::GlobalNoseAnchored: {
            std::vector<std::optional<Vec3>> nose(seq.frames.size());
            std::optional<Vec3> last;
            for (std::size_t f = 0; f < seq.frames.size(); ++f) {
                if (seq.frames[f].present(Group::Face)) last = seq.frames[f].joint(kHolistic79.nose_index);
                nose[f] = last;
            }
            if (!last)
                throw DegenerateInputError("normalize_sequence(nose): face is absent in every frame of '" +
                                           seq.video_id + "'");
            std::optional<Vec3> next;
            for (std::size_t f = seq.frames.size(); f-- > 0;) {
                if (seq.frames[f].present(Group::Face)) next = seq.frames[f].joint(kHolistic79.nose_index);
                if (!nose[f]) nose[f] = next;
            }
            for (std::size_t f = 0; f < out.frames.size(); ++f) {
                if (!out.frames[f].any_present()) continue;
                detail::shift_visible(out.frames[f], *nose[f]);
            }
            return out;
        }

        case NormalizationStrategy::FaceCentered: {
            Vec3 anchor{0, 0, 0};
            std::size_t n = 0;
            for (const auto& f : seq.frames) {
                if (!f.present(Group::Face)) continue;
                const Vec3 c = face_com(f);
                for (std::size_t a = 0; a < 3; ++a) anchor[a] += c[a];
                ++n;
            }
            if (n == 0)
                throw DegenerateInputError("normalize_sequence(face): face is absent in every frame of '" +
                                           seq.video_id + "'");
            for (auto& v : anchor) v /= static_cast<double>(n);
            for (auto& f : out.frames) detail::shift_visible(f, anchor);
            return out;
        }

        case NormalizationStrategy::PerFrameCenterOfMass: {
            for (auto& f : out.frames) {
                if (!f.any_present()) continue;
                detail::shift_visible(f, per_frame_com(f));
                const double s = per_frame_scale(f);
                for (std::size_t j = 0; j < kJointCount; ++j) {
                    if (!f.joint_visible(j)) continue;
                    for (std::size_t a = 0; a < 3; ++a) f.coords[3 * j + a] /= s;
                }
            }
            return out;
        }
    }
    return out;
}

}  // namespace signpose
