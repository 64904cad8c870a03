// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "signpose/error.hpp"
#include "signpose/ndcore/random.hpp"

namespace signpose {

// ---------------------------------------------------------------------------
// Layout

inline constexpr std::size_t kJointCount = 79;
inline constexpr std::size_t kCoordsPerFrame = kJointCount * 3;  // 237
inline constexpr std::size_t kGroupCount = 3;

enum class Group : std::size_t { LeftHand = 0, RightHand = 1, Face = 2 };

struct JointRange {
    std::size_t begin;
    std::size_t end;

    constexpr std::size_t size() const { return end - begin; }
    constexpr bool contains(std::size_t j) const { return j >= begin && j < end; }
};

/// Named landmark layout. Only "holistic-79-v1" exists today: 21 left-hand
/// joints, 21 right-hand joints, 37 face landmarks with the nose tip first.
struct LandmarkLayout {
    std::string_view name;
    std::array<std::pair<std::string_view, JointRange>, kGroupCount> groups;
    std::size_t nose_index;

    constexpr JointRange range(Group g) const { return groups[static_cast<std::size_t>(g)].second; }
};

inline constexpr LandmarkLayout kHolistic79{
    "holistic-79-v1",
    {{{"left_hand", {0, 21}}, {"right_hand", {21, 42}}, {"face", {42, 79}}}},
    42,
};

inline const LandmarkLayout* find_layout(std::string_view name) {
    return name == kHolistic79.name ? &kHolistic79 : nullptr;
}

inline constexpr Group group_of(std::size_t joint) {
    return joint < 21 ? Group::LeftHand : (joint < 42 ? Group::RightHand : Group::Face);
}

// ---------------------------------------------------------------------------
// Frames and sequences

using Vec3 = std::array<double, 3>;

struct PoseFrame {
    std::array<double, kCoordsPerFrame> coords{};
    std::array<bool, kGroupCount> presence{};

    Vec3 joint(std::size_t j) const { return {coords[3 * j], coords[3 * j + 1], coords[3 * j + 2]}; }
    void set_joint(std::size_t j, const Vec3& v) {
        coords[3 * j] = v[0];
        coords[3 * j + 1] = v[1];
        coords[3 * j + 2] = v[2];
    }
    bool present(Group g) const { return presence[static_cast<std::size_t>(g)]; }
    bool joint_visible(std::size_t j) const { return present(group_of(j)); }
    bool any_present() const { return presence[0] || presence[1] || presence[2]; }

    /// All coordinates zero and every group absent.
    static PoseFrame blank() { return {}; }

    bool operator==(const PoseFrame&) const = default;
};

struct PoseSequence {
    std::string video_id;
    std::string gloss;
    std::string signer_id;
    double fps = 30.0;
    std::string layout{kHolistic79.name};
    std::vector<PoseFrame> frames;

    std::size_t size() const { return frames.size(); }
    bool operator==(const PoseSequence&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
    std::optional<std::size_t> frame;
    std::string rule;
    std::string detail;
};

/// Every broken invariant, one entry per (frame, rule). Empty iff valid.
inline std::vector<Violation> validate_sequence(const PoseSequence& seq) {
    std::vector<Violation> out;
    if (seq.frames.empty()) out.push_back({std::nullopt, "empty-sequence", "sequence has no frames"});
    if (seq.gloss.empty()) out.push_back({std::nullopt, "empty-gloss", "gloss is empty"});
    if (!(seq.fps > 0.0) || !std::isfinite(seq.fps)) out.push_back({std::nullopt, "fps", "fps must be positive"});
    if (!find_layout(seq.layout)) out.push_back({std::nullopt, "layout", "unknown layout '" + seq.layout + "'"});
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        const auto& fr = seq.frames[f];
        for (std::size_t i = 0; i < kCoordsPerFrame; ++i) {
            if (!std::isfinite(fr.coords[i])) {
                out.push_back({f, "non-finite", "coordinate " + std::to_string(i) + " is not finite"});
                break;
            }
        }
        std::string absent_nonzero;
        for (std::size_t g = 0; g < kGroupCount; ++g) {
            if (fr.presence[g]) continue;
            const auto r = kHolistic79.groups[g].second;
            for (std::size_t i = 3 * r.begin; i < 3 * r.end; ++i) {
                if (fr.coords[i] != 0.0) {
                    absent_nonzero += (absent_nonzero.empty() ? "" : ",") + std::string(kHolistic79.groups[g].first);
                    break;
                }
            }
        }
        if (!absent_nonzero.empty())
            out.push_back({f, "absent-nonzero", "absent group(s) with nonzero coordinates: " + absent_nonzero});
    }
    return out;
}

inline bool is_valid(const PoseSequence& seq) { return validate_sequence(seq).empty(); }

// ---------------------------------------------------------------------------
// Keypoint file (.pose.json)

namespace detail {

/// Shortest decimal that parses back to the same binary64. Always carries a
/// fraction or exponent so JSON readers treat it as floating point (keeps -0.0).
inline void append_double(std::string& out, double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    std::string_view s(buf, static_cast<std::size_t>(end - buf));
    out += s;
    if (s.find_first_of(".eE") == std::string_view::npos) out += ".0";
}

}  // namespace detail

/// Serializes a valid sequence. Throws std::invalid_argument otherwise.
inline std::string write_keypoint_file(const PoseSequence& seq) {
    if (auto v = validate_sequence(seq); !v.empty())
        throw std::invalid_argument("write_keypoint_file: invalid sequence (" + v.front().rule + ")");
    using nlohmann::json;
    std::string out;
    out.reserve(seq.frames.size() * kCoordsPerFrame * 22 + 256);
    out += "{\"format\": " + json(seq.layout).dump();
    out += ", \"video_id\": " + json(seq.video_id).dump();
    out += ", \"gloss\": " + json(seq.gloss).dump();
    out += ", \"signer_id\": " + json(seq.signer_id).dump();
    out += ", \"fps\": ";
    detail::append_double(out, seq.fps);
    out += ",\n\"frames\": [\n";
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        out += "[";
        for (std::size_t i = 0; i < kCoordsPerFrame; ++i) {
            if (i) out += ",";
            detail::append_double(out, seq.frames[f].coords[i]);
        }
        out += f + 1 < seq.frames.size() ? "],\n" : "]\n";
    }
    out += "],\n\"presence\": [";
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        const auto& p = seq.frames[f].presence;
        out += f ? "," : "";
        out += std::string("[") + (p[0] ? "true" : "false") + "," + (p[1] ? "true" : "false") + "," +
               (p[2] ? "true" : "false") + "]";
    }
    out += "]}\n";
    return out;
}

inline PoseSequence parse_keypoint_file(std::string_view bytes) {
    using nlohmann::json;
    using K = ParseError::Kind;
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(K::Malformed, std::string("keypoint file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError(K::Malformed, "keypoint file must be a JSON object");
    auto need = [&](const char* key, json::value_t type) -> const json& {
        auto it = doc.find(key);
        if (it == doc.end()) throw ParseError(K::Malformed, std::string("missing key '") + key + "'");
        const bool ok = type == json::value_t::number_float ? it->is_number() : it->type() == type;
        if (!ok) throw ParseError(K::Malformed, std::string("key '") + key + "' has the wrong type");
        return *it;
    };
    PoseSequence seq;
    seq.layout = need("format", json::value_t::string).get<std::string>();
    if (!find_layout(seq.layout)) throw ParseError(K::UnknownLayout, "unknown layout '" + seq.layout + "'");
    seq.video_id = need("video_id", json::value_t::string).get<std::string>();
    seq.gloss = need("gloss", json::value_t::string).get<std::string>();
    seq.signer_id = need("signer_id", json::value_t::string).get<std::string>();
    seq.fps = need("fps", json::value_t::number_float).get<double>();
    if (!(seq.fps > 0.0) || !std::isfinite(seq.fps)) throw ParseError(K::Malformed, "fps must be positive");
    if (seq.gloss.empty()) throw ParseError(K::Malformed, "gloss must be non-empty");
    const json& frames = need("frames", json::value_t::array);
    const json& presence = need("presence", json::value_t::array);
    if (frames.size() != presence.size())
        throw ParseError(K::Malformed, "frames and presence arrays differ in length");
    if (frames.empty()) throw ParseError(K::Malformed, "sequence has no frames");
    seq.frames.resize(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const json& row = frames[f];
        if (!row.is_array()) throw ParseError(K::Malformed, "frame " + std::to_string(f) + " is not an array", f);
        if (row.size() != kCoordsPerFrame)
            throw ParseError(K::FrameWidth,
                             "frame " + std::to_string(f) + " has " + std::to_string(row.size()) + " values, expected " +
                                 std::to_string(kCoordsPerFrame),
                             f);
        auto& fr = seq.frames[f];
        for (std::size_t i = 0; i < kCoordsPerFrame; ++i) {
            const json& v = row[i];
            if (v.is_null())
                throw ParseError(K::NonFinite, "frame " + std::to_string(f) + " value " + std::to_string(i) + " is null",
                                 f);
            if (!v.is_number())
                throw ParseError(K::Malformed,
                                 "frame " + std::to_string(f) + " value " + std::to_string(i) + " is not a number", f);
            fr.coords[i] = v.get<double>();
            if (!std::isfinite(fr.coords[i]))
                throw ParseError(K::NonFinite,
                                 "frame " + std::to_string(f) + " value " + std::to_string(i) + " is not finite", f);
        }
        const json& pr = presence[f];
        if (!pr.is_array() || pr.size() != kGroupCount)
            throw ParseError(K::Malformed, "presence entry " + std::to_string(f) + " must hold 3 booleans", f);
        for (std::size_t g = 0; g < kGroupCount; ++g) {
            if (!pr[g].is_boolean())
                throw ParseError(K::Malformed, "presence entry " + std::to_string(f) + " must hold 3 booleans", f);
            fr.presence[g] = pr[g].get<bool>();
        }
    }
    for (const auto& v : validate_sequence(seq)) {
        throw ParseError(K::Malformed, "frame " + std::to_string(v.frame.value_or(0)) + ": " + v.detail, v.frame);
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Temporal resampling

/// Number of real (non-padding) frames after resampling n frames to target.
inline constexpr std::size_t resampled_valid_length(std::size_t n, std::size_t target) {
    return n < target ? n : target;
}

/// Source frame index used for output frame i when n >= target.
inline constexpr std::size_t resample_source_index(std::size_t i, std::size_t n, std::size_t target) {
    if (target == 1) return (n - 1) / 2;
    // round(i (n-1) / (target-1)), halves rounded up, in exact integer arithmetic
    return (2 * i * (n - 1) + (target - 1)) / (2 * (target - 1));
}

/// Exactly `target` frames: uniform index selection when shortening,
/// trailing blank frames when the clip is too short.
inline PoseSequence resample_temporal(const PoseSequence& seq, std::size_t target) {
    if (target == 0) throw std::invalid_argument("resample_temporal: target length must be positive");
    if (seq.frames.empty()) throw std::invalid_argument("resample_temporal: empty sequence");
    PoseSequence out = seq;
    const std::size_t n = seq.frames.size();
    out.frames.clear();
    out.frames.reserve(target);
    if (n >= target) {
        for (std::size_t i = 0; i < target; ++i) out.frames.push_back(seq.frames[resample_source_index(i, n, target)]);
    } else {
        out.frames = seq.frames;
        out.frames.resize(target, PoseFrame::blank());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic glosses

struct SynthSpec {
    int n_classes = 10;
    int seqs_per_class = 40;
    int frames = 32;
    double nuisance_translation = 0.3;
    std::pair<double, double> nuisance_scale_range{0.5, 1.5};
    std::uint64_t seed = 0;

    void check() const {
        if (n_classes <= 0 || seqs_per_class <= 0 || frames <= 0)
            throw std::invalid_argument("SynthSpec: counts must be positive");
        if (nuisance_translation < 0.0) throw std::invalid_argument("SynthSpec: nuisance_translation must be >= 0");
        const auto [lo, hi] = nuisance_scale_range;
        if (!(lo > 0.0 && lo <= hi)) throw std::invalid_argument("SynthSpec: scale range must satisfy 0 < lo <= hi");
    }
};

/// Letters-only gloss name so the variant-suffix rule never merges classes.
inline std::string synth_gloss_name(int class_id) {
    std::string letters;
    int c = class_id;
    do {
        letters.insert(letters.begin(), static_cast<char>('A' + c % 26));
        c = c / 26 - 1;
    } while (c >= 0);
    return "SYN" + letters;
}

namespace detail {

struct HandShape {
    std::array<double, 5> curl;
    double spread;
    double rotation;
};

/// 21 joints in MediaPipe order (wrist, then 4 joints per finger from thumb),
/// wrist at the origin, fingers pointing up (negative image y).
inline std::array<Vec3, 21> hand_points(const HandShape& s, double size) {
    std::array<Vec3, 21> pts{};
    const std::array<double, 5> lengths{0.8, 1.0, 1.1, 1.0, 0.8};
    for (std::size_t f = 0; f < 5; ++f) {
        double angle = s.rotation + s.spread * (static_cast<double>(f) - 2.0);
        double x = 0, y = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            const double seg = size * lengths[f] * (j == 0 ? 1.4 : 0.8);
            x += seg * std::sin(angle);
            y -= seg * std::cos(angle);
            pts[1 + 4 * f + j] = {x, y, -0.004 * static_cast<double>(j + 1)};
            angle += s.curl[f] * 0.5;
        }
    }
    return pts;
}

/// Fixed face template: nose tip, 20-point outline, two 4-point eyes, 8-point mouth.
inline std::array<Vec3, 37> face_points() {
    std::array<Vec3, 37> pts{};
    pts[0] = {0.0, 0.0, -0.03};
    for (std::size_t i = 0; i < 20; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / 20.0;
        pts[1 + i] = {0.07 * std::sin(a), -0.01 + 0.09 * std::cos(a), 0.0};
    }
    for (std::size_t e = 0; e < 2; ++e) {
        const double cx = e == 0 ? -0.03 : 0.03;
        for (std::size_t i = 0; i < 4; ++i) {
            const double a = std::numbers::pi * static_cast<double>(i) / 2.0;
            pts[21 + 4 * e + i] = {cx + 0.012 * std::cos(a), -0.03 + 0.006 * std::sin(a), -0.01};
        }
    }
    for (std::size_t i = 0; i < 8; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / 8.0;
        pts[29 + i] = {0.025 * std::cos(a), 0.04 + 0.01 * std::sin(a), -0.01};
    }
    return pts;
}

/// Per-class motion template. The right hand traces one loop per clip whose
/// centre lies along some direction from the face. Classes come in groups of
/// five: within a group they differ only in reach (how far from the face the
/// loop sits, with the loop size proportional to it); each group has its own
/// direction and hand shape. Reach is a distance relative to body size,
/// so it is readable after per-frame scale normalization but confounded by
/// the global scale nuisance in raw coordinates.
struct GlossTemplate {
    HandShape shape;
    double amp_x, amp_y;  // image units
    double offset_x, offset_y;
    double twist;  // wrist rotation amplitude, radians
};

inline constexpr int kReachLevels = 5;

inline GlossTemplate gloss_template(std::uint64_t seed, int class_id) {
    const int level = class_id % kReachLevels;
    const int group = class_id / kReachLevels;
    nd::Rng rng = nd::Rng::derived(seed, {0x7e3a11c0ULL, static_cast<std::uint64_t>(group)});
    GlossTemplate g{};
    for (auto& c : g.shape.curl) c = rng.uniform(0.0, 1.0);
    g.shape.spread = rng.uniform(0.1, 0.35);
    g.shape.rotation = rng.uniform(-0.6, 0.6);
    const double reach = 0.08 * std::pow(1.25, level);  // neighbours 1.25x apart
    // Golden-ratio spacing keeps the directions of neighbouring groups apart.
    const double angle = -0.4 + 1.6 * std::fmod(0.6180339887 * group, 1.0);
    g.offset_x = reach * std::cos(angle);
    g.offset_y = reach * std::sin(angle);
    g.amp_x = g.amp_y = 0.35 * reach;
    g.twist = 0.25;
    return g;
}

}  // namespace detail

/// Deterministic synthetic clip of one gloss. Each class owns a right-hand
/// trajectory (see GlossTemplate); the face and left hand are shared. Every
/// instance gets small template perturbations and coordinate noise, then a
/// global similarity nuisance (translation of norm <= nuisance_translation,
/// scale from nuisance_scale_range about the face centre).
inline PoseSequence synth_gloss_sequence(const SynthSpec& spec, int class_id, int instance_id) {
    spec.check();
    if (class_id < 0 || class_id >= spec.n_classes)
        throw std::out_of_range("synth_gloss_sequence: class_id " + std::to_string(class_id) + " outside [0, " +
                                std::to_string(spec.n_classes) + ")");
    const auto tpl = detail::gloss_template(spec.seed, class_id);
    nd::Rng rng = nd::Rng::derived(
        spec.seed, {0x51a7e5ULL, static_cast<std::uint64_t>(class_id), static_cast<std::uint64_t>(instance_id)});

    // Instance-level perturbations of the template.
    auto shape = tpl.shape;
    for (auto& c : shape.curl) c += rng.normal(0.0, 0.05);
    shape.rotation += rng.normal(0.0, 0.05);
    const double amp_x = tpl.amp_x * rng.uniform(0.95, 1.05);
    const double amp_y = tpl.amp_y * rng.uniform(0.95, 1.05);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double off_x = tpl.offset_x + rng.normal(0.0, 0.004);
    const double off_y = tpl.offset_y + rng.normal(0.0, 0.004);
    const double hand_size = 0.02 * rng.uniform(0.95, 1.05);

    // Global nuisance.
    const double radius = spec.nuisance_translation * std::sqrt(rng.uniform());
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double tx = radius * std::cos(theta), ty = radius * std::sin(theta);
    const auto [slo, shi] = spec.nuisance_scale_range;
    const double scale = slo == shi ? slo : rng.uniform(slo, shi);
    const double noise = 0.002;

    const Vec3 face_centre{0.5, 0.3, 0.0};
    const auto face = detail::face_points();
    const auto left = detail::hand_points({{0.6, 0.6, 0.6, 0.6, 0.6}, 0.2, 0.3}, 0.02);
    auto place = [&](const Vec3& p) -> Vec3 {
        return {face_centre[0] + scale * (p[0] - face_centre[0]) + tx + rng.normal(0.0, noise),
                face_centre[1] + scale * (p[1] - face_centre[1]) + ty + rng.normal(0.0, noise),
                scale * p[2] + rng.normal(0.0, noise)};
    };

    PoseSequence seq;
    seq.video_id = "synth_c" + std::to_string(class_id) + "_i" + std::to_string(instance_id);
    seq.gloss = synth_gloss_name(class_id);
    seq.signer_id = "synth-signer-" + std::to_string(instance_id % 7);
    seq.fps = 30.0;
    seq.frames.resize(static_cast<std::size_t>(spec.frames));
    for (int t = 0; t < spec.frames; ++t) {
        const double u = spec.frames > 1 ? static_cast<double>(t) / static_cast<double>(spec.frames - 1) : 0.0;
        auto& fr = seq.frames[static_cast<std::size_t>(t)];
        fr.presence = {true, true, true};
        for (std::size_t j = 0; j < 37; ++j)
            fr.set_joint(42 + j, place({face_centre[0] + face[j][0], face_centre[1] + face[j][1], face[j][2]}));
        const Vec3 lw{face_centre[0] - 0.16, face_centre[1] + 0.38, 0.0};
        for (std::size_t j = 0; j < 21; ++j)
            fr.set_joint(j, place({lw[0] + left[j][0], lw[1] + left[j][1], left[j][2]}));
        auto moving = shape;
        moving.rotation += tpl.twist * std::sin(2.0 * std::numbers::pi * u + phase);
        const auto right = detail::hand_points(moving, hand_size);
        const Vec3 rw{face_centre[0] + off_x + amp_x * std::cos(2.0 * std::numbers::pi * u + phase),
                      face_centre[1] + off_y + amp_y * std::sin(2.0 * std::numbers::pi * u + phase), 0.0};
        for (std::size_t j = 0; j < 21; ++j)
            fr.set_joint(21 + j, place({rw[0] + right[j][0], rw[1] + right[j][1], right[j][2]}));
    }
    return seq;
}

}  // namespace signpose
