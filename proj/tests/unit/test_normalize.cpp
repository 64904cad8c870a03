// Copyright 2026 The signpose Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "signpose/normalize.hpp"
#include "test_support.hpp"

using namespace signpose;
using signpose::testing::random_sequence;
using signpose::testing::uniform_frame;

namespace {

constexpr auto kCom = NormalizationStrategy::PerFrameCenterOfMass;

/// Frame where only the right hand is present, with the given joints placed
/// first and the remaining right-hand joints duplicating the last one.
PoseFrame right_hand_frame(std::vector<Vec3> joints) {
    PoseFrame f;
    f.presence = {false, true, false};
    for (std::size_t j = 21; j < 42; ++j) f.set_joint(j, joints[std::min(j - 21, joints.size() - 1)]);
    return f;
}

PoseSequence one_frame(const PoseFrame& f) {
    PoseSequence s;
    s.gloss = "X";
    s.frames = {f};
    return s;
}

double max_abs_visible(const PoseFrame& f) {
    double m = 0;
    for (std::size_t j = 0; j < kJointCount; ++j)
        if (f.joint_visible(j))
            for (std::size_t a = 0; a < 3; ++a) m = std::max(m, std::abs(f.joint(j)[a]));
    return m;
}

void expect_near_frames(const PoseSequence& a, const PoseSequence& b, double tol) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t f = 0; f < a.size(); ++f) {
        ASSERT_EQ(a.frames[f].presence, b.frames[f].presence);
        for (std::size_t i = 0; i < kCoordsPerFrame; ++i)
            ASSERT_NEAR(a.frames[f].coords[i], b.frames[f].coords[i], tol) << "frame " << f << " coord " << i;
    }
}

PoseSequence map_visible(PoseSequence s, const std::function<Vec3(std::size_t, const Vec3&)>& fn) {
    for (std::size_t f = 0; f < s.size(); ++f)
        for (std::size_t j = 0; j < kJointCount; ++j)
            if (s.frames[f].joint_visible(j)) s.frames[f].set_joint(j, fn(f, s.frames[f].joint(j)));
    return s;
}

}  // namespace

TEST(PerFrameCom, Examples) {
    PoseFrame f;
    f.presence = {true, false, false};
    // 21 left-hand joints: 10 at the origin, 10 at (2,2,2), one at (1,1,1).
    for (std::size_t j = 0; j < 21; ++j) f.set_joint(j, j < 10 ? Vec3{0, 0, 0} : (j < 20 ? Vec3{2, 2, 2} : Vec3{1, 1, 1}));
    EXPECT_EQ(per_frame_com(f), (Vec3{1, 1, 1}));

    EXPECT_EQ(per_frame_com(uniform_frame({0.5, 0.5, 0.0})), (Vec3{0.5, 0.5, 0.0}));
    EXPECT_THROW(per_frame_com(PoseFrame::blank()), DegenerateInputError);
}

TEST(PerFrameCom, AbsentZerosAreExcluded) {
    PoseFrame f = right_hand_frame({{0.6, 0.4, 0.2}});
    EXPECT_NEAR(per_frame_com(f)[0], 0.6, 1e-15);
    EXPECT_NEAR(per_frame_com(f)[1], 0.4, 1e-15);
}

TEST(FaceCom, Examples) {
    EXPECT_EQ(face_com(uniform_frame({0.5, 0.25, -0.125})), (Vec3{0.5, 0.25, -0.125}));  // exact in binary

    PoseFrame sym = uniform_frame({0.5, 0.5, 0.0});
    // 36 points in +/- pairs around (0.5, 0.5, 0) and one at the centre.
    for (std::size_t k = 0; k < 18; ++k) {
        const double dx = 0.01 * static_cast<double>(k + 1), dy = -0.02 * static_cast<double>(k % 5);
        sym.set_joint(43 + 2 * k, {0.5 + dx, 0.5 + dy, 0.1});
        sym.set_joint(44 + 2 * k, {0.5 - dx, 0.5 - dy, -0.1});
    }
    const auto c = face_com(sym);
    EXPECT_NEAR(c[0], 0.5, 1e-15);
    EXPECT_NEAR(c[1], 0.5, 1e-15);
    EXPECT_NEAR(c[2], 0.0, 1e-15);

    PoseFrame no_face = sym;
    no_face.presence[2] = false;
    EXPECT_THROW(face_com(no_face), DegenerateInputError);
}

TEST(PerFrameScale, Examples) {
    EXPECT_EQ(per_frame_scale(right_hand_frame({{0, -2, 0}, {0, 2, 0}})), 2.0);
    EXPECT_EQ(per_frame_scale(right_hand_frame({{0, 0, 0}})), 1.0);
    EXPECT_EQ(per_frame_scale(right_hand_frame({{-1, 0, 0}, {1, 0, 0}})), 1.0);
    EXPECT_EQ(per_frame_scale(PoseFrame::blank()), 1.0);
}

TEST(NormalizeSequence, NoseExample) {
    PoseFrame f = uniform_frame({0.5, 0.5, 0.0});
    f.set_joint(21, {0.7, 0.5, 0.0});
    const auto out = normalize_sequence(one_frame(f), NormalizationStrategy::GlobalNoseAnchored);
    EXPECT_NEAR(out.frames[0].joint(21)[0], 0.2, 1e-15);
    EXPECT_EQ(out.frames[0].joint(21)[1], 0.0);
    EXPECT_EQ(out.frames[0].joint(kHolistic79.nose_index), (Vec3{0, 0, 0}));
}

TEST(NormalizeSequence, ComExamples) {
    // Joints {(1,1,0), (3,1,0)} with equal weight.
    PoseFrame a;
    a.presence = {true, true, false};
    for (std::size_t j = 0; j < 21; ++j) a.set_joint(j, {1, 1, 0});
    for (std::size_t j = 21; j < 42; ++j) a.set_joint(j, {3, 1, 0});
    auto out = normalize_sequence(one_frame(a), kCom);
    EXPECT_EQ(out.frames[0].joint(0), (Vec3{-1, 0, 0}));
    EXPECT_EQ(out.frames[0].joint(21), (Vec3{1, 0, 0}));
    for (std::size_t j = 42; j < kJointCount; ++j) EXPECT_EQ(out.frames[0].joint(j), (Vec3{0, 0, 0}));

    PoseFrame b = a;
    for (std::size_t j = 0; j < 21; ++j) b.set_joint(j, {0, 0, 0});
    for (std::size_t j = 21; j < 42; ++j) b.set_joint(j, {0, 4, 0});
    out = normalize_sequence(one_frame(b), kCom);
    EXPECT_EQ(out.frames[0].joint(0), (Vec3{0, -1, 0}));
    EXPECT_EQ(out.frames[0].joint(21), (Vec3{0, 1, 0}));
}

TEST(NormalizeSequence, FaceUsesOneAnchorForTheWholeClip) {
    PoseSequence s;
    s.gloss = "X";
    s.frames = {uniform_frame({0.2, 0.2, 0.0}), uniform_frame({0.4, 0.6, 0.0}), PoseFrame::blank()};
    s.frames[1].presence[2] = false;  // face absent here, anchor comes from frame 0 only
    for (std::size_t j = 42; j < kJointCount; ++j) s.frames[1].set_joint(j, {0, 0, 0});
    const auto out = normalize_sequence(s, NormalizationStrategy::FaceCentered);
    EXPECT_NEAR(out.frames[0].joint(0)[0], 0.0, 1e-15);
    EXPECT_NEAR(out.frames[1].joint(0)[0], 0.2, 1e-15);
    EXPECT_NEAR(out.frames[1].joint(0)[1], 0.4, 1e-15);
    EXPECT_EQ(out.frames[2], PoseFrame::blank());
    EXPECT_EQ(out.frames[1].joint(50), (Vec3{0, 0, 0}));

    s.frames = {uniform_frame({0.2, 0.2, 0.0}), uniform_frame({0.4, 0.6, 0.0})};
    const auto both = normalize_sequence(s, NormalizationStrategy::FaceCentered);
    EXPECT_NEAR(both.frames[0].joint(0)[0], -0.1, 1e-15);
    EXPECT_NEAR(both.frames[1].joint(0)[1], 0.2, 1e-15);
}

TEST(NormalizeSequence, FacelessClipsAreDegenerateForFaceAnchors) {
    PoseSequence s = one_frame(right_hand_frame({{0.1, 0.2, 0.3}}));
    s.video_id = "clip-77";
    for (auto strat : {NormalizationStrategy::GlobalNoseAnchored, NormalizationStrategy::FaceCentered}) {
        try {
            normalize_sequence(s, strat);
            ADD_FAILURE() << "expected DegenerateInputError";
        } catch (const DegenerateInputError& e) {
            EXPECT_NE(std::string(e.what()).find(to_string(strat)), std::string::npos) << e.what();
            EXPECT_NE(std::string(e.what()).find("clip-77"), std::string::npos) << e.what();
        }
    }
    EXPECT_NO_THROW(normalize_sequence(s, kCom));
}

TEST(NormalizeSequence, NoseFallsBackToNearestFaceFrame) {
    PoseSequence s;
    s.gloss = "X";
    s.frames = {right_hand_frame({{0.3, 0.3, 0}}), uniform_frame({0.5, 0.5, 0}), right_hand_frame({{0.9, 0.1, 0}})};
    const auto out = normalize_sequence(s, NormalizationStrategy::GlobalNoseAnchored);
    EXPECT_NEAR(out.frames[0].joint(21)[0], -0.2, 1e-15);  // first later face frame
    EXPECT_NEAR(out.frames[2].joint(21)[0], 0.4, 1e-15);   // nearest earlier face frame
}

TEST(NormalizeSequence, StrategyNamesRoundTrip) {
    for (auto s : {NormalizationStrategy::Raw, NormalizationStrategy::GlobalNoseAnchored,
                   NormalizationStrategy::FaceCentered, kCom})
        EXPECT_EQ(parse_normalization(to_string(s)), s);
    EXPECT_EQ(parse_normalization("center"), std::nullopt);
}

// Property suites on random sequences with random group presence.

TEST(NormalizeProperties, ComCentresAndBoundsEveryFrame) {
    nd::Rng rng(101);
    for (int trial = 0; trial < 300; ++trial) {
        const auto out = normalize_sequence(random_sequence(rng, 10, 0.7, false), kCom);
        EXPECT_TRUE(validate_sequence(out).empty());
        for (const auto& f : out.frames) {
            if (!f.any_present()) continue;
            for (double c : per_frame_com(f)) ASSERT_LT(std::abs(c), 1e-9);
            ASSERT_NEAR(max_abs_visible(f), 1.0, 1e-12);
        }
    }
}

TEST(NormalizeProperties, ComIsTranslationAndScaleInvariant) {
    nd::Rng rng(102);
    for (int trial = 0; trial < 200; ++trial) {
        const auto seq = random_sequence(rng, 8, 0.7, false);
        const auto base = normalize_sequence(seq, kCom);
        const Vec3 t{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        const auto shifted = map_visible(seq, [&](std::size_t, const Vec3& p) {
            return Vec3{p[0] + t[0], p[1] + t[1], p[2] + t[2]};
        });
        expect_near_frames(normalize_sequence(shifted, kCom), base, 1e-9);

        const double c = std::exp(rng.uniform(-3, 3));
        const auto scaled = map_visible(seq, [&](std::size_t f, const Vec3& p) {
            if (!seq.frames[f].any_present()) return p;
            const auto m = per_frame_com(seq.frames[f]);
            return Vec3{m[0] + c * (p[0] - m[0]), m[1] + c * (p[1] - m[1]), m[2] + c * (p[2] - m[2])};
        });
        expect_near_frames(normalize_sequence(scaled, kCom), base, 1e-9);
        expect_near_frames(normalize_sequence(base, kCom), base, 1e-9);
    }
}

TEST(NormalizeProperties, NoseIsExactlyAtOriginAndRawIsIdentity) {
    nd::Rng rng(103);
    for (int trial = 0; trial < 300; ++trial) {
        const auto seq = random_sequence(rng, 8, 0.7, true);
        const auto out = normalize_sequence(seq, NormalizationStrategy::GlobalNoseAnchored);
        for (const auto& f : out.frames) {
            if (f.present(Group::Face)) {
                ASSERT_EQ(f.joint(kHolistic79.nose_index), (Vec3{0, 0, 0}));
            }
        }
        EXPECT_EQ(normalize_sequence(seq, NormalizationStrategy::Raw), seq);
        EXPECT_TRUE(validate_sequence(out).empty());
        EXPECT_TRUE(validate_sequence(normalize_sequence(seq, NormalizationStrategy::FaceCentered)).empty());
    }
}

TEST(NormalizeProperties, FaceAnchorEqualsOracleMean) {
    nd::Rng rng(104);
    for (int trial = 0; trial < 100; ++trial) {
        const auto seq = random_sequence(rng, 8, 0.7, true);
        // Oracle: average every face coordinate over face frames and joints in one pass.
        Vec3 sum{0, 0, 0};
        double n = 0;
        for (const auto& f : seq.frames)
            if (f.present(Group::Face))
                for (std::size_t j = 42; j < kJointCount; ++j, n += 1)
                    for (std::size_t a = 0; a < 3; ++a) sum[a] += f.joint(j)[a];
        const auto out = normalize_sequence(seq, NormalizationStrategy::FaceCentered);
        for (std::size_t f = 0; f < seq.size(); ++f)
            for (std::size_t j = 0; j < kJointCount; ++j) {
                if (!seq.frames[f].joint_visible(j)) continue;
                for (std::size_t a = 0; a < 3; ++a)
                    ASSERT_NEAR(out.frames[f].joint(j)[a], seq.frames[f].joint(j)[a] - sum[a] / n, 1e-12);
            }
    }
}
