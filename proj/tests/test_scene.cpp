#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "ssp/error.hpp"
#include "ssp/flow.hpp"
#include "ssp/scene.hpp"

using namespace ssp;
using namespace ssp::scene;

namespace {

BinaryMask object_pixels(const SceneSequence& sc, const SceneObject& o, std::size_t t) {
    BinaryMask m(sc.config.grid, sc.config.grid);
    for (std::size_t r = o.row; r < o.row + sc.config.object_size; ++r)
        for (std::size_t c = o.col[t]; c < o.col[t] + sc.config.object_size; ++c) m.set(r, c, true);
    return m;
}

}  // namespace

TEST(Scene, Deterministic) {
    const auto a = gen_scene(17, {}), b = gen_scene(17, {});
    ASSERT_EQ(a.frames.size(), b.frames.size());
    for (std::size_t t = 0; t < a.frames.size(); ++t) {
        EXPECT_EQ(a.frames[t], b.frames[t]);
        EXPECT_EQ(a.gt.mask(t), b.gt.mask(t));
    }
    EXPECT_EQ(a.audio, b.audio);
    EXPECT_EQ(a.prompt1.text, b.prompt1.text);
    EXPECT_NE(a.frames[0], gen_scene(18, {}).frames[0]);
}

TEST(Scene, GroundTruthIsSoundingObjectPixels) {
    SceneConfig cfg;
    cfg.stationary_prob = 0.5;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto sc = gen_scene(seed, cfg);
        for (std::size_t t = 0; t < cfg.frames; ++t) {
            BinaryMask expect(cfg.grid, cfg.grid);
            for (const auto& o : sc.objects) {
                if (!o.sounding()) continue;
                const auto m = object_pixels(sc, o, t);
                for (std::size_t i = 0; i < m.size(); ++i)
                    if (m[i]) expect.set(i / cfg.grid, i % cfg.grid, true);
            }
            EXPECT_EQ(sc.gt.mask(t), expect);
        }
    }
}

TEST(Scene, NoStationaryMeansMovingObjectPixels) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto sc = gen_scene(seed, {});
        const SceneObject* mover = nullptr;
        for (const auto& o : sc.objects) {
            EXPECT_NE(o.role, Role::StationarySounder);
            if (o.role == Role::MovingSounder) mover = &o;
        }
        ASSERT_NE(mover, nullptr);
        for (std::size_t t = 0; t < sc.config.frames; ++t) EXPECT_EQ(sc.gt.mask(t), object_pixels(sc, *mover, t));
    }
}

TEST(Scene, StationarySounderIsInvisibleToFlow) {
    SceneConfig cfg;
    cfg.moving_sounder = false;
    cfg.stationary_prob = 1.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto sc = gen_scene(seed, cfg);
        const auto masks = flow_masks(sc.frames);
        const auto flows = temporal_align(frame_diff_flow(sc.frames));
        for (std::size_t t = 0; t < cfg.frames; ++t) {
            const auto& gt = sc.gt.mask(t);
            ASSERT_GT(gt.count(), 0u);
            EXPECT_EQ(postmask_label(masks[t], gt).count(), 0u);
            for (std::size_t i = 0; i < gt.size(); ++i) {
                // Only the per-frame pixel noise moves.
                if (gt[i]) EXPECT_LE(flows[t][i], 2 * cfg.pixel_noise);
            }
        }
    }
}

TEST(Scene, MovingSounderIsCoveredByFlow) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto sc = gen_scene(seed, {});
        const auto masks = flow_masks(sc.frames);
        for (std::size_t t = 0; t < sc.config.frames; ++t) {
            EXPECT_GT(postmask_label(masks[t], sc.gt.mask(t)).count(), 0u);
        }
    }
}

TEST(Scene, AudioIsSumOfClassVectorsPlusNoise) {
    for (std::size_t a = 0; a < kNumClasses; ++a) {
        const auto va = class_audio(a, 16);
        for (std::size_t b = 0; b < kNumClasses; ++b) {
            const auto vb = class_audio(b, 16);
            double dot = 0;
            for (std::size_t i = 0; i < 16; ++i) dot += va[i] * vb[i];
            EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-12);
        }
    }
    SceneConfig cfg;
    cfg.stationary_prob = 1.0;
    const auto sc = gen_scene(5, cfg);
    const auto sounding = sc.sounding_classes();
    EXPECT_EQ(sounding.size(), 2u);
    std::vector<double> clean(16, 0.0);
    for (auto k : sounding) {
        const auto v = class_audio(k, 16);
        for (std::size_t i = 0; i < 16; ++i) clean[i] += v[i];
    }
    for (const auto& a : sc.audio) {
        for (std::size_t i = 0; i < 16; ++i) EXPECT_LT(std::abs(a[i] - clean[i]), 6 * cfg.audio_noise);
    }
}

TEST(Scene, PromptsDescribeObjects) {
    SceneConfig cfg;
    cfg.stationary_prob = 1.0;
    const auto sc = gen_scene(9, cfg);
    for (const auto& o : sc.objects) {
        const std::string phrase = std::string("a ") + kClassNames[o.class_id] + (o.moving() ? " moving" : " standing still");
        EXPECT_NE(sc.prompt1.text.find(phrase), std::string::npos) << sc.prompt1.text;
    }
    std::string expect;
    for (auto k : sc.sounding_classes()) expect += (expect.empty() ? "" : ", ") + std::string(kClassNames[k]);
    EXPECT_EQ(sc.prompt2.text, expect + ".");
    EXPECT_EQ(sc.prompt2.kind, vta::PromptKind::SoundingObjects);
}

TEST(Scene, DecoyWearsSounderColorAndNeverSounds) {
    SceneConfig cfg;
    cfg.decoy_prob = 1.0;
    const auto sc = gen_scene(3, cfg);
    const SceneObject *decoy = nullptr, *mover = nullptr;
    for (const auto& o : sc.objects) {
        if (o.role == Role::Decoy) decoy = &o;
        if (o.role == Role::MovingSounder) mover = &o;
    }
    ASSERT_TRUE(decoy && mover);
    EXPECT_EQ(decoy->class_id, mover->class_id);
    EXPECT_FALSE(decoy->sounding());
    for (std::size_t t = 0; t < cfg.frames; ++t) {
        EXPECT_EQ(postmask_label(object_pixels(sc, *decoy, t), sc.gt.mask(t)).count(), 0u);
    }
}

TEST(Scene, ConfigValidation) {
    SceneConfig c;
    c.grid = 24;
    EXPECT_THROW(c.validate(), ValueError);
    c = {};
    c.speed = 12;
    EXPECT_THROW(c.validate(), ValueError);
    c = {};
    c.decoy_prob = 1.5;
    EXPECT_THROW(c.validate(), ValueError);
    c = {};
    c.moving_sounder = false;
    EXPECT_THROW(c.validate(), ValueError);
    c = {};
    c.audio_dim = 3;
    EXPECT_THROW(c.validate(), ValueError);
}

TEST(GroundTruth, ReadsUnderGuardAreLeaks) {
    const auto sc = gen_scene(1, {});
    const auto before = sc.gt.accesses();
    (void)sc.gt.mask(0);
    EXPECT_EQ(sc.gt.accesses(), before + 1);
    EXPECT_EQ(sc.gt.leaks(), 0u);
    {
        InferenceGuard g;
        EXPECT_TRUE(InferenceGuard::active());
        (void)sc.gt.labels(1);
    }
    EXPECT_FALSE(InferenceGuard::active());
    EXPECT_EQ(sc.gt.leaks(), 1u);
    // A guard on another thread does not mark this thread's reads.
    std::thread th([] {
        InferenceGuard g;
        EXPECT_TRUE(InferenceGuard::active());
    });
    th.join();
    (void)sc.gt.mask(2);
    EXPECT_EQ(sc.gt.leaks(), 1u);
}
